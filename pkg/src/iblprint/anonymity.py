"""Fingerprinting anonymity of a set of measured values.

Values are binned with width ``epsilon``; the entropy of the bin
distribution is maximized over all bin origins, and

    A(X, eps) = 1 - H(X) / log2(n).

Bins are left-closed: ``x`` falls into bin ``floor((x - offset) / eps)``.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

import numpy as np

# Entropies closer than this count as ties; the smallest offset wins.
TIE_TOL = 1e-12


class AnonymityError(ValueError):
    pass


class EmptyData(AnonymityError):
    pass


class NonPositiveEpsilon(AnonymityError):
    pass


class SinglePoint(AnonymityError):
    """A(X, eps) is 0/0 for a single observation."""


@dataclass(frozen=True)
class Histogram:
    epsilon_ms: float
    offset_ms: float
    bins: tuple[tuple[int, int], ...]
    n: int

    @property
    def counts(self) -> list[int]:
        return [c for _, c in self.bins]

    def edges(self, index: int) -> tuple[float, float]:
        lo = self.offset_ms + index * self.epsilon_ms
        return lo, lo + self.epsilon_ms


@dataclass(frozen=True)
class AnonymityReport:
    n: int
    epsilon_ms: float
    best_offset_ms: float
    entropy_bits: float
    anonymity: float
    distinguishable_devices: float
    histogram: Histogram

    def to_json(self) -> str:
        d = asdict(self)
        d["histogram"]["bins"] = [list(b) for b in self.histogram.bins]
        return json.dumps(d, indent=2)


def _check(values: Sequence[float], epsilon: float) -> np.ndarray:
    x = np.asarray(values, dtype=float).ravel()
    if x.size == 0:
        raise EmptyData("no data points")
    if not epsilon > 0:
        raise NonPositiveEpsilon(f"epsilon must be positive, got {epsilon}")
    return x


def histogram(values: Sequence[float], epsilon: float, offset: float = 0.0) -> Histogram:
    x = _check(values, epsilon)
    if not 0 <= offset < epsilon:
        raise ValueError("offset must lie in [0, epsilon)")
    idx = np.floor((x - offset) / epsilon).astype(np.int64)
    counts = Counter(idx.tolist())
    return Histogram(float(epsilon), float(offset), tuple(sorted(counts.items())), int(x.size))


def entropy_from_counts(counts: Iterable[int]) -> float:
    c = np.asarray(list(counts), dtype=float)
    n = c.sum()
    p = c[c > 0] / n
    return float(max(-(p * np.log2(p)).sum(), 0.0))


def entropy(h: Histogram) -> float:
    """Shannon entropy of the bin distribution, in bits."""
    return entropy_from_counts(h.counts)


def candidate_offsets(values: Sequence[float], epsilon: float) -> np.ndarray:
    """Offsets in [0, eps) that between them realize every distinct binning.

    The binning only changes when the offset crosses a residue
    ``x mod eps``, so the residues, the midpoints between consecutive
    residues and 0 cover every partition.
    """
    x = _check(values, epsilon)
    r = np.unique(np.mod(x, epsilon))
    r = r[r < epsilon]
    mids = (r[:-1] + r[1:]) / 2
    cands = np.unique(np.concatenate(([0.0], r, mids)))
    return cands[(cands >= 0) & (cands < epsilon)]


def _entropies(x: np.ndarray, epsilon: float, offsets: np.ndarray) -> np.ndarray:
    """Entropy of the binning for each offset (one row per offset)."""
    n = x.size
    idx = np.floor((x[None, :] - offsets[:, None]) / epsilon)
    idx.sort(axis=1)
    new_run = np.ones_like(idx, dtype=bool)
    new_run[:, 1:] = idx[:, 1:] != idx[:, :-1]
    run_id = np.cumsum(new_run, axis=1) - 1
    rows = np.repeat(np.arange(offsets.size), n)
    flat = rows * n + run_id.ravel()
    counts = np.bincount(flat, minlength=offsets.size * n).reshape(offsets.size, n)
    c = counts.astype(float)
    with np.errstate(divide="ignore", invalid="ignore"):
        clog = np.where(c > 0, c * np.log2(c), 0.0)
    h = math.log2(n) - clog.sum(axis=1) / n
    return np.maximum(h, 0.0)


def max_entropy(values: Sequence[float], epsilon: float) -> tuple[float, float]:
    """Maximal histogram entropy over bin origins; returns (bits, offset)."""
    x = _check(values, epsilon)
    offsets = candidate_offsets(x, epsilon)
    # Chunked so the offset x point matrix stays small for large inputs.
    chunk = max(1, 2_000_000 // x.size)
    h = np.concatenate(
        [_entropies(x, epsilon, offsets[s : s + chunk]) for s in range(0, offsets.size, chunk)]
    )
    best_off = float(offsets[np.flatnonzero(h >= h.max() - TIE_TOL)[0]])
    # Re-evaluate through histogram() so the report is self-consistent.
    best_h = entropy(histogram(x, epsilon, best_off))
    return best_h, best_off


def fingerprinting_anonymity(values: Sequence[float], epsilon: float) -> AnonymityReport:
    x = _check(values, epsilon)
    if x.size < 2:
        raise SinglePoint("anonymity is undefined for a single data point")
    h, off = max_entropy(x, epsilon)
    return anonymity_from_entropy(h, int(x.size), epsilon, off, histogram(x, epsilon, off))


def anonymity_from_entropy(
    entropy_bits: float,
    n: int,
    epsilon: float = float("nan"),
    offset: float = 0.0,
    hist: Histogram | None = None,
) -> AnonymityReport:
    """Build a report from a known entropy, e.g. one quoted from a field study."""
    if n < 2:
        raise SinglePoint("anonymity is undefined for n < 2")
    a = 1.0 - entropy_bits / math.log2(n)
    a = min(max(a, 0.0), 1.0)
    if hist is None:
        hist = Histogram(epsilon, offset, (), n)
    return AnonymityReport(n, epsilon, offset, entropy_bits, a, 2.0**entropy_bits, hist)


def format_report(rep: AnonymityReport) -> str:
    return (
        f"n                        {rep.n}\n"
        f"epsilon (ms)             {rep.epsilon_ms:.4f}\n"
        f"best bin offset (ms)     {rep.best_offset_ms:.6f}\n"
        f"bins occupied            {len(rep.histogram.bins)}\n"
        f"max entropy H (bits)     {rep.entropy_bits:.4f}\n"
        f"anonymity A              {rep.anonymity:.4f}\n"
        f"distinguishable devices  {rep.distinguishable_devices:.1f}\n"
    )


def histogram_svg(h: Histogram, width: int = 640, height: int = 320) -> str:
    """Bar chart of a histogram: IBL mean (ms) on x, pseudonyms per bin on y."""
    ml, mr, mt, mb = 50, 15, 15, 45
    pw, ph = width - ml - mr, height - mt - mb
    if h.bins:
        lo_idx, hi_idx = h.bins[0][0], h.bins[-1][0]
        ymax = max(h.counts)
    else:
        lo_idx = hi_idx = 0
        ymax = 1
    x0, x1 = h.edges(lo_idx)[0], h.edges(hi_idx)[1]
    span = x1 - x0

    def sx(v: float) -> float:
        return ml + (v - x0) / span * pw

    def sy(c: float) -> float:
        return mt + ph - c / ymax * ph

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
    ]
    for idx, c in h.bins:
        a, b = h.edges(idx)
        parts.append(
            f'<rect x="{sx(a):.2f}" y="{sy(c):.2f}" width="{max(sx(b) - sx(a), 0.5):.2f}" '
            f'height="{sy(0) - sy(c):.2f}" fill="#3a6ea5"/>'
        )
    parts.append(
        f'<line x1="{ml}" y1="{mt + ph}" x2="{ml + pw}" y2="{mt + ph}" stroke="black"/>'
    )
    parts.append(f'<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{mt + ph}" stroke="black"/>')
    for k in range(5):
        v = x0 + span * k / 4
        parts.append(
            f'<text x="{sx(v):.2f}" y="{mt + ph + 15}" text-anchor="middle">{v:.2f}</text>'
        )
    for k in range(ymax + 1):
        if ymax > 10 and k % math.ceil(ymax / 10):
            continue
        parts.append(
            f'<text x="{ml - 6}" y="{sy(k) + 4:.2f}" text-anchor="end">{k}</text>'
        )
    parts.append(
        f'<text x="{ml + pw / 2}" y="{height - 8}" text-anchor="middle">IBL mean in ms</text>'
    )
    parts.append(
        f'<text x="12" y="{mt + ph / 2}" text-anchor="middle" '
        f'transform="rotate(-90 12 {mt + ph / 2})">Pseudonyms in bin</text>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
