"""Linking pseudonym tracks across rotations.

Two tracks are linked when their IBL means agree within ``epsilon`` and
the successor appears at most ``max_gap_s`` after the predecessor was last
seen. Candidates are matched greedily, closest means first, so each track
gets at most one predecessor and one successor.
"""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Sequence

from .capture import PseudonymTrack
from .frames import MacAddress
from .sim import GroundTruthEntry
from .stats import summarize_track


class UnknownMac(LookupError):
    pass


@dataclass(frozen=True)
class LinkHypothesis:
    predecessor: MacAddress
    successor: MacAddress
    mean_gap_ms: float
    time_gap_s: float
    score: float


@dataclass(frozen=True)
class LinkEvaluation:
    true_positive: int
    false_positive: int
    false_negative: int

    @property
    def precision(self) -> float:
        denom = self.true_positive + self.false_positive
        return self.true_positive / denom if denom else 1.0

    @property
    def recall(self) -> float:
        denom = self.true_positive + self.false_negative
        return self.true_positive / denom if denom else 1.0


def link_tracks(
    tracks: Sequence[PseudonymTrack], epsilon: float = 0.25, max_gap_s: float = 30.0
) -> list[LinkHypothesis]:
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    if not max_gap_s > 0:
        raise ValueError("max_gap_s must be positive")
    means = {t.mac: summarize_track(t).ibl_mean_ms for t in tracks}
    ordered = sorted(tracks, key=lambda t: (t.first_seen_us, t.mac))
    max_gap_us = max_gap_s * 1e6

    candidates = []
    for a in ordered:
        for b in ordered:
            if a.mac == b.mac:
                continue
            gap_us = b.first_seen_us - a.last_seen_us
            if gap_us < 0 or gap_us > max_gap_us:
                continue
            mean_gap = abs(means[a.mac] - means[b.mac])
            if mean_gap > epsilon:
                continue
            candidates.append((mean_gap, gap_us, a.mac, b.mac))
    candidates.sort()

    has_succ: set[MacAddress] = set()
    has_pred: set[MacAddress] = set()
    links = []
    for mean_gap, gap_us, pred, succ in candidates:
        if pred in has_succ or succ in has_pred:
            continue
        has_succ.add(pred)
        has_pred.add(succ)
        links.append(LinkHypothesis(pred, succ, mean_gap, gap_us / 1e6, 1.0 - mean_gap / epsilon))
    return links


def chains(links: Iterable[LinkHypothesis]) -> list[list[MacAddress]]:
    """Follow links into MAC sequences (one per inferred device trajectory)."""
    succ = {l.predecessor: l.successor for l in links}
    heads = sorted(set(succ) - set(succ.values()))
    out = []
    for head in heads:
        seq = [head]
        while seq[-1] in succ:
            seq.append(succ[seq[-1]])
        out.append(seq)
    return out


def render_chains(links: Iterable[LinkHypothesis]) -> str:
    return "".join(" -> ".join(str(m) for m in seq) + "\n" for seq in chains(links))


def true_pairs(
    ground_truth: Iterable[GroundTruthEntry], observed: Iterable[MacAddress] | None = None
) -> set[tuple[MacAddress, MacAddress]]:
    """Consecutive same-device identity pairs, both observed."""
    per_device: dict[str, list[GroundTruthEntry]] = defaultdict(list)
    for e in ground_truth:
        per_device[e.label].append(e)
    seen = None if observed is None else set(observed)
    pairs = set()
    for entries in per_device.values():
        entries.sort(key=lambda e: e.start_us)
        for a, b in zip(entries, entries[1:]):
            if seen is None or (a.mac in seen and b.mac in seen):
                pairs.add((a.mac, b.mac))
    return pairs


def evaluate_links(
    hypotheses: Iterable[LinkHypothesis],
    ground_truth: Sequence[GroundTruthEntry],
    observed: Iterable[MacAddress] | None = None,
) -> LinkEvaluation:
    """Score hypotheses against ground truth.

    ``observed`` restricts false negatives to pairs whose tracks both
    survived the pipeline; by default every ground-truth MAC counts.
    """
    known = {e.mac for e in ground_truth}
    hypotheses = list(hypotheses)
    for h in hypotheses:
        for mac in (h.predecessor, h.successor):
            if mac not in known:
                raise UnknownMac(str(mac))
    truth = true_pairs(ground_truth, observed)
    claimed = {(h.predecessor, h.successor) for h in hypotheses}
    tp = len(claimed & truth)
    return LinkEvaluation(tp, len(claimed) - tp, len(truth - claimed))


def device_of(ground_truth: Iterable[GroundTruthEntry]) -> dict[MacAddress, str]:
    return {e.mac: e.label for e in ground_truth}


def links_to_json(links: Iterable[LinkHypothesis]) -> str:
    return "".join(
        json.dumps(
            {
                "predecessor": str(l.predecessor),
                "successor": str(l.successor),
                "mean_gap_ms": round(l.mean_gap_ms, 6),
                "time_gap_s": round(l.time_gap_s, 6),
                "score": round(l.score, 6),
            },
            separators=(",", ":"),
        )
        + "\n"
        for l in links
    )
