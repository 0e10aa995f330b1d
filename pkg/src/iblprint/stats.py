"""Per-track and per-device IBL statistics.

Standard deviations are population (ddof=0) throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .capture import PseudonymTrack
from .frames import MacAddress


class EmptyTrack(ValueError):
    pass


class EmptyInput(ValueError):
    pass


@dataclass(frozen=True)
class TrackSummary:
    mac: MacAddress
    sample_count: int
    ibl_mean_ms: float
    ibl_stdev_ms: float


@dataclass(frozen=True)
class DeviceSummary:
    label: str
    pseudonym_count: int
    mean_of_means_ms: float
    double_stdev_ms: float


def _mean_pstdev(values: Sequence[float]) -> tuple[float, float]:
    arr = np.asarray(values, dtype=float)
    mean = math.fsum(arr) / arr.size
    var = math.fsum((arr - mean) ** 2) / arr.size
    return mean, math.sqrt(var)


def summarize_track(track: PseudonymTrack) -> TrackSummary:
    if not track.ibl_samples_ms:
        raise EmptyTrack(f"track {track.mac} has no IBL samples")
    mean, sd = _mean_pstdev(track.ibl_samples_ms)
    return TrackSummary(track.mac, len(track.ibl_samples_ms), mean, sd)


def summarize_device(summaries: Iterable[TrackSummary], label: str) -> DeviceSummary:
    """Aggregate one device's pseudonym cycles, each weighted equally."""
    means = [s.ibl_mean_ms for s in summaries]
    if not means:
        raise EmptyInput(f"no tracks for device {label!r}")
    mean, sd = _mean_pstdev(means)
    return DeviceSummary(label, len(means), mean, 2 * sd)


def precision_epsilon(devices: Iterable[DeviceSummary | float]) -> float:
    """Mean of the per-device double standard deviations.

    Accepts DeviceSummary objects or bare double-stdev values.
    """
    vals = [d.double_stdev_ms if isinstance(d, DeviceSummary) else float(d) for d in devices]
    if not vals:
        raise EmptyInput("precision_epsilon needs at least one device")
    return math.fsum(vals) / len(vals)


def format_device_table(devices: Iterable[DeviceSummary]) -> str:
    rows = [("Device", "Pseudonyms", "Mean", "Double stdev.")]
    rows += [
        (d.label, str(d.pseudonym_count), f"{d.mean_of_means_ms:.2f}", f"{d.double_stdev_ms:.2f}")
        for d in devices
    ]
    widths = [max(len(r[i]) for r in rows) for i in range(4)]
    lines = []
    for k, r in enumerate(rows):
        lines.append(
            "  ".join(
                c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(r, widths))
            ).rstrip()
        )
        if k == 0:
            lines.append("-" * len(lines[0]))
    return "\n".join(lines) + "\n"
