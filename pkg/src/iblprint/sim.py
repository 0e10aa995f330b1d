"""Seeded generator of GAEN broadcast traffic.

Each device walks through identity intervals (random MAC + pseudonym,
rotated together). Within an interval the device draws its own IBL mean
``m ~ Normal(ibl_mean_ms, pseudonym_sigma_ms)`` and then broadcast gaps
``~ Normal(m, broadcast_jitter_ms)``, clamped at 1 ms.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import IO, Iterable

import numpy as np

from .capture import CaptureRecord
from .frames import PSEUDONYM_LEN, TRAILER_LEN, MacAddress, gaen_adv_data


class InvalidProfile(ValueError):
    pass


@dataclass(frozen=True)
class DeviceProfile:
    label: str
    ibl_mean_ms: float
    pseudonym_sigma_ms: float = 0.0
    broadcast_jitter_ms: float = 5.0
    rotation_min_s: float = 600.0
    rotation_max_s: float = 1200.0

    def validate(self) -> None:
        if not self.ibl_mean_ms > 0:
            raise InvalidProfile(f"{self.label}: ibl_mean_ms must be positive")
        if not self.pseudonym_sigma_ms >= 0:
            raise InvalidProfile(f"{self.label}: pseudonym_sigma_ms must be >= 0")
        if not self.broadcast_jitter_ms >= 0:
            raise InvalidProfile(f"{self.label}: broadcast_jitter_ms must be >= 0")
        if not 0 < self.rotation_min_s <= self.rotation_max_s:
            raise InvalidProfile(f"{self.label}: need 0 < rotation_min_s <= rotation_max_s")


@dataclass(frozen=True)
class ReceiverModel:
    loss_probability: float = 0.0
    quantization_ms: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.loss_probability <= 1.0:
            raise ValueError("loss_probability must lie in [0, 1]")
        if not self.quantization_ms >= 0:
            raise ValueError("quantization_ms must be >= 0")


@dataclass(frozen=True)
class GroundTruthEntry:
    label: str
    pseudonym: bytes
    mac: MacAddress
    start_us: int
    end_us: int


# (device, OS, pseudonyms, mean ms, double stdev ms) for the reference fleet.
TABLE1 = (
    ("Google Pixel 4a (5G)", "Android 12", 10, 286.38, 0.41),
    ("Huawei Mate 10", "Android 10", 38, 283.04, 0.24),
    ("Huawei P10", "Android 9", 11, 283.02, 0.30),
    ("Huawei P10 Lite", "Android 8", 4, 261.92, 0.21),
    ("iPhone 13", "iOS 15", 3, 274.98, 0.19),
    ("iPhone 13 Mini (a)", "iOS 15", 4, 274.96, 0.12),
    ("iPhone 13 Mini (b)", "iOS 15", 5, 275.36, 0.06),
    ("iPhone 13 Mini (c)", "iOS 15", 4, 275.05, 0.16),
    ("iPhone X", "iOS 15", 8, 271.74, 0.24),
    ("OnePlus Nord", "Android 12", 28, 286.28, 0.20),
    ("OnePlus Nord 2", "Android 11", 7, 270.00, 0.44),
    ("Redmi Note 11 Pro", "Android 12", 9, 286.01, 0.67),
    ("Samsung Galaxy A51", "Android 11", 7, 286.11, 0.31),
    ("Samsung Galaxy A6", "Android 10", 3, 283.10, 0.10),
    ("Samsung Galaxy J7", "Android 9", 3, 282.96, 0.12),
)


def table1_profiles(broadcast_jitter_ms: float = 5.0) -> list[DeviceProfile]:
    """The 15 lab devices, with sigma = half the printed double stdev."""
    return [
        DeviceProfile(
            label=label,
            ibl_mean_ms=mean,
            pseudonym_sigma_ms=dstd / 2,
            broadcast_jitter_ms=broadcast_jitter_ms,
            rotation_min_s=600.0,
            rotation_max_s=1200.0,
        )
        for label, _os, _n, mean, dstd in TABLE1
    ]


def _new_mac(rng: np.random.Generator, used: set[bytes]) -> MacAddress:
    while True:
        octets = rng.bytes(6)
        if octets not in used:
            used.add(octets)
            return MacAddress(octets)


def _device_stream(
    profile: DeviceProfile,
    duration_us: int,
    rng: np.random.Generator,
    used_macs: set[bytes],
) -> tuple[list[tuple[int, MacAddress, bytes]], list[GroundTruthEntry]]:
    # Random phase: the run starts partway into the first identity interval.
    first_len = rng.uniform(profile.rotation_min_s, profile.rotation_max_s) * 1e6
    boundary = max(int(round(first_len * (1.0 - rng.random()))), 1)
    start = 0
    # Broadcast phase within the first gap.
    t = int(rng.uniform(0, profile.ibl_mean_ms * 1000))
    events: list[tuple[int, MacAddress, bytes]] = []
    truth: list[GroundTruthEntry] = []
    while start < duration_us:
        end = min(boundary, duration_us)
        mac = _new_mac(rng, used_macs)
        pseudonym = rng.bytes(PSEUDONYM_LEN)
        payload = gaen_adv_data(pseudonym, rng.bytes(TRAILER_LEN))
        cycle_mean = rng.normal(profile.ibl_mean_ms, profile.pseudonym_sigma_ms)
        truth.append(GroundTruthEntry(profile.label, pseudonym, mac, start, end))
        while t < end:
            events.append((t, mac, payload))
            gap_ms = rng.normal(cycle_mean, profile.broadcast_jitter_ms)
            t += max(int(round(gap_ms * 1000)), 1000)
        start = end
        boundary = end + int(
            round(rng.uniform(profile.rotation_min_s, profile.rotation_max_s) * 1e6)
        )
    return events, truth


def simulate(
    profiles: Iterable[DeviceProfile],
    duration_s: float,
    receiver: ReceiverModel | None = None,
    seed: int = 0,
) -> tuple[list[CaptureRecord], list[GroundTruthEntry]]:
    """Generate a time-sorted capture and its ground truth.

    Broadcast gaps are whole microseconds, so with no loss and no
    quantization the same-MAC gaps in the capture are exactly the drawn
    samples. Output is a pure function of the arguments.
    """
    profiles = list(profiles)
    if not profiles:
        raise ValueError("need at least one device profile")
    if not duration_s > 0:
        raise ValueError("duration_s must be positive")
    for p in profiles:
        p.validate()
    receiver = receiver or ReceiverModel()
    rng = np.random.default_rng(seed)
    duration_us = int(round(duration_s * 1e6))

    used: set[bytes] = set()
    events: list[tuple[int, MacAddress, bytes]] = []
    truth: list[GroundTruthEntry] = []
    for p in profiles:
        ev, gt = _device_stream(p, duration_us, rng, used)
        events.extend(ev)
        truth.extend(gt)
    events.sort(key=lambda e: (e[0], e[1].octets))

    if receiver.loss_probability > 0:
        keep = rng.random(len(events)) >= receiver.loss_probability
        events = [e for e, k in zip(events, keep) if k]
    q_us = receiver.quantization_ms * 1000
    if q_us > 0:
        events = [(int(math.floor(t / q_us + 0.5) * q_us), m, d) for t, m, d in events]
        events.sort(key=lambda e: (e[0], e[1].octets))
    records = [CaptureRecord(t, m, d) for t, m, d in events]
    return records, truth


def write_profiles(profiles: Iterable[DeviceProfile], sink: IO[str]) -> None:
    for p in profiles:
        sink.write(json.dumps(asdict(p), separators=(",", ":")) + "\n")


def read_profiles(source: IO[str]) -> list[DeviceProfile]:
    out = []
    for lineno, line in enumerate(source, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            profile = DeviceProfile(**obj)
        except (json.JSONDecodeError, TypeError) as exc:
            raise InvalidProfile(f"line {lineno}: {exc}") from None
        profile.validate()
        out.append(profile)
    return out


def write_ground_truth(entries: Iterable[GroundTruthEntry], sink: IO[str]) -> None:
    for e in entries:
        obj = {
            "label": e.label,
            "pseudonym": e.pseudonym.hex(),
            "mac": str(e.mac),
            "start_us": e.start_us,
            "end_us": e.end_us,
        }
        sink.write(json.dumps(obj, separators=(",", ":")) + "\n")


def read_ground_truth(source: IO[str]) -> list[GroundTruthEntry]:
    out = []
    for lineno, line in enumerate(source, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            out.append(
                GroundTruthEntry(
                    label=obj["label"],
                    pseudonym=bytes.fromhex(obj["pseudonym"]),
                    mac=MacAddress.parse(obj["mac"]),
                    start_us=int(obj["start_us"]),
                    end_us=int(obj["end_us"]),
                )
            )
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"ground truth line {lineno}: {exc}") from None
    return out
