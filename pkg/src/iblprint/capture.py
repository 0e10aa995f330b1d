"""Capture files and the passive measurement pipeline.

A capture file holds one JSON object per line::

    {"ts_us": 1250, "mac": "C3:1A:...", "adv_data": "02011a0303..."}

:func:`build_tracks` turns a record stream into per-MAC tracks of
inter-broadcast latencies (IBLs): GAEN filter, group by MAC, sort, take
successive differences, keep those inside the latency window.
"""

from __future__ import annotations

import io
import json
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator

from .frames import MAX_ADV_DATA_LEN, MacAddress, classify_gaen

log = logging.getLogger(__name__)


class MalformedLine(ValueError):
    def __init__(self, lineno: int, reason: str):
        super().__init__(f"line {lineno}: {reason}")
        self.lineno = lineno
        self.reason = reason


@dataclass(frozen=True, slots=True)
class CaptureRecord:
    ts_us: int
    mac: MacAddress
    adv_data: bytes

    def __post_init__(self) -> None:
        if self.ts_us < 0:
            raise ValueError("ts_us must be non-negative")
        if len(self.adv_data) > MAX_ADV_DATA_LEN:
            raise ValueError("adv_data exceeds 31 bytes")


@dataclass(frozen=True)
class PipelineConfig:
    window_low_ms: float = 220.0
    window_high_ms: float = 350.0
    session_limit_s: float = 600.0
    min_points: int = 50

    def __post_init__(self) -> None:
        if not 0 < self.window_low_ms < self.window_high_ms:
            raise ValueError("need 0 < window_low_ms < window_high_ms")
        if not self.session_limit_s > 0:
            raise ValueError("session_limit_s must be positive")
        if self.min_points < 1:
            raise ValueError("min_points must be at least 1")


@dataclass(frozen=True)
class PseudonymTrack:
    mac: MacAddress
    first_seen_us: int
    last_seen_us: int
    ibl_samples_ms: tuple[float, ...] = field(default=())
    raw_count: int = 0

    @property
    def duration_s(self) -> float:
        return (self.last_seen_us - self.first_seen_us) / 1e6


def _open_text(source: IO | str) -> IO[str]:
    if isinstance(source, str):
        return open(source, "r", encoding="utf-8")
    if isinstance(source, (io.RawIOBase, io.BufferedIOBase)) or "b" in getattr(source, "mode", ""):
        return io.TextIOWrapper(source, encoding="utf-8")
    return source


class CaptureReader:
    """Streaming iterator over a capture file.

    Out-of-order timestamps are tolerated and counted in ``nonmonotonic``.
    """

    def __init__(self, source: IO | str):
        self._source = source
        self.nonmonotonic = 0
        self.lines_read = 0

    def __iter__(self) -> Iterator[CaptureRecord]:
        stream = _open_text(self._source)
        macs: dict[str, MacAddress] = {}
        payloads: dict[str, bytes] = {}
        last_ts = -1
        try:
            for lineno, line in enumerate(stream, start=1):
                self.lines_read = lineno
                if not line.strip():
                    continue
                rec = _parse_capture_line(line, lineno, macs, payloads)
                if rec.ts_us < last_ts:
                    self.nonmonotonic += 1
                last_ts = max(last_ts, rec.ts_us)
                yield rec
        finally:
            if isinstance(self._source, str):
                stream.close()
        if self.nonmonotonic:
            log.warning("%d non-monotonic timestamps in capture", self.nonmonotonic)


def _parse_capture_line(
    line: str, lineno: int, macs: dict[str, MacAddress], payloads: dict[str, bytes]
) -> CaptureRecord:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise MalformedLine(lineno, f"invalid JSON ({exc.msg})") from None
    if not isinstance(obj, dict):
        raise MalformedLine(lineno, "expected an object")
    try:
        ts, mac_text, hex_data = obj["ts_us"], obj["mac"], obj["adv_data"]
    except KeyError as exc:
        raise MalformedLine(lineno, f"missing field {exc.args[0]!r}") from None
    if not isinstance(ts, int) or isinstance(ts, bool) or ts < 0:
        raise MalformedLine(lineno, "ts_us must be a non-negative integer")
    mac = macs.get(mac_text) if isinstance(mac_text, str) else None
    if mac is None:
        try:
            mac = MacAddress.parse(mac_text)
        except ValueError as exc:
            raise MalformedLine(lineno, str(exc)) from None
        macs[mac_text] = mac
    data = payloads.get(hex_data) if isinstance(hex_data, str) else None
    if data is None:
        try:
            data = bytes.fromhex(hex_data)
        except (TypeError, ValueError):
            raise MalformedLine(lineno, "adv_data must be a hex string") from None
        if len(data) > MAX_ADV_DATA_LEN:
            raise MalformedLine(lineno, "adv_data exceeds 31 bytes")
        payloads[hex_data] = data
    return CaptureRecord(ts, mac, data)


def read_capture(source: IO | str) -> CaptureReader:
    return CaptureReader(source)


def format_capture_line(rec: CaptureRecord) -> str:
    return json.dumps(
        {"ts_us": rec.ts_us, "mac": str(rec.mac), "adv_data": rec.adv_data.hex()},
        separators=(",", ":"),
    )


def write_capture(records: Iterable[CaptureRecord], sink: IO[str]) -> int:
    n = 0
    for rec in records:
        sink.write(format_capture_line(rec))
        sink.write("\n")
        n += 1
    return n


def build_tracks(
    records: Iterable[CaptureRecord], cfg: PipelineConfig | None = None
) -> list[PseudonymTrack]:
    """Group GAEN broadcasts by MAC and extract windowed IBL samples.

    Each MAC group is cut to its first ``session_limit_s`` seconds. Groups
    keeping fewer than ``min_points`` samples are dropped.
    """
    cfg = cfg or PipelineConfig()
    gaen: dict[bytes, bool] = {}
    groups: dict[MacAddress, list[int]] = defaultdict(list)
    for rec in records:
        ok = gaen.get(rec.adv_data)
        if ok is None:
            ok = gaen[rec.adv_data] = classify_gaen(rec.adv_data) is not None
        if ok:
            groups[rec.mac].append(rec.ts_us)

    limit_us = cfg.session_limit_s * 1e6
    tracks = []
    for mac, stamps in groups.items():
        stamps.sort()
        first = stamps[0]
        session = [t for t in stamps if t - first <= limit_us]
        samples = []
        for prev, cur in zip(session, session[1:]):
            gap_ms = (cur - prev) / 1000
            if cfg.window_low_ms <= gap_ms <= cfg.window_high_ms:
                samples.append(gap_ms)
        if len(samples) < cfg.min_points:
            continue
        tracks.append(PseudonymTrack(mac, first, session[-1], tuple(samples), len(session)))
    tracks.sort(key=lambda t: (t.first_seen_us, t.mac))
    return tracks


def format_track_line(track: PseudonymTrack) -> str:
    return json.dumps(
        {
            "mac": str(track.mac),
            "first_seen_us": track.first_seen_us,
            "last_seen_us": track.last_seen_us,
            "raw_count": track.raw_count,
            "ibl_ms": ",".join(f"{x:.3f}" for x in track.ibl_samples_ms),
        },
        separators=(",", ":"),
    )


def write_tracks(tracks: Iterable[PseudonymTrack], sink: IO[str] | None = None) -> str:
    """Write tracks as JSON lines; returns the text written.

    Samples are stored with 3 fractional digits, which is exact for
    latencies derived from integer-microsecond timestamps.
    """
    text = "".join(format_track_line(t) + "\n" for t in tracks)
    if sink is not None:
        sink.write(text)
    return text


def read_tracks(source: IO | str) -> list[PseudonymTrack]:
    stream = _open_text(source)
    out = []
    try:
        for lineno, line in enumerate(stream, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                ibl = obj["ibl_ms"]
                samples = tuple(float(x) for x in ibl.split(",")) if ibl else ()
                first, last = obj["first_seen_us"], obj["last_seen_us"]
                if not (isinstance(first, int) and isinstance(last, int)) or first > last:
                    raise ValueError("bad first_seen_us/last_seen_us")
                track = PseudonymTrack(
                    mac=MacAddress.parse(obj["mac"]),
                    first_seen_us=first,
                    last_seen_us=last,
                    ibl_samples_ms=samples,
                    raw_count=int(obj.get("raw_count", len(samples) + 1)),
                )
            except (json.JSONDecodeError, KeyError, TypeError, AttributeError, ValueError) as exc:
                raise MalformedLine(lineno, f"bad track record ({exc})") from None
            out.append(track)
    finally:
        if isinstance(source, str):
            stream.close()
    return out
