import io
import json
from collections import defaultdict

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from iblprint.capture import (
    CaptureRecord,
    MalformedLine,
    PipelineConfig,
    PseudonymTrack,
    build_tracks,
    read_capture,
    read_tracks,
    write_capture,
    write_tracks,
)
from iblprint.frames import MacAddress, classify_gaen, gaen_adv_data
from iblprint.sim import ReceiverModel, simulate, table1_profiles

MAC_A = MacAddress(bytes.fromhex("aa0000000001"))
MAC_B = MacAddress(bytes.fromhex("bb0000000002"))
GAEN = gaen_adv_data(bytes(16))


def recs(mac, stamps_ms, data=GAEN):
    return [CaptureRecord(int(round(t * 1000)), mac, data) for t in stamps_ms]


class TestReadCapture:
    def test_empty(self):
        assert list(read_capture(io.StringIO(""))) == []

    def test_three_lines_in_order(self):
        text = "".join(
            json.dumps({"ts_us": t, "mac": str(MAC_A), "adv_data": GAEN.hex()}) + "\n"
            for t in (0, 280_000, 560_000)
        )
        out = list(read_capture(io.StringIO(text)))
        assert [r.ts_us for r in out] == [0, 280_000, 560_000]
        assert out[0].mac == MAC_A and out[0].adv_data == GAEN

    def test_bad_mac_reports_line(self):
        text = (
            '{"ts_us":0,"mac":"AA:00:00:00:00:01","adv_data":""}\n'
            '{"ts_us":1,"mac":"AA:00:00:00:00","adv_data":""}\n'
        )
        with pytest.raises(MalformedLine) as exc:
            list(read_capture(io.StringIO(text)))
        assert exc.value.lineno == 2

    @pytest.mark.parametrize(
        "line",
        [
            "not json",
            "[1, 2]",
            '{"ts_us": 0, "mac": "AA:00:00:00:00:01"}',
            '{"ts_us": -1, "mac": "AA:00:00:00:00:01", "adv_data": ""}',
            '{"ts_us": 1.5, "mac": "AA:00:00:00:00:01", "adv_data": ""}',
            '{"ts_us": 0, "mac": "AA:00:00:00:00:01", "adv_data": "zz"}',
            '{"ts_us": 0, "mac": "AA:00:00:00:00:01", "adv_data": "' + "00" * 32 + '"}',
        ],
    )
    def test_malformed(self, line):
        with pytest.raises(MalformedLine):
            list(read_capture(io.StringIO(line + "\n")))

    def test_nonmonotonic_counted_not_fatal(self):
        buf = io.StringIO()
        write_capture(recs(MAC_A, [0, 560, 280]), buf)
        reader = read_capture(io.StringIO(buf.getvalue()))
        assert len(list(reader)) == 3
        assert reader.nonmonotonic == 1

    def test_binary_stream_and_round_trip(self):
        records, _ = simulate(table1_profiles()[:2], 30, seed=1)
        buf = io.StringIO()
        write_capture(records, buf)
        back = list(read_capture(io.BytesIO(buf.getvalue().encode())))
        assert back == records


class TestBuildTracks:
    def test_missed_packet_gap_rejected(self):
        cfg = PipelineConfig(min_points=1)
        (track,) = build_tracks(recs(MAC_A, [0, 280, 560, 1120]), cfg)
        assert track.ibl_samples_ms == (280.0, 280.0)
        assert track.raw_count == 4
        assert build_tracks(recs(MAC_A, [0, 280, 560, 1120]), PipelineConfig(min_points=3)) == []

    def test_two_interleaved_macs(self):
        a = recs(MAC_A, [i * 280 for i in range(61)])
        b = recs(MAC_B, [100 + i * 300 for i in range(61)])
        stream = sorted(a + b, key=lambda r: r.ts_us)
        tracks = build_tracks(stream, PipelineConfig(min_points=50))
        assert [t.mac for t in tracks] == [MAC_A, MAC_B]
        assert [len(t.ibl_samples_ms) for t in tracks] == [60, 60]

    def test_non_gaen_discarded(self):
        other = bytes.fromhex("0201060303") + bytes([0x0F, 0x18])
        tracks = build_tracks(recs(MAC_A, [i * 280 for i in range(100)], other), PipelineConfig(min_points=1))
        assert tracks == []

    def test_reordered_input(self):
        stamps = [i * 280 for i in range(60)]
        fwd = build_tracks(recs(MAC_A, stamps), PipelineConfig(min_points=1))
        rev = build_tracks(recs(MAC_A, stamps[::-1]), PipelineConfig(min_points=1))
        assert fwd == rev

    def test_session_truncation(self):
        stamps = [i * 280 for i in range(5000)]  # 1400 s
        (track,) = build_tracks(recs(MAC_A, stamps))
        assert track.last_seen_us - track.first_seen_us <= 600e6
        assert len(track.ibl_samples_ms) == 600_000 // 280

    @pytest.mark.parametrize("seed", [0, 1])
    def test_track_count_matches_ground_truth(self, seed):
        cfg = PipelineConfig()
        records, truth = simulate(table1_profiles(), 3600, ReceiverModel(0.05), seed=seed)
        # Oracle: regroup by pseudonym bytes rather than MAC.
        by_pseudo = defaultdict(list)
        for r in records:
            by_pseudo[classify_gaen(r.adv_data).pseudonym].append(r.ts_us)
        expected = 0
        for e in truth:
            stamps = sorted(by_pseudo.get(e.pseudonym, []))
            stamps = [t for t in stamps if stamps and t - stamps[0] <= 600e6]
            gaps = [(b - a) / 1000 for a, b in zip(stamps, stamps[1:])]
            expected += sum(220 <= g <= 350 for g in gaps) >= 50
        assert len(build_tracks(records, cfg)) == expected

    @settings(max_examples=50, deadline=None)
    @given(
        st.lists(st.integers(0, 1_000_000), min_size=2, max_size=200),
        st.sampled_from([MAC_A, MAC_B]),
    )
    def test_window_completeness(self, stamps, mac):
        cfg = PipelineConfig(min_points=1)
        for t in build_tracks([CaptureRecord(s, mac, GAEN) for s in stamps], cfg):
            assert all(220 <= x <= 350 for x in t.ibl_samples_ms)
            assert t.last_seen_us - t.first_seen_us <= 600e6

    @settings(max_examples=50, deadline=None)
    @given(st.data())
    def test_single_deletion_changes_at_most_two_samples(self, data):
        gaps = data.draw(st.lists(st.integers(230_000, 330_000), min_size=5, max_size=80))
        stamps = [0]
        for g in gaps:
            stamps.append(stamps[-1] + g)
        k = data.draw(st.integers(0, len(stamps) - 1))
        cfg = PipelineConfig(min_points=1)
        full = build_tracks([CaptureRecord(s, MAC_A, GAEN) for s in stamps], cfg)[0]
        cut = build_tracks(
            [CaptureRecord(s, MAC_A, GAEN) for i, s in enumerate(stamps) if i != k], cfg
        )[0]
        a, b = list(full.ibl_samples_ms), list(cut.ibl_samples_ms)
        assert len(a) - len(b) in (1, 2)
        # The surviving samples are the originals minus those touching record k.
        touching = {i for i in (k - 1, k) if 0 <= i < len(a)}
        assert b == [x for i, x in enumerate(a) if i not in touching]

    def test_distinct_macs(self):
        records, _ = simulate(table1_profiles(), 1800, seed=3)
        tracks = build_tracks(records)
        assert len({t.mac for t in tracks}) == len(tracks)
        assert [t.first_seen_us for t in tracks] == sorted(t.first_seen_us for t in tracks)


track_strategy = st.builds(
    PseudonymTrack,
    mac=st.builds(MacAddress, st.binary(min_size=6, max_size=6)),
    first_seen_us=st.integers(0, 10**10),
    last_seen_us=st.just(0),
    ibl_samples_ms=st.lists(st.integers(220_000, 350_000).map(lambda u: u / 1000), max_size=60).map(tuple),
    raw_count=st.integers(0, 10**5),
).map(lambda t: PseudonymTrack(t.mac, t.first_seen_us, t.first_seen_us + 5, t.ibl_samples_ms, t.raw_count))


class TestTrackFile:
    def test_empty(self):
        assert write_tracks([]) == ""
        assert read_tracks(io.StringIO("")) == []

    def test_fifty_samples_one_line(self):
        track = PseudonymTrack(MAC_A, 0, 14_000_000, tuple([280.0] * 50), 51)
        text = write_tracks([track])
        assert text.count("\n") == 1
        obj = json.loads(text)
        assert obj["ibl_ms"].split(",") == ["280.000"] * 50
        assert obj["mac"] == "AA:00:00:00:00:01"

    @settings(max_examples=100)
    @given(st.lists(track_strategy, max_size=5))
    def test_round_trip(self, tracks):
        assert read_tracks(io.StringIO(write_tracks(tracks))) == tracks

    def test_malformed(self):
        with pytest.raises(MalformedLine):
            read_tracks(io.StringIO('{"mac": "AA:00:00:00:00:01"}\n'))
