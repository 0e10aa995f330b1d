import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from iblprint.capture import PseudonymTrack
from iblprint.experiment import replicate
from iblprint.frames import MacAddress
from iblprint.linker import (
    LinkHypothesis,
    UnknownMac,
    chains,
    device_of,
    evaluate_links,
    link_tracks,
    render_chains,
    true_pairs,
)
from iblprint.sim import GroundTruthEntry


def mac(i: int) -> MacAddress:
    return MacAddress(i.to_bytes(6, "big"))


def track(i, mean, start_s, end_s, n=60):
    return PseudonymTrack(mac(i), int(start_s * 1e6), int(end_s * 1e6), (mean,) * n, n + 1)


def gt(label, i, start_s, end_s):
    return GroundTruthEntry(label, bytes(16), mac(i), int(start_s * 1e6), int(end_s * 1e6))


class TestLinkTracks:
    def test_close_means_short_gap(self):
        links = link_tracks([track(1, 283.0, 0, 600), track(2, 283.1, 605, 1200)], 0.25, 30)
        assert len(links) == 1
        (l,) = links
        assert (l.predecessor, l.successor) == (mac(1), mac(2))
        assert l.time_gap_s == pytest.approx(5.0)
        assert l.mean_gap_ms == pytest.approx(0.1)
        assert l.score == pytest.approx(0.6)

    def test_far_means(self):
        assert link_tracks([track(1, 283.0, 0, 600), track(2, 286.3, 601, 1200)], 0.25, 30) == []

    def test_overlap(self):
        assert link_tracks([track(1, 283.0, 0, 600), track(2, 283.0, 300, 900)], 0.25, 30) == []

    def test_gap_too_long(self):
        assert link_tracks([track(1, 283.0, 0, 600), track(2, 283.0, 631, 900)], 0.25, 30) == []

    def test_greedy_prefers_closest_mean(self):
        tracks = [
            track(1, 283.00, 0, 600),
            track(2, 283.20, 602, 1200),
            track(3, 283.05, 603, 1200),
        ]
        (l,) = link_tracks(tracks, 0.25, 30)
        assert l.successor == mac(3)

    def test_tie_broken_by_time_gap(self):
        tracks = [track(1, 283.0, 0, 600), track(2, 283.1, 610, 1200), track(3, 283.1, 605, 1200)]
        (l,) = link_tracks(tracks, 0.25, 30)
        assert l.successor == mac(3)

    def test_invalid_args(self):
        with pytest.raises(ValueError):
            link_tracks([], 0, 30)
        with pytest.raises(ValueError):
            link_tracks([], 0.25, 0)

    @settings(max_examples=100, deadline=None)
    @given(
        st.lists(
            st.tuples(
                st.floats(280, 281), st.integers(0, 3000), st.integers(1, 900)
            ),
            min_size=1,
            max_size=25,
        )
    )
    def test_partial_matching_and_thresholds(self, specs):
        tracks = [track(i, m, s, s + d) for i, (m, s, d) in enumerate(specs)]
        links = link_tracks(tracks, 0.25, 30)
        assert len({l.predecessor for l in links}) == len(links)
        assert len({l.successor for l in links}) == len(links)
        for l in links:
            assert l.predecessor != l.successor
            assert l.mean_gap_ms <= 0.25
            assert 0 <= l.time_gap_s <= 30
            assert 0 <= l.score <= 1
        assert link_tracks(list(reversed(tracks)), 0.25, 30) == links


class TestChains:
    def test_render(self):
        links = link_tracks(
            [track(1, 283.0, 0, 600), track(2, 283.0, 601, 1200), track(3, 283.0, 1201, 1800)],
            0.25,
            30,
        )
        assert chains(links) == [[mac(1), mac(2), mac(3)]]
        assert render_chains(links).count("->") == 2


class TestEvaluate:
    truth = [gt("a", 1, 0, 600), gt("a", 2, 600, 1200), gt("a", 3, 1200, 1800), gt("b", 4, 0, 900)]

    def test_perfect(self):
        hyps = [LinkHypothesis(mac(1), mac(2), 0, 1, 1), LinkHypothesis(mac(2), mac(3), 0, 1, 1)]
        ev = evaluate_links(hyps, self.truth)
        assert (ev.precision, ev.recall) == (1, 1)

    def test_empty(self):
        ev = evaluate_links([], self.truth)
        assert ev.precision == 1 and ev.recall == 0 and ev.false_negative == 2

    def test_cross_device_and_observed(self):
        hyps = [LinkHypothesis(mac(4), mac(3), 0, 1, 1)]
        ev = evaluate_links(hyps, self.truth, observed=[mac(2), mac(3), mac(4)])
        assert (ev.true_positive, ev.false_positive, ev.false_negative) == (0, 1, 1)

    def test_unknown_mac(self):
        with pytest.raises(UnknownMac):
            evaluate_links([LinkHypothesis(mac(9), mac(1), 0, 1, 1)], self.truth)

    def test_true_pairs(self):
        assert true_pairs(self.truth) == {(mac(1), mac(2)), (mac(2), mac(3))}


@pytest.fixture(scope="module")
def run():
    return replicate(seed=42, duration_s=7200)


class TestReferenceFleet:
    def test_reported(self, run):
        ev = run.evaluation
        assert 0 <= ev.precision <= 1 and 0 <= ev.recall <= 1
        assert ev.true_positive + ev.false_positive == len(run.links)

    def test_unique_mean_device_relinks(self, run):
        owner = device_of(run.truth)
        pairs = true_pairs(run.truth, [t.mac for t in run.tracks])
        claimed = {(l.predecessor, l.successor) for l in run.links}
        mine = {p for p in pairs if owner[p[0]] == "Huawei P10 Lite"}
        assert mine
        recall = len(mine & claimed) / len(mine)
        print(f"Huawei P10 Lite relink recall {recall:.3f} over {len(mine)} pairs")
        assert recall >= 0.9
