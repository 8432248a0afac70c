import itertools
import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from effortcrit.matching import (
    FN, FP, ErrorTrack, assign, build_error_tracks, match_frame, match_scene, precision_recall,
)
from effortcrit.model import Frame, Scene

from conftest import agent


def brute_force(gts, dets, threshold):
    """Best (cardinality, -distance) over every partial injection."""
    best = (0, 0.0)
    n, m = len(gts), len(dets)
    for k in range(min(n, m), 0, -1):
        found = None
        for rows in itertools.combinations(range(n), k):
            for cols in itertools.permutations(range(m), k):
                ds = [math.dist(gts[r].position, dets[c].position) for r, c in zip(rows, cols)]
                if all(d <= threshold for d in ds):
                    total = math.fsum(ds)
                    if found is None or total < found:
                        found = total
        if found is not None:
            return (k, found)
    return best


def random_frame(rng, n_max=6, spread=6.0):
    gts = [agent(rng.uniform(0, spread), rng.uniform(0, spread), ident=f"g{i}") for i in range(rng.randint(0, n_max))]
    dets = [agent(rng.uniform(0, spread), rng.uniform(0, spread), ident=f"d{i}") for i in range(rng.randint(0, n_max))]
    return Frame(0.0, agent(-50.0, 0.0, ident="ego"), tuple(gts), tuple(dets))


def test_matching_matches_brute_force():
    rng = random.Random(7)
    for _ in range(60):
        frame = random_frame(rng, n_max=5)
        r = match_frame(frame, None, 2.0)
        k, total = brute_force(sorted(frame.gt_objects, key=lambda o: o.id),
                               sorted(frame.detections, key=lambda o: o.id), 2.0)
        assert len(r.matches) == k
        assert r.total_distance == pytest.approx(total, abs=1e-12)


def test_partition_and_threshold():
    rng = random.Random(3)
    for _ in range(100):
        frame = random_frame(rng)
        r = match_frame(frame, None, 2.0)
        g_ids = [g for g, _, _ in r.matches] + list(r.fn_ids)
        d_ids = [d for _, d, _ in r.matches] + list(r.fp_ids)
        assert sorted(g_ids) == sorted(o.id for o in frame.gt_objects)
        assert sorted(d_ids) == sorted(o.id for o in frame.detections)
        assert all(d <= 2.0 for _, _, d in r.matches)


def test_exact_threshold_is_admissible():
    frame = Frame(0.0, agent(ident="ego"), (agent(10.0, 0.0, ident="g"),), (agent(12.0, 0.0, ident="d"),))
    assert len(match_frame(frame).matches) == 1
    frame = Frame(0.0, agent(ident="ego"), (agent(10.0, 0.0, ident="g"),), (agent(12.0 + 1e-9, 0.0, ident="d"),))
    r = match_frame(frame)
    assert r.fn_ids == ("g",) and r.fp_ids == ("d",)


def test_cardinality_beats_distance():
    # greedy nearest pairing would match only one pair here
    g = (agent(0.0, 0.0, ident="g1"), agent(3.0, 0.0, ident="g2"))
    d = (agent(1.4, 0.0, ident="d1"), agent(-1.9, 0.0, ident="d2"))
    r = match_frame(Frame(0.0, agent(-50, 0, ident="ego"), g, d))
    assert [(a, b) for a, b, _ in r.matches] == [("g1", "d2"), ("g2", "d1")]


def test_empty_sides():
    assert assign([], [agent()]) == []
    r = match_frame(Frame(0.0, agent(ident="ego"), (agent(ident="g"),), ()))
    assert r.fn_ids == ("g",) and r.matches == ()


def test_class_filter():
    g = agent(5.0, 0.0, ident="g", label="truck")
    d = agent(5.0, 0.0, ident="d", label="car")
    r = match_frame(Frame(0.0, agent(ident="ego"), (g,), (d,)), "car")
    assert r.fn_ids == () and r.fp_ids == ("d",)


def test_invalid_threshold():
    with pytest.raises(ValueError):
        match_frame(Frame(0.0, agent(ident="ego"), (), ()), None, 0.0)


@settings(max_examples=60, deadline=None)
@given(st.randoms(use_true_random=False))
def test_permutation_invariance(rnd):
    frame = random_frame(rnd)
    gts, dets = list(frame.gt_objects), list(frame.detections)
    rnd.shuffle(gts)
    rnd.shuffle(dets)
    shuffled = Frame(0.0, frame.ego, tuple(gts), tuple(dets))
    assert match_frame(frame) == match_frame(shuffled)


def _scene(frames):
    return Scene("s", tuple(frames), 0.5)


def test_error_tracks_group_by_identity():
    ego = agent(ident="ego")
    g = agent(20.0, 0.0, ident="G1")
    frames = [
        Frame(0.0, ego, (g,), ()),
        Frame(0.5, ego, (g,), (agent(20.5, 0.0, ident="D1"),)),  # matched
        Frame(1.0, ego, (g,), (agent(40.0, 0.0, ident="P1"),)),
        Frame(1.5, ego, (), (agent(40.0, 0.0, ident="P2"),)),
    ]
    scene = _scene(frames)
    tracks = build_error_tracks(scene, match_scene(scene))
    keys = [(t.kind, t.identity, [o.frame_index for o in t.occurrences]) for t in tracks]
    assert keys == [(FN, "G1", [0, 2]), (FP, "P1", [2]), (FP, "P2", [3])]
    assert tracks[0].occurrences[0].kin.R == pytest.approx(15.5)


def test_error_track_validation():
    with pytest.raises(ValueError):
        ErrorTrack("XX", "a", "car", (), "s")
    with pytest.raises(ValueError):
        ErrorTrack(FN, "a", "car", (), "s")


def test_precision_recall():
    ego = agent(ident="ego")
    frames = [Frame(0.0, ego, (agent(5, 0, ident="g"),), (agent(5, 0, ident="d"), agent(30, 0, ident="p")))]
    assert precision_recall(match_scene(_scene(frames))) == (0.5, 1.0)
    assert precision_recall([]) == (1.0, 1.0)
