import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from effortcrit.classic import (
    INCREASING_BANDS, SeverityZone, btn, classify, drac, stn, tet_track, thw, track_classics, ttc_classical,
)
from effortcrit.effort import fp_brake_demand, score_track
from effortcrit.gate import RSB
from effortcrit.matching import build_error_tracks, match_scene
from effortcrit.model import Frame, ReachParams, RelativeKinematics, Scene

from conftest import agent

P = ReachParams()
Z = SeverityZone


def kin(R=25.0, v_obj=0.0, v_ego=10.0, ahead=True, d_y=0.0):
    return RelativeKinematics(R, d_y, v_obj, v_ego, 0.0, 0.0, ahead)


def test_ttc():
    assert ttc_classical(kin()) == 2.5
    assert ttc_classical(kin(R=500.0)) == 10.0
    assert ttc_classical(kin(R=500.0), cap=None) == 50.0
    assert ttc_classical(kin(v_obj=10.0)) is None
    assert ttc_classical(kin(ahead=False)) is None


def test_thw_drac_btn_stn():
    assert thw(kin()) == 2.5
    assert thw(kin(v_ego=0.0)) is None
    assert drac(kin(), P) == 2.0
    assert drac(kin(R=1.0), P) == 10.0
    assert drac(kin(R=0.0), P) == 10.0
    assert drac(kin(v_obj=11.0), P) == 0.0
    assert btn(kin(), P) == 0.2
    assert stn(1.0, P) == 0.5


@settings(max_examples=200, deadline=None)
@given(R=st.floats(0, 100), v_ego=st.floats(0, 40), v_obj=st.floats(0, 40))
def test_drac_is_fp_demand_without_reaction(R, v_ego, v_obj):
    k = kin(R=R, v_ego=v_ego, v_obj=v_obj)
    assert drac(k, P) == fp_brake_demand(k, P.replace(t_react=0.0))


def test_tet():
    frames = [(True, 1.0), (True, 2.0), (False, 0.5), (True, None), (True, 1.99)]
    assert tet_track(frames, 0.5, 2.0) == 1.0


# every printed boundary, probed at the edge and 1e-9 either side
PROBES = [
    ("MDR", 2.0, Z.Safe, Z.Safe, Z.Moderate),
    ("MDR", 4.0, Z.Moderate, Z.Moderate, Z.Critical),
    ("MDR", 6.0, Z.Critical, Z.Critical, Z.Imminent),
    ("FSR", 1.0, Z.Safe, Z.Safe, Z.Moderate),
    ("FSR", 2.5, Z.Moderate, Z.Moderate, Z.Critical),
    ("FSR", 5.0, Z.Critical, Z.Critical, Z.Imminent),
    ("LEA", 1.0, Z.Safe, Z.Safe, Z.Moderate),
    ("LEA", 2.0, Z.Moderate, Z.Moderate, Z.Critical),
    ("LEA", 4.0, Z.Critical, Z.Critical, Z.Imminent),
    ("BTN", 0.4, Z.Safe, Z.Safe, Z.Moderate),
    ("BTN", 0.7, Z.Moderate, Z.Moderate, Z.Critical),
    ("BTN", 1.0, Z.Critical, Z.Critical, Z.Imminent),
    ("TTC", 3.0, Z.Moderate, Z.Moderate, Z.Safe),
    ("TTC", 2.0, Z.Critical, Z.Critical, Z.Moderate),
    ("TTC", 1.0, Z.Imminent, Z.Imminent, Z.Critical),
]


@pytest.mark.parametrize("metric,edge,below,at,above", PROBES)
def test_boundaries(metric, edge, below, at, above):
    assert classify(metric, edge - 1e-9) == below
    assert classify(metric, edge) == at
    assert classify(metric, edge + 1e-9) == above


def test_classify_misc():
    assert classify("mdr", 0.0) == Z.Safe
    assert classify("MDR", 10.0) == Z.Imminent
    assert classify("TTC", None) == Z.Safe
    assert classify("TTC", 0.0) == Z.Imminent
    assert set(INCREASING_BANDS) == {"MDR", "FSR", "LEA", "BTN"}
    with pytest.raises(ValueError):
        classify("XYZ", 1.0)


def test_track_classics_over_gated_frames():
    ego = agent(vx=10.0, ident="ego")
    frames = [
        Frame(0.0, ego, (), (agent(29.5, 1.0, ident="P"),)),    # R 25, TTC 2.5
        Frame(0.5, ego, (), (agent(19.5, 0.5, ident="P"),)),    # R 15, TTC 1.5
        Frame(1.0, ego, (), (agent(0.0, 300.0, ident="P"),)),   # never gated
    ]
    scene = Scene("s", tuple(frames), 0.5)
    (track,) = build_error_tracks(scene, match_scene(scene))
    te = score_track(track, scene, RSB, P)
    cs = track_classics(te, 0.5, P)
    assert te.n_gated == 2
    assert cs.min_ttc == pytest.approx(1.5)
    assert cs.max_drac == pytest.approx(100 / 30)
    assert cs.max_btn == pytest.approx(100 / 300)
    assert cs.min_thw == pytest.approx(1.5)
    assert cs.tet == 0.5
    assert cs.min_dy == pytest.approx(0.5)
    assert math.isclose(cs.min_ttc_reported, 1.5)
