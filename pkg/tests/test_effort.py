import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from effortcrit.effort import (
    AS_PRINTED, CONSISTENT, fn_brake_demand, fn_brake_demand_printed, fp_brake_demand, fsr_from_demands,
    lea_frame, printed_residual, score_track, solve_printed,
)
from effortcrit.gate import RSB, SAT
from effortcrit.matching import build_error_tracks, match_scene
from effortcrit.model import Frame, ReachParams, RelativeKinematics, Scene

from conftest import agent


def kin(R=25.0, d_y=0.0, v_obj=0.0, v_ego=10.0, v_rel_y=0.0, a_obj=0.0, ahead=True):
    return RelativeKinematics(R=R, d_y=d_y, v_obj_lon=v_obj, v_ego=v_ego, v_rel_y=v_rel_y,
                              a_obj_lon=a_obj, ahead=ahead)


P = ReachParams()


def test_fp_example():
    # 100 / (2 * 22) = 2.2727...
    assert fp_brake_demand(kin(), P) == pytest.approx(100 / 44, abs=1e-12)


def test_fp_guards():
    assert fp_brake_demand(kin(ahead=False), P) == 0.0
    assert fp_brake_demand(kin(v_obj=12.0), P) == 0.0
    assert fp_brake_demand(kin(R=3.0), P) == P.a_brake_max
    assert fp_brake_demand(kin(R=6.0), P) == P.a_brake_max  # 100/(2*3) > cap


def test_fn_examples():
    assert fn_brake_demand(kin(), P) == pytest.approx(100 / 44, abs=1e-12)
    # lead decelerating at 2: closing 10.6 over 22.09 m, minus a_FN
    expected = 10.6 ** 2 / (2 * (25 - 3 - 0.09)) + 2.0
    assert fn_brake_demand(kin(a_obj=-2.0), P) == pytest.approx(expected, abs=1e-12)
    assert expected == pytest.approx(4.564, abs=1e-3)


def test_fn_guards():
    assert fn_brake_demand(kin(ahead=False), P) == 0.0
    assert fn_brake_demand(kin(v_obj=10.0), P) == 0.0
    assert fn_brake_demand(kin(R=2.0), P) == P.a_brake_max
    # lead pulling away fast enough needs no braking
    assert fn_brake_demand(kin(v_obj=9.0, a_obj=3.0, R=50.0), P) == 0.0
    with pytest.raises(ValueError):
        fn_brake_demand(kin(), P, "bogus")


def test_reduction_to_fp():
    rng = random.Random(1)
    for _ in range(1000):
        k = kin(R=rng.uniform(0, 80), v_obj=rng.uniform(0, 30), v_ego=rng.uniform(0, 30))
        assert abs(fn_brake_demand(k, P, CONSISTENT) - fp_brake_demand(k, P)) <= 1e-12


def test_printed_static_lead_differs():
    # with a_FN = 0 the literal equation reduces to 1.5 dv^2 / D
    value, ok = fn_brake_demand_printed(kin(), P)
    assert ok and value == pytest.approx(1.5 * 100 / 22, abs=1e-12)
    assert fn_brake_demand(kin(), P, AS_PRINTED) == value


def test_printed_residual_random():
    rng = random.Random(2)
    solved = 0
    while solved < 1000:
        k = kin(R=rng.uniform(1, 80), v_obj=rng.uniform(0, 25), v_ego=rng.uniform(0, 30),
                a_obj=rng.uniform(-4, 3))
        root = solve_printed(k, P)
        if root is None:
            continue
        solved += 1
        assert abs(printed_residual(k, P, root.a_brake)) <= 1e-9


def test_printed_no_root_saturates():
    # accelerating object far ahead: 2.25 dv^2 < 2 a_FN D, no real root
    k = kin(R=60.0, v_obj=0.0, v_ego=10.0, a_obj=2.0)
    assert solve_printed(k, P) is None
    assert fn_brake_demand_printed(k, P) == (P.a_brake_max, False)
    assert fn_brake_demand_printed(kin(R=2.0), P) == (P.a_brake_max, True)


def test_lea_examples():
    # |d_y| = 0.7 inside the 2.3 m corridor: widen by 1.6 m in 2.0 s
    assert lea_frame(kin(d_y=0.7), 2.3, 1.8, 1.8, P) == pytest.approx(0.8, abs=1e-12)
    # converging from 3 m at 1 m/s with t_eva = 2: widening needs 2 m, i.e. 2 * 2 / 4
    assert lea_frame(kin(d_y=3.0, v_rel_y=-1.0), 2.3, 1.8, 1.8, P) == pytest.approx(1.0, abs=1e-12)


def test_lea_clamps():
    assert lea_frame(kin(d_y=0.0), 0.3, 1.8, 1.8, P) == P.a_lat_cap
    assert lea_frame(kin(d_y=0.0), 0.1, 1.8, 1.8, P) == P.a_lat_cap
    # parallel and outside the corridor: no lateral effort
    assert lea_frame(kin(d_y=3.5), 1.0, 1.8, 1.8, P) == 0.0
    assert lea_frame(kin(d_y=-3.5, v_rel_y=-1.0), 1.0, 1.8, 1.8, P) == 0.0


def lea_brute(d_y, v_rel_y, t_coll, params, w=1.8):
    """Least |a| that ends on the far side of the corridor edge, same side or opposite side.

    Relative offset after t under ego lateral acceleration a: d_y + v t - a t^2 / 2.
    """
    t = t_coll - params.t_react
    if t <= 0:
        return params.a_lat_cap
    w_c = w + params.safety_margin
    s = 1.0 if d_y > 0 or (d_y == 0 and v_rel_y >= 0) else -1.0
    free = s * (d_y + v_rel_y * t)
    stay = max(0.0, 2.0 * (w_c - free) / (t * t))    # s*a <= 2(free - w_c)/t^2
    cross = max(0.0, 2.0 * (free + w_c) / (t * t))   # s*a >= 2(free + w_c)/t^2
    return min(stay, cross, params.a_lat_cap)


@settings(max_examples=300, deadline=None)
@given(d_y=st.floats(-2.3, 2.3), v=st.floats(-3, 3), t=st.floats(0.4, 5.0))
def test_lea_matches_brute_force_inside_corridor(d_y, v, t):
    got = lea_frame(kin(d_y=d_y, v_rel_y=v), t, 1.8, 1.8, P)
    assert got == pytest.approx(lea_brute(d_y, v, t, P), abs=1e-9)


@settings(max_examples=300, deadline=None)
@given(d_y=st.floats(-6, 6), v=st.floats(-3, 3), t=st.floats(0.4, 5.0))
def test_lea_never_below_true_minimum(d_y, v, t):
    # outside the corridor the widening term ignores the spare offset, so it can only overstate
    got = lea_frame(kin(d_y=d_y, v_rel_y=v), t, 1.8, 1.8, P)
    assert got >= lea_brute(d_y, v, t, P) - 1e-9


@settings(max_examples=200, deadline=None)
@given(R=st.floats(0, 100), v_ego=st.floats(0, 40), v_obj=st.floats(0, 40), a=st.floats(-8, 4),
       d_y=st.floats(-5, 5), vy=st.floats(-3, 3), t=st.floats(0, 5))
def test_caps_hold(R, v_ego, v_obj, a, d_y, vy, t):
    k = kin(R=R, v_ego=v_ego, v_obj=v_obj, a_obj=a, d_y=d_y, v_rel_y=vy)
    for v in (fp_brake_demand(k, P), fn_brake_demand(k, P), fn_brake_demand(k, P, AS_PRINTED)):
        assert 0.0 <= v <= P.a_brake_max
    assert 0.0 <= lea_frame(k, t, 1.8, 1.8, P) <= P.a_lat_cap


@settings(max_examples=200, deadline=None)
@given(R=st.floats(1, 100), v_ego=st.floats(0, 40), v_obj=st.floats(0, 40), dR=st.floats(0, 20))
def test_fp_monotone_in_gap(R, v_ego, v_obj, dR):
    assert fp_brake_demand(kin(R=R + dR, v_ego=v_ego, v_obj=v_obj), P) <= fp_brake_demand(
        kin(R=R, v_ego=v_ego, v_obj=v_obj), P)


def test_fsr_identities():
    assert fsr_from_demands([2.0, 1.0, 1.0], 0.5) == pytest.approx(2.0)
    assert fsr_from_demands([], 0.5) == 0.0
    rng = random.Random(4)
    for _ in range(100):
        d = [rng.uniform(0, 10) for _ in range(rng.randint(1, 30))]
        assert fsr_from_demands(d, 0.5) == pytest.approx(0.5 * math.fsum(d), rel=1e-12)


def _scene_with(objs_per_frame, gt=False, v_ego=10.0):
    frames = []
    for i, objs in enumerate(objs_per_frame):
        ego = agent(vx=v_ego, ident="ego")
        frames.append(Frame(0.5 * i, ego, tuple(objs) if gt else (), () if gt else tuple(objs)))
    return Scene("s", tuple(frames), 0.5)


def test_score_phantom_track():
    scene = _scene_with([[agent(29.5, 0.0, ident="P1")]] * 3)
    (track,) = build_error_tracks(scene, match_scene(scene))
    te = score_track(track, scene, RSB, P)
    assert te.kind == "FP" and te.n_gated == 3 and te.duration == 1.5
    assert te.fsr == pytest.approx(1.5 * 100 / 44, abs=1e-12)
    assert te.fsr == pytest.approx(3.409, abs=1e-3)
    assert te.mdr is None


def test_score_miss_track_and_ungated():
    far = agent(0.0, 300.0, ident="G1")
    scene = _scene_with([[far], [far]], gt=True)
    (track,) = build_error_tracks(scene, match_scene(scene))
    te = score_track(track, scene, SAT, P)
    assert te.n_gated == 0 and te.mdr == 0.0 and te.lea_peak == 0.0 and te.duration == 0.0
    assert te.min_t_coll is None and all(not f.gated for f in te.frames)
    scene = _scene_with([[agent(29.5, 0.0, ident="G1")]], gt=True)
    (track,) = build_error_tracks(scene, match_scene(scene))
    assert score_track(track, scene, RSB, P).mdr == pytest.approx(100 / 44, abs=1e-12)
    with pytest.raises(ValueError):
        score_track(track, scene, RSB, P, "bogus")
