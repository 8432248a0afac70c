"""Braking and lateral-evasion effort for gated error occurrences.

FP phantoms are scored with the constant-velocity braking demand, FN misses
with the constant-acceleration demand that accounts for the object's own
acceleration. Track level: FSR is the error duration times the mean braking
demand, MDR the peak braking demand, and the lateral evasion peak is the
largest per-frame lateral acceleration.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

from .gate import RSB, first_collision
from .matching import FN, FP, ErrorTrack
from .model import RelativeKinematics, ReachParams, Scene

CONSISTENT = "consistent"
AS_PRINTED = "as_printed"
MDR_MODES = (CONSISTENT, AS_PRINTED)


def _cap(value: float, hi: float) -> float:
    return min(max(value, 0.0), hi)


def fp_brake_demand(k: RelativeKinematics, params: ReachParams) -> float:
    """Constant deceleration needed to match a phantom's speed without contact."""
    if not k.ahead:
        return 0.0
    dv = k.v_ego - k.v_obj_lon
    if dv <= 0:
        return 0.0
    room = k.R - dv * params.t_react
    if room <= 0:
        return params.a_brake_max
    return min(dv * dv / (2.0 * room), params.a_brake_max)


def fn_brake_demand(k: RelativeKinematics, params: ReachParams, mode: str = CONSISTENT) -> float:
    if mode == CONSISTENT:
        return _fn_consistent(k, params)
    if mode == AS_PRINTED:
        return fn_brake_demand_printed(k, params)[0]
    raise ValueError(f"unknown mdr mode {mode!r}")


def _fn_consistent(k: RelativeKinematics, params: ReachParams) -> float:
    # Gap and closing speed at the end of the reaction interval, then the
    # relative deceleration (ego braking plus object acceleration) that
    # closes the speed difference within the remaining gap.
    if not k.ahead:
        return 0.0
    t = params.t_react
    a_obj = k.a_obj_lon
    u0 = k.v_ego - k.v_obj_lon
    dv = u0 - a_obj * t
    if dv <= 0:
        return 0.0
    room = k.R - u0 * t + 0.5 * a_obj * t * t
    if room <= 0:
        return params.a_brake_max
    return _cap(dv * dv / (2.0 * room) - a_obj, params.a_brake_max)


class PrintedRoot(NamedTuple):
    """Unclamped solution of the literal constant-acceleration equation."""

    a_brake: float
    x: float  # time from end of reaction until the speeds match


def solve_printed(k: RelativeKinematics, params: ReachParams) -> Optional[PrintedRoot]:
    """Solve the literal FN braking equation for ``a_brake``.

    With ``dv = v_ego - v_FN - a_FN * t_react`` and ``x = dv / (a_brake + a_FN)``
    the equation becomes ``0.5 a_FN x^2 - 1.5 dv x + D = 0`` where ``D`` is
    the gap left after the reaction interval. The smallest positive root is
    used. Returns None when there is no closing speed or no positive root.
    """
    t = params.t_react
    a_obj = k.a_obj_lon
    dv = k.v_ego - k.v_obj_lon - a_obj * t
    if dv <= 0:
        return None
    room = k.R - (k.v_ego - k.v_obj_lon) * t + 0.5 * a_obj * t * t
    qa, qb, qc = 0.5 * a_obj, -1.5 * dv, room
    if qa == 0.0:
        roots = [-qc / qb]
    else:
        disc = qb * qb - 4.0 * qa * qc
        if disc < 0:
            return None
        # cancellation-free pair of roots
        q = -0.5 * (qb - math.sqrt(disc))  # qb < 0
        roots = [q / qa]
        if q != 0.0:
            roots.append(qc / q)
    positive = sorted(r for r in roots if r > 0 and math.isfinite(r))
    if not positive:
        return None
    x = positive[0]
    return PrintedRoot(a_brake=dv / x - a_obj, x=x)


def printed_residual(k: RelativeKinematics, params: ReachParams, a_brake: float) -> float:
    """LHS minus RHS of the literal equation evaluated at ``a_brake``."""
    t = params.t_react
    v_ego, v_fn, a_fn = k.v_ego, k.v_obj_lon, k.a_obj_lon
    dv = v_ego - v_fn - a_fn * t
    x = dv / (a_brake + a_fn)
    lhs = v_ego * t + v_ego * x + 0.5 * dv * dv / (a_brake + a_fn)
    rhs = k.R + v_fn * t + v_fn * x + 0.5 * a_fn * (t + x) ** 2
    return lhs - rhs


def fn_brake_demand_printed(k: RelativeKinematics, params: ReachParams) -> tuple[float, bool]:
    """Literal-equation braking demand and whether a positive root existed.

    Closing-speed and gap guards match the consistent mode; a missing root
    saturates at the braking cap.
    """
    if not k.ahead:
        return 0.0, True
    t = params.t_react
    u0 = k.v_ego - k.v_obj_lon
    if u0 - k.a_obj_lon * t <= 0:
        return 0.0, True
    if k.R - u0 * t + 0.5 * k.a_obj_lon * t * t <= 0:
        return params.a_brake_max, True
    root = solve_printed(k, params)
    if root is None:
        return params.a_brake_max, False
    return _cap(root.a_brake, params.a_brake_max), True


def lea_frame(k: RelativeKinematics, t_coll: float, w_ego: float, w_obj: float,
              params: ReachParams) -> float:
    """Minimum lateral acceleration to widen the gap or cross to the other side."""
    t_eva = t_coll - params.t_react
    if t_eva <= 0:
        return params.a_lat_cap
    w_c = 0.5 * (w_ego + w_obj) + params.safety_margin
    side = math.copysign(1.0, k.d_y) if k.d_y != 0 else (math.copysign(1.0, k.v_rel_y) if k.v_rel_y != 0 else 1.0)
    closing = side * k.v_rel_y  # negative when converging
    drift = closing * t_eva
    y_widen = max(0.0, w_c - abs(k.d_y)) - drift
    y_cross = w_c + abs(k.d_y) + drift
    a_widen = 2.0 * max(0.0, y_widen) / (t_eva * t_eva)
    a_cross = 2.0 * max(0.0, y_cross) / (t_eva * t_eva)
    return min(a_widen, a_cross, params.a_lat_cap)


@dataclass(frozen=True)
class FrameEffort:
    frame_index: int
    a_brake: float
    lea: float
    t_coll: Optional[float]
    gated: bool
    root_ok: bool = True


@dataclass(frozen=True)
class TrackEffort:
    track: ErrorTrack
    frames: tuple[FrameEffort, ...]
    fsr: Optional[float]
    mdr: Optional[float]
    lea_peak: float
    n_gated: int
    duration: float
    gate_kind: str = RSB

    @property
    def kind(self) -> str:
        return self.track.kind

    @property
    def gated_frames(self) -> list[FrameEffort]:
        return [f for f in self.frames if f.gated]

    @property
    def max_a_brake(self) -> float:
        return max((f.a_brake for f in self.frames), default=0.0)

    @property
    def min_t_coll(self) -> Optional[float]:
        return min((f.t_coll for f in self.frames if f.gated), default=None)


def fsr_from_demands(demands: Sequence[float], t_cycle: float) -> float:
    if not demands:
        return 0.0
    a_avg = sum(demands) / len(demands)
    return (len(demands) * t_cycle) * a_avg


def score_track(track: ErrorTrack, scene: Scene, gate_kind: str = RSB,
                params: ReachParams | None = None, mdr_mode: str = CONSISTENT) -> TrackEffort:
    params = params or ReachParams()
    if mdr_mode not in MDR_MODES:
        raise ValueError(f"unknown mdr mode {mdr_mode!r}")
    frames = []
    for occ in track.occurrences:
        ego = scene.frames[occ.frame_index].ego
        obj_accel = occ.obj.accel_lon if track.kind == FN else 0.0
        gate = first_collision(gate_kind, ego, occ.obj, params, obj_accel=obj_accel)
        if not gate.collides:
            frames.append(FrameEffort(occ.frame_index, 0.0, 0.0, None, False))
            continue
        root_ok = True
        if track.kind == FP:
            a_brake = fp_brake_demand(occ.kin, params)
        elif mdr_mode == AS_PRINTED:
            a_brake, root_ok = fn_brake_demand_printed(occ.kin, params)
        else:
            a_brake = fn_brake_demand(occ.kin, params, CONSISTENT)
        lea = lea_frame(occ.kin, gate.t_coll, ego.width, occ.obj.width, params)
        frames.append(FrameEffort(occ.frame_index, a_brake, lea, gate.t_coll, True, root_ok))

    demands = [f.a_brake for f in frames if f.gated]
    n_gated = len(demands)
    fsr = mdr = None
    if track.kind == FP:
        fsr = fsr_from_demands(demands, scene.t_cycle)
    else:
        mdr = max(demands, default=0.0)
    return TrackEffort(
        track=track,
        frames=tuple(frames),
        fsr=fsr,
        mdr=mdr,
        lea_peak=max((f.lea for f in frames if f.gated), default=0.0),
        n_gated=n_gated,
        duration=n_gated * scene.t_cycle,
        gate_kind=gate_kind.upper(),
    )
