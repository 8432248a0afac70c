"""Collision gates: ellipsoidal reachable sets (RSB) and rolled-out OBBs (SAT).

Both gates scan prediction times ``tau = k * dt`` for ``k = 0 .. n_steps``
(inclusive of both ends) and report the first step at which the two agents
overlap.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .model import AgentState, ReachParams

RSB = "RSB"
SAT = "SAT"
GATE_KINDS = (RSB, SAT)


@dataclass(frozen=True)
class ReachEllipsoid:
    center: tuple[float, float]
    axis_lon: tuple[float, float]
    semi_lon: float
    semi_lat: float

    def support(self, u: tuple[float, float]) -> float:
        """Support radius of the ellipse in unit direction ``u``."""
        ax, ay = self.axis_lon
        along = ax * u[0] + ay * u[1]
        across = -ay * u[0] + ax * u[1]
        return math.hypot(self.semi_lon * along, self.semi_lat * across)


@dataclass(frozen=True)
class GateResult:
    collides: bool
    t_coll: Optional[float]
    gate_kind: str


def grid_time(k: int, params: ReachParams) -> float:
    # round away the k*dt representation noise so 17 * 0.1 reports as 1.7
    return round(k * params.dt, 9)


def reach_ellipsoid(agent: AgentState, tau: float, params: ReachParams) -> ReachEllipsoid:
    if tau < 0:
        raise ValueError("tau must be >= 0")
    growth = 0.5 * tau * tau
    return ReachEllipsoid(
        center=(agent.position[0] + agent.velocity[0] * tau, agent.position[1] + agent.velocity[1] * tau),
        axis_lon=agent.heading_vec,
        semi_lon=0.5 * agent.length + params.a_lon_growth * growth,
        semi_lat=0.5 * agent.width + params.a_lat_max * growth,
    )


def ellipsoids_overlap(e1: ReachEllipsoid, e2: ReachEllipsoid) -> bool:
    """Center-line support test; never reports separation for touching sets."""
    dx = e2.center[0] - e1.center[0]
    dy = e2.center[1] - e1.center[1]
    dist = math.hypot(dx, dy)
    if dist == 0.0:
        return True
    u = (dx / dist, dy / dist)
    return dist <= e1.support(u) + e2.support(u)


def rsb_first_collision(ego: AgentState, obj: AgentState, params: ReachParams) -> GateResult:
    for k in range(params.n_steps + 1):
        tau = k * params.dt
        if ellipsoids_overlap(reach_ellipsoid(ego, tau, params), reach_ellipsoid(obj, tau, params)):
            return GateResult(True, grid_time(k, params), RSB)
    return GateResult(False, None, RSB)


# --- SAT ---------------------------------------------------------------------

def rollout_position(agent: AgentState, accel: float, tau: float) -> tuple[float, float]:
    """Position after ``tau`` s of constant acceleration along the heading.

    The along-heading speed is clamped at zero (no reversing); the velocity
    component across the heading is carried at constant rate.
    """
    hx, hy = agent.heading_vec
    s0 = agent.velocity[0] * hx + agent.velocity[1] * hy
    w0 = -agent.velocity[0] * hy + agent.velocity[1] * hx
    t_move = tau
    if accel != 0.0 and (s0 * accel < 0.0 or (s0 == 0.0 and accel < 0.0)):
        t_move = min(tau, -s0 / accel) if s0 != 0.0 else 0.0
    along = s0 * t_move + 0.5 * accel * t_move * t_move
    across = w0 * tau
    return (
        agent.position[0] + along * hx - across * hy,
        agent.position[1] + along * hy + across * hx,
    )


def obb_corners(center: tuple[float, float], heading: float, length: float,
                width: float) -> list[tuple[float, float]]:
    c, s = math.cos(heading), math.sin(heading)
    hl, hw = 0.5 * length, 0.5 * width
    out = []
    for sl, sw in ((1, 1), (1, -1), (-1, -1), (-1, 1)):
        out.append((center[0] + sl * hl * c - sw * hw * s, center[1] + sl * hl * s + sw * hw * c))
    return out


def obbs_overlap(corners_a: list[tuple[float, float]], heading_a: float,
                 corners_b: list[tuple[float, float]], heading_b: float) -> bool:
    """Separating-axis test over the two edge normals of each rectangle.

    Touching projections count as overlap.
    """
    axes = []
    for h in (heading_a, heading_b):
        c, s = math.cos(h), math.sin(h)
        axes.append((c, s))
        axes.append((-s, c))
    for ax, ay in axes:
        pa = [x * ax + y * ay for x, y in corners_a]
        pb = [x * ax + y * ay for x, y in corners_b]
        if max(pa) < min(pb) or max(pb) < min(pa):
            return False
    return True


def sat_first_collision(ego: AgentState, obj: AgentState, params: ReachParams,
                        ego_accel: float = 0.0, obj_accel: float = 0.0) -> GateResult:
    """First grid time at which the rolled-out footprints overlap.

    Callers pass the rollout accelerations: zero for the ego and for
    phantoms, the object's longitudinal acceleration for misses.
    """
    for k in range(params.n_steps + 1):
        tau = k * params.dt
        ca = obb_corners(rollout_position(ego, ego_accel, tau), ego.heading, ego.length, ego.width)
        cb = obb_corners(rollout_position(obj, obj_accel, tau), obj.heading, obj.length, obj.width)
        if obbs_overlap(ca, ego.heading, cb, obj.heading):
            return GateResult(True, grid_time(k, params), SAT)
    return GateResult(False, None, SAT)


def first_collision(kind: str, ego: AgentState, obj: AgentState, params: ReachParams,
                    obj_accel: float = 0.0) -> GateResult:
    kind = kind.upper()
    if kind == RSB:
        return rsb_first_collision(ego, obj, params)
    if kind == SAT:
        return sat_first_collision(ego, obj, params, 0.0, obj_accel)
    raise ValueError(f"unknown gate kind {kind!r}")
