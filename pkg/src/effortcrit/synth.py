"""Parametric scenes with injected perception errors and known metrics.

Every template is laid out in ego-centric snapshots: each frame places the
ego at the origin heading +x, and the erroneous object at its relative
position. The expected values in the sidecar come from the closed-form
oracle below, which deliberately shares nothing with the scoring pipeline
except the parameter object.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any, Optional

from .model import EGO_ID, AgentState, Frame, ReachParams, Scene, scene_to_lines

TEMPLATES = ("lead_miss", "phantom_static", "cut_in_converge", "adjacent_pass")

_DEFAULTS: dict[str, dict[str, float]] = {
    "lead_miss": dict(gap=25.0, v_ego=10.0, v_obj=0.0, a_obj=0.0, lateral_offset=0.0, v_lat=0.0, n_frames=1),
    "phantom_static": dict(gap=25.0, v_ego=10.0, v_obj=0.0, a_obj=0.0, lateral_offset=0.0, v_lat=0.0, n_frames=3),
    "cut_in_converge": dict(gap=20.0, v_ego=10.0, v_obj=8.0, a_obj=0.0, lateral_offset=3.0, v_lat=-1.0, n_frames=4),
    "adjacent_pass": dict(gap=15.0, v_ego=10.0, v_obj=5.0, a_obj=0.0, lateral_offset=3.5, v_lat=0.0, n_frames=3),
}


class SynthError(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioTemplate:
    kind: str
    gap: float = 25.0            # initial bumper-to-bumper gap, m
    v_ego: float = 10.0
    v_obj: float = 0.0           # object speed along +x, m/s
    a_obj: float = 0.0           # object longitudinal acceleration, m/s^2
    lateral_offset: float = 0.0  # object lateral center offset, m (left positive)
    v_lat: float = 0.0           # object lateral velocity, m/s
    n_frames: int = 1
    t_cycle: float = 0.5
    scene_id: Optional[str] = None

    @classmethod
    def preset(cls, kind: str, **overrides: Any) -> "ScenarioTemplate":
        if kind not in _DEFAULTS:
            raise SynthError(f"unknown template {kind!r}; expected one of {', '.join(TEMPLATES)}")
        values = dict(_DEFAULTS[kind])
        values.update({k: v for k, v in overrides.items() if v is not None})
        values["n_frames"] = int(values["n_frames"])
        return cls(kind=kind, **values)

    def validate(self, params: ReachParams) -> None:
        if self.kind not in TEMPLATES:
            raise SynthError(f"unknown template {self.kind!r}")
        if self.n_frames < 1:
            raise SynthError("n_frames must be >= 1")
        if self.t_cycle <= 0:
            raise SynthError("t_cycle must be > 0")
        if self.v_ego < 0 or self.v_obj < 0:
            raise SynthError("speeds must be non-negative")
        if self.gap <= 0:
            raise SynthError("object initially overlaps the ego (gap must be > 0)")
        clearance = 0.5 * (params.default_width + params.default_width) + params.safety_margin
        if self.kind == "phantom_static" and (self.v_obj != 0 or self.a_obj != 0 or self.v_lat != 0):
            raise SynthError("phantom_static requires a static phantom")
        if self.kind == "cut_in_converge" and not (self.lateral_offset * self.v_lat < 0):
            raise SynthError("cut_in_converge requires lateral velocity toward the ego")
        if self.kind == "adjacent_pass":
            if abs(self.lateral_offset) <= clearance:
                raise SynthError(f"adjacent_pass requires |lateral_offset| > {clearance:g}")
            if self.v_lat != 0:
                raise SynthError("adjacent_pass requires parallel motion (v_lat = 0)")


# --- scene construction ------------------------------------------------------

def _object_state(tpl: ScenarioTemplate, t: float) -> tuple[float, float, float, float]:
    """(gap, lateral offset, longitudinal speed, longitudinal accel) at time t."""
    if tpl.kind == "phantom_static":
        return tpl.gap, tpl.lateral_offset, 0.0, 0.0
    v, a = tpl.v_obj, tpl.a_obj
    t_move = t
    stopped = False
    if a < 0 and v + a * t <= 0:
        t_move = v / -a
        stopped = True
    travelled = v * t_move + 0.5 * a * t_move * t_move
    gap = tpl.gap + travelled - tpl.v_ego * t
    speed = 0.0 if stopped else v + a * t
    return gap, tpl.lateral_offset + tpl.v_lat * t, speed, (0.0 if stopped else a)


def build_scene(tpl: ScenarioTemplate, params: ReachParams) -> Scene:
    tpl.validate(params)
    L, W = params.default_length, params.default_width
    frames = []
    for i in range(tpl.n_frames):
        t = round(i * tpl.t_cycle, 9)
        gap, lat, speed, accel = _object_state(tpl, t)
        if gap <= 0 and abs(lat) < W:
            raise SynthError(f"object overlaps the ego at frame {i}")
        ego = AgentState(EGO_ID, "car", (0.0, 0.0), 0.0, L, W, (tpl.v_ego, 0.0))
        obj_x = gap + L  # bumper gap plus two half lengths
        if tpl.kind == "phantom_static":
            det = AgentState("P1", "car", (obj_x, lat), 0.0, L, W, (0.0, 0.0), 0.0, 0.9)
            frames.append(Frame(t, ego, (), (det,)))
        else:
            gt = AgentState("G1", "car", (obj_x, lat), 0.0, L, W, (speed, tpl.v_lat), accel)
            frames.append(Frame(t, ego, (gt,), ()))
    return Scene(tpl.scene_id or f"synth-{tpl.kind}", tuple(frames), tpl.t_cycle)


# --- closed-form oracle ------------------------------------------------------

def _ceil_grid(tau: float, dt: float) -> int:
    return int(math.ceil(tau / dt - 1e-9))


def oracle_t_coll_rsb(gap: float, lat: float, v_close: float, v_lat: float,
                      params: ReachParams) -> Optional[float]:
    """Earliest grid time the equal-size, equally oriented ellipses overlap."""
    L, W = params.default_length, params.default_width
    g_lon, g_lat = params.a_lon_growth, params.a_lat_max
    n = int(round(params.t_horizon / params.dt))
    if lat == 0 and v_lat == 0:
        # 1-D: gap - v_close*tau <= g_lon*tau^2 (sum of both semi-axis growths)
        disc = v_close * v_close + 4.0 * g_lon * gap
        tau = (-v_close + math.sqrt(disc)) / (2.0 * g_lon)
        k = _ceil_grid(tau, params.dt)
        return round(k * params.dt, 9) if k <= n else None
    for k in range(n + 1):
        tau = k * params.dt
        cx = gap + L - v_close * tau
        cy = lat + v_lat * tau
        a = 0.5 * L + 0.5 * g_lon * tau * tau
        b = 0.5 * W + 0.5 * g_lat * tau * tau
        # |c| <= 2*sqrt(a^2 ux^2 + b^2 uy^2)  <=>  |c|^4 <= 4 (a^2 cx^2 + b^2 cy^2)
        r2 = cx * cx + cy * cy
        if r2 * r2 <= 4.0 * (a * a * cx * cx + b * b * cy * cy):
            return round(k * params.dt, 9)
    return None


def oracle_t_coll_sat(gap: float, lat: float, v_ego: float, v_obj: float, a_obj: float,
                      v_lat: float, params: ReachParams) -> Optional[float]:
    """Earliest grid time two axis-aligned boxes overlap under the rollout."""
    L, W = params.default_length, params.default_width
    n = int(round(params.t_horizon / params.dt))
    if a_obj == 0 and lat == 0 and v_lat == 0:
        if v_ego <= v_obj:
            return None
        k = _ceil_grid(gap / (v_ego - v_obj), params.dt)
        return round(k * params.dt, 9) if k <= n else None
    for k in range(n + 1):
        tau = k * params.dt
        t_move = tau
        if a_obj < 0 and v_obj + a_obj * tau < 0:
            t_move = v_obj / -a_obj
        dx = gap + L + v_obj * t_move + 0.5 * a_obj * t_move * t_move - v_ego * tau
        dy = lat + v_lat * tau
        if abs(dx) <= L and abs(dy) <= W:
            return round(k * params.dt, 9)
    return None


def oracle_fp_brake(gap: float, v_ego: float, v_obj: float, params: ReachParams) -> float:
    closing = v_ego - v_obj
    if closing <= 0:
        return 0.0
    free = gap - closing * params.t_react
    if free <= 0:
        return params.a_brake_max
    return min(closing ** 2 / (2.0 * free), params.a_brake_max)


def oracle_fn_brake(gap: float, v_ego: float, v_obj: float, a_obj: float, params: ReachParams) -> float:
    tr = params.t_react
    closing_after = (v_ego - v_obj) - a_obj * tr
    if closing_after <= 0:
        return 0.0
    gap_after = gap - (v_ego - v_obj) * tr + 0.5 * a_obj * tr ** 2
    if gap_after <= 0:
        return params.a_brake_max
    return min(max(closing_after ** 2 / (2.0 * gap_after) - a_obj, 0.0), params.a_brake_max)


def oracle_lea(lat: float, v_lat: float, t_coll: float, params: ReachParams) -> float:
    t_eva = t_coll - params.t_react
    if t_eva <= 0:
        return params.a_lat_cap
    w_c = params.default_width + params.safety_margin
    if lat > 0 or (lat == 0 and v_lat >= 0):
        closing = v_lat
    else:
        closing = -v_lat
    widen = max(0.0, w_c - abs(lat)) - closing * t_eva
    cross = w_c + abs(lat) + closing * t_eva
    best = min(max(widen, 0.0), max(cross, 0.0))
    return min(2.0 * best / t_eva ** 2, params.a_lat_cap)


def expected_metrics(tpl: ScenarioTemplate, params: ReachParams) -> dict[str, Any]:
    tpl.validate(params)
    is_fp = tpl.kind == "phantom_static"
    out: dict[str, Any] = {}
    for gate in ("RSB", "SAT"):
        frames = []
        for i in range(tpl.n_frames):
            t = round(i * tpl.t_cycle, 9)
            gap, lat, speed, accel = _object_state(tpl, t)
            if gate == "RSB":
                t_coll = oracle_t_coll_rsb(gap, lat, tpl.v_ego - speed, tpl.v_lat, params)
            else:
                t_coll = oracle_t_coll_sat(gap, lat, tpl.v_ego, speed, accel, tpl.v_lat, params)
            if t_coll is None:
                frames.append({"frame": i, "gated": False, "t_coll": None, "a_brake": 0.0, "lea": 0.0})
                continue
            if is_fp:
                a_brake = oracle_fp_brake(gap, tpl.v_ego, speed, params)
            else:
                a_brake = oracle_fn_brake(gap, tpl.v_ego, speed, accel, params)
            frames.append({
                "frame": i, "gated": True, "t_coll": t_coll, "a_brake": a_brake,
                "lea": oracle_lea(lat, tpl.v_lat, t_coll, params),
            })
        gated = [f for f in frames if f["gated"]]
        track: dict[str, Any] = {
            "kind": "FP" if is_fp else "FN",
            "identity": "P1" if is_fp else "G1",
            "n_gated": len(gated),
            "frames": frames,
            "lea_peak": max((f["lea"] for f in gated), default=0.0),
            "fsr": None,
            "mdr": None,
        }
        if is_fp:
            track["fsr"] = tpl.t_cycle * math.fsum(f["a_brake"] for f in gated)
        else:
            track["mdr"] = max((f["a_brake"] for f in gated), default=0.0)
        out[gate] = {"tracks": [track]}
    return out


def generate(tpl: ScenarioTemplate, params: ReachParams | None = None) -> tuple[Scene, dict[str, Any]]:
    params = params or ReachParams()
    scene = build_scene(tpl, params)
    sidecar = {
        "scene_id": scene.scene_id,
        "template": {f.name: getattr(tpl, f.name) for f in fields(tpl) if f.name != "scene_id"},
        "params": asdict(params),
        "expected": expected_metrics(tpl, params),
    }
    return scene, sidecar


def write(tpl: ScenarioTemplate, out_dir: str | Path, params: ReachParams | None = None,
          name: Optional[str] = None) -> tuple[Path, Path]:
    scene, sidecar = generate(tpl, params)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = name or scene.scene_id
    scene_path = out_dir / f"{stem}.jsonl"
    sidecar_path = out_dir / f"{stem}.expected.json"
    scene_path.write_text("\n".join(scene_to_lines(scene)) + "\n", encoding="utf-8")
    sidecar_path.write_text(json.dumps(sidecar, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return scene_path, sidecar_path
