"""Domain types, scene ingestion and ego-frame projection.

Scene files are line-delimited JSON. The first line is a header carrying
``scene_id`` and ``t_cycle``; every following line is one frame::

    {"scene_id": "s0", "t_cycle": 0.5}
    {"t": 0.0, "ego": {...}, "gt": [...], "det": [...]}

Object records use the keys ``id, class, x, y, heading, vx, vy, a, length,
width`` (detections add ``score``). ``a``, ``length`` and ``width`` are
optional; dimensions fall back to the configured vehicle defaults.
"""
from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Mapping

CLASS_LABELS = ("car", "truck", "other")
EGO_ID = "ego"

# relative tolerance on successive timestamp deltas vs t_cycle
CYCLE_TOLERANCE = 0.10


class SceneError(ValueError):
    """Raised for malformed or invalid scene files."""

    def __init__(self, message: str, *, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ReachParams:
    """Reachable-set bounds, capability caps, vehicle defaults and timing.

    Defaults reproduce the published parameter table. Accelerations are in
    m/s^2, lengths in m, times in s.
    """

    a_lon_max: float = 2.0
    a_lon_min: float = -3.0
    a_lat_max: float = 2.0
    a_brake_max: float = 10.0
    a_lat_cap: float = 5.0
    default_length: float = 4.5
    default_width: float = 1.8
    safety_margin: float = 0.5
    t_react: float = 0.3
    t_horizon: float = 5.0
    dt: float = 0.1
    t_cycle: float = 0.5
    ttc_tet_threshold: float = 2.0

    def __post_init__(self) -> None:
        for name in dataclasses.fields(self):
            value = getattr(self, name.name)
            if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
                raise ConfigError(f"{name.name} must be a finite number, got {value!r}")
        checks = [
            ("a_lon_max", self.a_lon_max > 0),
            ("a_lon_min", self.a_lon_min < 0),
            ("a_lat_max", self.a_lat_max > 0),
            ("a_brake_max", self.a_brake_max > 0),
            ("a_lat_cap", self.a_lat_cap > 0),
            ("dt", 0 < self.dt <= self.t_horizon),
            ("t_react", self.t_react >= 0),
            ("t_cycle", self.t_cycle > 0),
            ("default_length", self.default_length > 0),
            ("default_width", self.default_width > 0),
            ("safety_margin", self.safety_margin > 0),
            ("ttc_tet_threshold", self.ttc_tet_threshold > 0),
        ]
        for name, ok in checks:
            if not ok:
                raise ConfigError(f"invalid value for {name}: {getattr(self, name)!r}")

    @property
    def a_lon_growth(self) -> float:
        """Longitudinal growth rate of the reachable set (the larger bound)."""
        return max(self.a_lon_max, abs(self.a_lon_min))

    @property
    def n_steps(self) -> int:
        """Number of gate steps after tau = 0 up to the horizon."""
        return int(round(self.t_horizon / self.dt))

    def replace(self, **changes: Any) -> "ReachParams":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict[str, float]:
        return dataclasses.asdict(self)


def params_from_mapping(values: Mapping[str, Any], base: ReachParams | None = None) -> ReachParams:
    base = base or ReachParams()
    known = {f.name for f in dataclasses.fields(ReachParams)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
    changes = {}
    for key, value in values.items():
        try:
            changes[key] = float(value)
        except (TypeError, ValueError):
            raise ConfigError(f"config key {key} is not a number: {value!r}") from None
    return base.replace(**changes)


def load_config(path: str | Path) -> ReachParams:
    """Read flat key/value overrides of the default parameters.

    ``.json`` files hold one flat object; anything else is read as
    ``key = value`` lines with ``#`` comments.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if path.suffix == ".json":
        try:
            values = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
        if not isinstance(values, dict):
            raise ConfigError(f"{path}: expected a flat JSON object")
    else:
        values = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            values[key] = value
    return params_from_mapping(values)


@dataclass(frozen=True)
class AgentState:
    id: str
    class_label: str
    position: tuple[float, float]
    heading: float
    length: float
    width: float
    velocity: tuple[float, float] = (0.0, 0.0)
    accel_lon: float = 0.0
    confidence: float = 1.0

    def __post_init__(self) -> None:
        if self.class_label not in CLASS_LABELS:
            raise ValueError(f"class_label must be one of {CLASS_LABELS}, got {self.class_label!r}")
        if not (self.length > 0):
            raise ValueError(f"length must be > 0, got {self.length}")
        if not (self.width > 0):
            raise ValueError(f"width must be > 0, got {self.width}")
        if not math.isfinite(self.heading):
            raise ValueError("heading must be finite")
        if not (0.0 <= self.confidence <= 1.0):
            raise ValueError("confidence out of range")

    @property
    def heading_vec(self) -> tuple[float, float]:
        return (math.cos(self.heading), math.sin(self.heading))

    @property
    def speed_lon(self) -> float:
        """Signed speed along the agent's own heading."""
        hx, hy = self.heading_vec
        return self.velocity[0] * hx + self.velocity[1] * hy


@dataclass(frozen=True)
class Frame:
    timestamp: float
    ego: AgentState
    gt_objects: tuple[AgentState, ...] = ()
    detections: tuple[AgentState, ...] = ()

    def __post_init__(self) -> None:
        for name, objs in (("gt", self.gt_objects), ("det", self.detections)):
            ids = [o.id for o in objs]
            if len(ids) != len(set(ids)):
                raise ValueError(f"duplicate {name} ids within frame at t={self.timestamp}")


@dataclass(frozen=True)
class Scene:
    scene_id: str
    frames: tuple[Frame, ...]
    t_cycle: float

    def __post_init__(self) -> None:
        if not self.frames:
            raise ValueError("scene has no frames")
        if not (self.t_cycle > 0):
            raise ValueError("t_cycle must be > 0")
        for i in range(1, len(self.frames)):
            delta = self.frames[i].timestamp - self.frames[i - 1].timestamp
            if delta <= 0:
                raise ValueError(f"timestamps not strictly increasing at frame {i}")
            if abs(delta - self.t_cycle) > CYCLE_TOLERANCE * self.t_cycle:
                raise ValueError(
                    f"timestamp delta {delta:g} at frame {i} deviates from t_cycle {self.t_cycle:g}"
                )


@dataclass(frozen=True)
class RelativeKinematics:
    """One object projected into the ego frame.

    ``R`` is the bumper-to-bumper longitudinal gap, ``d_y`` the signed lateral
    center offset (positive left of the ego).
    """

    R: float
    d_y: float
    v_obj_lon: float
    v_ego: float
    v_rel_y: float
    a_obj_lon: float = 0.0
    ahead: bool = True

    def __post_init__(self) -> None:
        if not (self.R >= 0):
            raise ValueError(f"R must be >= 0, got {self.R}")


def project_to_ego(ego: AgentState, obj: AgentState) -> RelativeKinematics:
    hx, hy = ego.heading_vec
    nx, ny = -hy, hx
    dx = obj.position[0] - ego.position[0]
    dy = obj.position[1] - ego.position[1]
    gap = dx * hx + dy * hy
    R = max(0.0, abs(gap) - 0.5 * (ego.length + obj.length))
    dvx = obj.velocity[0] - ego.velocity[0]
    dvy = obj.velocity[1] - ego.velocity[1]
    return RelativeKinematics(
        R=R,
        d_y=dx * nx + dy * ny,
        v_obj_lon=obj.velocity[0] * hx + obj.velocity[1] * hy,
        v_ego=ego.velocity[0] * hx + ego.velocity[1] * hy,
        v_rel_y=dvx * nx + dvy * ny,
        a_obj_lon=obj.accel_lon,
        ahead=gap > 0,
    )


# --- scene file ingestion ----------------------------------------------------

def _number(rec: Mapping[str, Any], key: str, where: str, default: float | None = None) -> float:
    if key not in rec or rec[key] is None:
        if default is None:
            raise ValueError(f"{where}: missing field '{key}'")
        return float(default)
    value = rec[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValueError(f"{where}: field '{key}' must be a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"{where}: field '{key}' must be finite")
    return value


def _class_label(raw: Any) -> str:
    label = str(raw).lower()
    return label if label in CLASS_LABELS else "other"


def _parse_agent(rec: Any, where: str, params: ReachParams, *, kind: str) -> AgentState:
    if not isinstance(rec, dict):
        raise ValueError(f"{where}: expected an object")
    length = _number(rec, "length", where, params.default_length)
    width = _number(rec, "width", where, params.default_width)
    if length <= 0:
        raise ValueError(f"{where}: field 'length' must be > 0")
    if width <= 0:
        raise ValueError(f"{where}: field 'width' must be > 0")
    if kind == "ego":
        ident, label, conf, accel = EGO_ID, "car", 1.0, _number(rec, "a", where, 0.0)
    else:
        if "id" not in rec:
            raise ValueError(f"{where}: missing field 'id'")
        ident = str(rec["id"])
        label = _class_label(rec.get("class", "other"))
        if kind == "det":
            conf = _number(rec, "score", where, 1.0)
            if not 0.0 <= conf <= 1.0:
                raise ValueError(f"{where}: field 'score': confidence out of range ({conf:g})")
            # phantoms follow a constant-velocity model
            accel = 0.0
        else:
            conf, accel = 1.0, _number(rec, "a", where, 0.0)
    return AgentState(
        id=ident,
        class_label=label,
        position=(_number(rec, "x", where), _number(rec, "y", where)),
        heading=_number(rec, "heading", where, 0.0),
        length=length,
        width=width,
        velocity=(_number(rec, "vx", where, 0.0), _number(rec, "vy", where, 0.0)),
        accel_lon=accel,
        confidence=conf,
    )


def parse_frame(rec: Any, params: ReachParams, where: str = "frame") -> Frame:
    if not isinstance(rec, dict):
        raise ValueError(f"{where}: expected a JSON object")
    if "ego" not in rec or rec["ego"] is None:
        raise ValueError(f"{where}: missing ego record")
    t = _number(rec, "t", where)
    ego = _parse_agent(rec["ego"], f"{where} ego", params, kind="ego")
    out: dict[str, list[AgentState]] = {"gt": [], "det": []}
    for key in ("gt", "det"):
        items = rec.get(key, [])
        if not isinstance(items, list):
            raise ValueError(f"{where}: field '{key}' must be an array")
        for j, item in enumerate(items):
            out[key].append(_parse_agent(item, f"{where} {key}[{j}]", params, kind=key))
    return Frame(timestamp=t, ego=ego, gt_objects=tuple(out["gt"]), detections=tuple(out["det"]))


def parse_scene_lines(lines: Iterable[str], params: ReachParams | None = None,
                      path: str | None = None) -> Scene:
    params = params or ReachParams()
    header: dict[str, Any] | None = None
    frames: list[Frame] = []
    for lineno, raw in enumerate(lines, start=1):
        if not raw.strip():
            continue
        try:
            rec = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise SceneError(f"parse error: {exc.msg}", path=path, line=lineno) from None
        try:
            if header is None:
                if not isinstance(rec, dict) or "scene_id" not in rec or "t_cycle" not in rec:
                    raise ValueError("header must carry 'scene_id' and 't_cycle'")
                header = rec
                t_cycle = _number(rec, "t_cycle", "header")
                if t_cycle <= 0:
                    raise ValueError("header: field 't_cycle' must be > 0")
                continue
            frames.append(parse_frame(rec, params, where=f"frame {len(frames)}"))
        except ValueError as exc:
            raise SceneError(str(exc), path=path, line=lineno) from None
    if header is None or not frames:
        raise SceneError("empty scene: no frames", path=path)
    try:
        return Scene(scene_id=str(header["scene_id"]), frames=tuple(frames), t_cycle=t_cycle)
    except ValueError as exc:
        raise SceneError(f"invariant violation: {exc}", path=path) from None


def load_scene(path: str | Path, params: ReachParams | None = None) -> Scene:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise SceneError(f"cannot read: {exc.strerror or exc}", path=str(path)) from None
    return parse_scene_lines(text.splitlines(), params, path=str(path))


def agent_to_record(agent: AgentState, kind: str) -> dict[str, Any]:
    rec: dict[str, Any] = {}
    if kind != "ego":
        rec["id"] = agent.id
        rec["class"] = agent.class_label
    rec.update(
        x=agent.position[0], y=agent.position[1], heading=agent.heading,
        vx=agent.velocity[0], vy=agent.velocity[1], a=agent.accel_lon,
        length=agent.length, width=agent.width,
    )
    if kind == "det":
        rec["score"] = agent.confidence
    return rec


def scene_to_lines(scene: Scene) -> list[str]:
    """Serialize a scene back to the line-delimited file format."""
    lines = [json.dumps({"scene_id": scene.scene_id, "t_cycle": scene.t_cycle}, sort_keys=True)]
    for frame in scene.frames:
        rec = {
            "t": frame.timestamp,
            "ego": agent_to_record(frame.ego, "ego"),
            "gt": [agent_to_record(o, "gt") for o in frame.gt_objects],
            "det": [agent_to_record(o, "det") for o in frame.detections],
        }
        lines.append(json.dumps(rec, sort_keys=True))
    return lines
