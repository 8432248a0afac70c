"""Established criticality measures and four-zone severity bands."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .effort import TrackEffort
from .model import RelativeKinematics, ReachParams

TTC_REPORT_CAP = 10.0


class SeverityZone(enum.IntEnum):
    Safe = 0
    Moderate = 1
    Critical = 2
    Imminent = 3


# Upper-inclusive band edges (Safe/Moderate, Moderate/Critical,
# Critical/Imminent) for metrics where larger means more dangerous.
INCREASING_BANDS = {
    "MDR": (2.0, 4.0, 6.0),
    "FSR": (1.0, 2.5, 5.0),
    "LEA": (1.0, 2.0, 4.0),
    "BTN": (0.4, 0.7, 1.0),
}
# TTC: > 3 Safe, (2, 3] Moderate, (1, 2] Critical, <= 1 Imminent
TTC_BANDS = (3.0, 2.0, 1.0)
METRICS = ("TTC", "BTN", "MDR", "FSR", "LEA")


def ttc_classical(k: RelativeKinematics, cap: Optional[float] = TTC_REPORT_CAP) -> Optional[float]:
    """Gap over closing speed; None when the object is behind or not closing."""
    dv = k.v_ego - k.v_obj_lon
    if dv <= 0 or not k.ahead:
        return None
    ttc = k.R / dv
    return min(ttc, cap) if cap is not None else ttc


def thw(k: RelativeKinematics) -> Optional[float]:
    if k.v_ego <= 0:
        return None
    return k.R / k.v_ego


def drac(k: RelativeKinematics, params: ReachParams) -> float:
    """Constant-velocity deceleration to avoid a crash, capped at max braking."""
    dv = k.v_ego - k.v_obj_lon
    if dv <= 0 or not k.ahead:
        return 0.0
    if k.R <= 0:
        # bodies already touching while closing
        return params.a_brake_max
    return min(dv * dv / (2.0 * k.R), params.a_brake_max)


def btn(k: RelativeKinematics, params: ReachParams) -> float:
    return drac(k, params) / params.a_brake_max


def tet_track(track_frames: Iterable[tuple[bool, Optional[float]]], t_cycle: float,
              threshold: float = 2.0) -> float:
    """Time exposed below the TTC threshold over gated frames."""
    n = sum(1 for gated, ttc in track_frames if gated and ttc is not None and ttc < threshold)
    return n * t_cycle


def stn(lea: float, params: ReachParams) -> float:
    return lea / params.a_lat_max


def classify(metric: str, value: Optional[float]) -> SeverityZone:
    metric = metric.upper()
    if metric == "TTC":
        if value is None:
            return SeverityZone.Safe
        safe, moderate, critical = TTC_BANDS
        if value > safe:
            return SeverityZone.Safe
        if value > moderate:
            return SeverityZone.Moderate
        if value > critical:
            return SeverityZone.Critical
        return SeverityZone.Imminent
    try:
        edges = INCREASING_BANDS[metric]
    except KeyError:
        raise ValueError(f"unknown metric {metric!r}") from None
    if value is None:
        return SeverityZone.Safe
    for zone, edge in zip(SeverityZone, edges):
        if value <= edge:
            return zone
    return SeverityZone.Imminent


@dataclass(frozen=True)
class ClassicScores:
    """Per-track representatives over gated frames (most critical value)."""

    min_ttc: Optional[float]  # uncapped
    max_drac: Optional[float]
    max_btn: Optional[float]
    min_thw: Optional[float]
    tet: float
    min_dy: Optional[float]

    @property
    def min_ttc_reported(self) -> Optional[float]:
        return None if self.min_ttc is None else min(self.min_ttc, TTC_REPORT_CAP)


def _min(values: Sequence[Optional[float]]) -> Optional[float]:
    vals = [v for v in values if v is not None]
    return min(vals) if vals else None


def track_classics(te: TrackEffort, t_cycle: float, params: ReachParams) -> ClassicScores:
    gated = {f.frame_index for f in te.frames if f.gated}
    kins = [o.kin for o in te.track.occurrences if o.frame_index in gated]
    ttcs = [ttc_classical(k, cap=None) for k in kins]
    dracs = [drac(k, params) for k in kins]
    return ClassicScores(
        min_ttc=_min(ttcs),
        max_drac=max(dracs) if dracs else None,
        max_btn=max(d / params.a_brake_max for d in dracs) if dracs else None,
        min_thw=_min([thw(k) for k in kins]),
        tet=tet_track([(True, t) for t in ttcs], t_cycle, params.ttc_tet_threshold),
        min_dy=min((abs(k.d_y) for k in kins), default=None),
    )
