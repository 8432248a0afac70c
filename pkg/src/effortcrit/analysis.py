"""Track- and dataset-level aggregation, severity histograms, rank correlation
and report serialization."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass
from typing import Any, Callable, Iterable, Mapping, Optional, Sequence

import numpy as np
from scipy.stats import rankdata

from .classic import ClassicScores, SeverityZone, classify
from .effort import TrackEffort
from .matching import FN, FP

SCHEMA_VERSION = 1

# thresholds for the critical-track counts
CRITICAL_BRAKE = 4.0
TIME_CRITICAL_TCOLL = 2.0

CORRELATION_ROWS = ((FN, "MDR"), (FN, "LEA"), (FP, "FSR"), (FP, "LEA"))
CORRELATION_COLUMNS = ("TTC", "DRAC", "THW", "TET", "d_y")
_ROW_FIELD = {"MDR": "mdr", "FSR": "fsr", "LEA": "lea_peak"}
_COLUMN_FIELD = {"TTC": "min_ttc_raw", "DRAC": "max_drac", "THW": "min_thw", "TET": "tet", "d_y": "min_dy"}
CORRELATION_POPULATION = "gated tracks (n_gated > 0), zero-effort tracks included"

CSV_COLUMNS = (
    "scene", "kind", "identity", "class", "n_gated", "duration", "fsr", "mdr", "lea_peak",
    "min_ttc", "tet", "max_drac", "min_thw", "min_dy", "zones",
)


class CorrelationError(ValueError):
    def __init__(self, reason: str, message: str):
        self.reason = reason
        super().__init__(message)


# --- aggregation -------------------------------------------------------------

@dataclass(frozen=True)
class AggregateRow:
    dataset_id: str
    pipeline_id: str
    class_label: str
    fn_tracks: int = 0
    fp_tracks: int = 0
    critical_fn: int = 0
    critical_fp: int = 0
    tc: int = 0
    mean_mdr: float = 0.0
    mean_fsr: float = 0.0
    mean_lea: float = 0.0
    cum_mdr: float = 0.0
    cum_fsr: float = 0.0
    cum_lea: float = 0.0
    worst_mdr: float = 0.0
    worst_fsr: float = 0.0
    worst_lea: float = 0.0
    precision: float = 1.0
    recall: float = 1.0

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def _stats(values: Sequence[float]) -> tuple[float, float, float]:
    if not values:
        return 0.0, 0.0, 0.0
    total = math.fsum(values)
    return total / len(values), total, max(values)


def aggregate(track_efforts: Sequence[TrackEffort], classic: Optional[Sequence[ClassicScores]] = None,
              *, dataset_id: str = "default", pipeline_id: str = "default", class_label: str = "all",
              precision: float = 1.0, recall: float = 1.0) -> AggregateRow:
    """Summarize one (dataset, pipeline, class) cell.

    Tracks that never pass the gate count as error tracks but carry zero
    effort, so they add nothing to the critical counts or the sums.
    """
    fns = [t for t in track_efforts if t.kind == FN]
    fps = [t for t in track_efforts if t.kind == FP]
    mean_mdr, cum_mdr, worst_mdr = _stats([t.mdr or 0.0 for t in fns])
    mean_fsr, cum_fsr, worst_fsr = _stats([t.fsr or 0.0 for t in fps])
    mean_lea, cum_lea, worst_lea = _stats([t.lea_peak for t in track_efforts])
    return AggregateRow(
        dataset_id=dataset_id,
        pipeline_id=pipeline_id,
        class_label=class_label,
        fn_tracks=len(fns),
        fp_tracks=len(fps),
        critical_fn=sum(1 for t in fns if (t.mdr or 0.0) >= CRITICAL_BRAKE),
        critical_fp=sum(1 for t in fps if t.max_a_brake >= CRITICAL_BRAKE),
        tc=sum(1 for t in track_efforts if t.min_t_coll is not None and t.min_t_coll < TIME_CRITICAL_TCOLL),
        mean_mdr=mean_mdr, mean_fsr=mean_fsr, mean_lea=mean_lea,
        cum_mdr=cum_mdr, cum_fsr=cum_fsr, cum_lea=cum_lea,
        worst_mdr=worst_mdr, worst_fsr=worst_fsr, worst_lea=worst_lea,
        precision=precision, recall=recall,
    )


def severity_histogram(track_efforts: Iterable[TrackEffort],
                       classify_fn: Callable[[str, Optional[float]], SeverityZone] = classify
                       ) -> dict[str, dict[str, dict[str, int]]]:
    """Zone counts: FN tracks by MDR, FP tracks by FSR, all tracks by LEA."""
    hist: dict[str, dict[str, dict[str, int]]] = {}

    def bump(kind: str, metric: str, value: Optional[float]) -> None:
        zones = hist.setdefault(kind, {}).setdefault(metric, {z.name: 0 for z in SeverityZone})
        zones[classify_fn(metric, value).name] += 1

    for t in track_efforts:
        if t.kind == FN:
            bump(FN, "MDR", t.mdr)
        else:
            bump(FP, "FSR", t.fsr)
        bump("ALL", "LEA", t.lea_peak)
    return hist


# --- rank correlation --------------------------------------------------------

def spearman(x: Sequence[float], y: Sequence[float]) -> float:
    """Spearman's rho with average ranks for ties (Pearson on rank vectors)."""
    if len(x) != len(y):
        raise CorrelationError("length_mismatch", f"length mismatch: {len(x)} vs {len(y)}")
    if len(x) < 2:
        raise CorrelationError("insufficient", "need at least two observations")
    rx = rankdata(np.asarray(x, dtype=float), method="average")
    ry = rankdata(np.asarray(y, dtype=float), method="average")
    dx = rx - rx.mean()
    dy = ry - ry.mean()
    sxx = float(np.dot(dx, dx))
    syy = float(np.dot(dy, dy))
    if sxx == 0.0 or syy == 0.0:
        raise CorrelationError("degenerate", "constant input")
    rho = float(np.dot(dx, dy)) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, rho))


def correlation_from_records(records: Sequence[Mapping[str, Any]]) -> dict[str, dict[str, dict[str, Any]]]:
    """Spearman matrix of effort metrics against classical ones.

    Each entry is ``{"rho": value, "n": count}`` or, when undefined,
    ``{"rho": None, "n": count, "reason": tag}``.
    """
    table: dict[str, dict[str, dict[str, Any]]] = {}
    for kind, metric in CORRELATION_ROWS:
        pop = [r for r in records if r["kind"] == kind and r["n_gated"] > 0]
        row = table.setdefault(f"{kind}:{metric}", {})
        for column in CORRELATION_COLUMNS:
            pairs = [
                (r[_ROW_FIELD[metric]], r[_COLUMN_FIELD[column]])
                for r in pop
                if r[_ROW_FIELD[metric]] is not None and r[_COLUMN_FIELD[column]] is not None
            ]
            entry: dict[str, Any] = {"n": len(pairs)}
            try:
                entry["rho"] = spearman([p[0] for p in pairs], [p[1] for p in pairs])
            except CorrelationError as exc:
                entry["rho"] = None
                entry["reason"] = exc.reason
            row[column] = entry
    return table


def correlation_table(track_efforts: Sequence[TrackEffort], classic_scores: Sequence[ClassicScores]):
    return correlation_from_records(
        [track_record(te, cs) for te, cs in zip(track_efforts, classic_scores)]
    )


# --- records and serialization ----------------------------------------------

def zones_for(te: TrackEffort) -> dict[str, str]:
    zones = {}
    if te.kind == FN:
        zones["MDR"] = classify("MDR", te.mdr).name
    else:
        zones["FSR"] = classify("FSR", te.fsr).name
    zones["LEA"] = classify("LEA", te.lea_peak).name
    return zones


def track_record(te: TrackEffort, cs: ClassicScores) -> dict[str, Any]:
    return {
        "scene": te.track.scene_id,
        "kind": te.kind,
        "identity": te.track.identity,
        "class": te.track.class_label,
        "gate": te.gate_kind,
        "n_gated": te.n_gated,
        "duration": te.duration,
        "fsr": te.fsr,
        "mdr": te.mdr,
        "lea_peak": te.lea_peak,
        "max_a_brake": te.max_a_brake,
        "min_t_coll": te.min_t_coll,
        "min_ttc": cs.min_ttc_reported,
        "min_ttc_raw": cs.min_ttc,
        "tet": cs.tet,
        "max_drac": cs.max_drac,
        "min_thw": cs.min_thw,
        "min_dy": cs.min_dy,
        "zones": zones_for(te),
        "frames": [
            {"frame": f.frame_index, "gated": f.gated, "t_coll": f.t_coll, "a_brake": f.a_brake, "lea": f.lea}
            for f in te.frames
        ],
    }


def _clean(obj: Any) -> Any:
    # JSON has no inf/nan; normalize -0.0 so output bytes do not depend on it
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return None
        return 0.0 if obj == 0 else obj
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def dumps_report(report: Mapping[str, Any]) -> str:
    return json.dumps(_clean(report), sort_keys=True, indent=2) + "\n"


def _fmt(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return format(0.0 if value == 0 else value, ".6g")
    return str(value)


def tracks_csv(records: Sequence[Mapping[str, Any]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in records:
        zones = ";".join(f"{k}:{v}" for k, v in sorted(r["zones"].items()))
        writer.writerow([zones if c == "zones" else _fmt(r[c]) for c in CSV_COLUMNS])
    return buf.getvalue()

