"""Scene evaluation: match -> error tracks -> gate + score -> classical metrics,
and assembly of the JSON report."""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Sequence

from . import __version__
from .analysis import (
    CORRELATION_POPULATION, SCHEMA_VERSION, aggregate, correlation_from_records,
    severity_histogram, track_record,
)
from .classic import ClassicScores, track_classics
from .effort import CONSISTENT, TrackEffort, score_track
from .gate import RSB
from .matching import MATCH_THRESHOLD, FP, FrameMatchResult, build_error_tracks, match_scene, precision_recall
from .model import ReachParams, Scene

DEFAULT_CLASSES = ("car", "truck")


class InvariantViolation(RuntimeError):
    pass


@dataclass(frozen=True)
class ClassResult:
    scene_id: str
    class_label: str
    per_frame: tuple[FrameMatchResult, ...]
    efforts: tuple[TrackEffort, ...]
    classics: tuple[ClassicScores, ...]


def evaluate_scene(scene: Scene, classes: Sequence[str] = DEFAULT_CLASSES, gate_kind: str = RSB,
                   params: ReachParams | None = None, mdr_mode: str = CONSISTENT,
                   threshold: float = MATCH_THRESHOLD) -> list[ClassResult]:
    params = params or ReachParams()
    results = []
    for label in classes:
        per_frame = match_scene(scene, label, threshold)
        tracks = build_error_tracks(scene, per_frame, label)
        efforts = [score_track(t, scene, gate_kind, params, mdr_mode) for t in tracks]
        classics = [track_classics(te, scene.t_cycle, params) for te in efforts]
        results.append(ClassResult(scene.scene_id, label, tuple(per_frame), tuple(efforts), tuple(classics)))
    return results


def check_invariants(efforts: Iterable[TrackEffort], t_cycle: float, params: ReachParams) -> None:
    """Raise InvariantViolation if any scored value escapes its contract."""
    for te in efforts:
        where = f"{te.track.scene_id}/{te.kind}/{te.track.identity}"
        for f in te.frames:
            if not (0.0 <= f.a_brake <= params.a_brake_max) or not (0.0 <= f.lea <= params.a_lat_cap):
                raise InvariantViolation(f"{where}: per-frame effort out of range at frame {f.frame_index}")
            if not f.gated and (f.a_brake != 0.0 or f.lea != 0.0):
                raise InvariantViolation(f"{where}: ungated frame carries effort")
        if te.kind == FP:
            direct = t_cycle * math.fsum(f.a_brake for f in te.frames if f.gated)
            if not math.isclose(te.fsr, direct, rel_tol=1e-9, abs_tol=1e-12):
                raise InvariantViolation(f"{where}: FSR {te.fsr} != {direct}")


def file_digest(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def make_manifest(params: ReachParams, gate_kind: str, mdr_mode: str, inputs: Sequence[str | Path],
                  classes: Sequence[str], dataset_id: str = "default",
                  pipeline_id: str = "default") -> dict[str, Any]:
    return {
        "tool": "effortcrit",
        "version": __version__,
        "config": params.to_dict(),
        "gate": gate_kind,
        "mdr_mode": mdr_mode,
        "classes": list(classes),
        "dataset_id": dataset_id,
        "pipeline_id": pipeline_id,
        "inputs": [{"path": str(p), "sha256": file_digest(p)} for p in inputs],
    }


def build_report(results: Sequence[ClassResult], manifest: dict[str, Any],
                 params: ReachParams) -> dict[str, Any]:
    classes = manifest["classes"]
    rows, histograms = [], {}
    records = []
    for label in classes:
        cell = [r for r in results if r.class_label == label]
        efforts = [te for r in cell for te in r.efforts]
        prec, rec = precision_recall(m for r in cell for m in r.per_frame)
        rows.append(aggregate(
            efforts, dataset_id=manifest["dataset_id"], pipeline_id=manifest["pipeline_id"],
            class_label=label, precision=prec, recall=rec,
        ).to_dict())
        histograms[label] = severity_histogram(efforts)
        for r in cell:
            records.extend(track_record(te, cs) for te, cs in zip(r.efforts, r.classics))
    records.sort(key=lambda r: (r["scene"], r["class"], r["kind"], r["identity"]))
    return {
        "schema_version": SCHEMA_VERSION,
        "manifest": manifest,
        "metadata": {"correlation_population": CORRELATION_POPULATION},
        "rows": rows,
        "histograms": histograms,
        "correlations": {manifest["gate"]: correlation_from_records(records)},
        "tracks": records,
    }
