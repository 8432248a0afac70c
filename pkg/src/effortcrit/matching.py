"""Per-frame gated assignment, FP/FN labelling and error-track grouping."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .model import AgentState, Frame, RelativeKinematics, Scene, project_to_ego

MATCH_THRESHOLD = 2.0

FN = "FN"
FP = "FP"


@dataclass(frozen=True)
class FrameMatchResult:
    frame_index: int
    matches: tuple[tuple[str, str, float], ...]
    fn_ids: tuple[str, ...]
    fp_ids: tuple[str, ...]

    @property
    def total_distance(self) -> float:
        return math.fsum(d for _, _, d in self.matches)


@dataclass(frozen=True)
class Occurrence:
    frame_index: int
    obj: AgentState
    kin: RelativeKinematics


@dataclass(frozen=True)
class ErrorTrack:
    kind: str
    identity: str
    class_label: str
    occurrences: tuple[Occurrence, ...]
    scene_id: str

    def __post_init__(self) -> None:
        if self.kind not in (FN, FP):
            raise ValueError(f"kind must be FN or FP, got {self.kind!r}")
        if not self.occurrences:
            raise ValueError("error track without occurrences")
        idx = [o.frame_index for o in self.occurrences]
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValueError("occurrence frame indices must be strictly increasing")


def _distance(a: AgentState, b: AgentState) -> float:
    return math.hypot(a.position[0] - b.position[0], a.position[1] - b.position[1])


def assign(gts: Sequence[AgentState], dets: Sequence[AgentState],
           threshold: float = MATCH_THRESHOLD) -> list[tuple[int, int, float]]:
    """Maximum-cardinality, minimum-distance matching among admissible pairs.

    Pairs farther apart than ``threshold`` are never matched. Returns
    ``(gt_index, det_index, distance)`` triples.
    """
    if not gts or not dets:
        return []
    dist = np.array([[_distance(g, d) for d in dets] for g in gts])
    admissible = dist <= threshold
    if not admissible.any():
        return []
    # Each admissible match earns a bonus larger than any total distance, so
    # the solver maximizes the number of matches first. Forbidden pairs cost
    # the same as leaving both objects unmatched and are dropped afterwards.
    bonus = threshold * (len(gts) + len(dets)) + 1.0
    cost = np.where(admissible, dist - bonus, 0.0)
    rows, cols = linear_sum_assignment(cost)
    return [(int(r), int(c), float(dist[r, c])) for r, c in zip(rows, cols) if admissible[r, c]]


def match_frame(frame: Frame, class_label: str | None = None, threshold: float = MATCH_THRESHOLD,
                frame_index: int = 0) -> FrameMatchResult:
    """Match ground truth to detections of one class (all classes when None)."""
    if threshold <= 0:
        raise ValueError("match threshold must be > 0")

    def keep(objs: Iterable[AgentState]) -> list[AgentState]:
        selected = [o for o in objs if class_label is None or o.class_label == class_label]
        return sorted(selected, key=lambda o: o.id)

    gts = keep(frame.gt_objects)
    dets = keep(frame.detections)
    pairs = assign(gts, dets, threshold)
    matched_g = {i for i, _, _ in pairs}
    matched_d = {j for _, j, _ in pairs}
    matches = tuple(sorted((gts[i].id, dets[j].id, d) for i, j, d in pairs))
    return FrameMatchResult(
        frame_index=frame_index,
        matches=matches,
        fn_ids=tuple(g.id for i, g in enumerate(gts) if i not in matched_g),
        fp_ids=tuple(d.id for j, d in enumerate(dets) if j not in matched_d),
    )


def match_scene(scene: Scene, class_label: str | None = None,
                threshold: float = MATCH_THRESHOLD) -> list[FrameMatchResult]:
    return [match_frame(f, class_label, threshold, frame_index=i) for i, f in enumerate(scene.frames)]


def build_error_tracks(scene: Scene, per_frame: Sequence[FrameMatchResult],
                       class_label: str | None = None) -> list[ErrorTrack]:
    """Group per-frame errors into identity-keyed tracks.

    FN occurrences are keyed by ground-truth id (gaps do not split a track);
    FP occurrences are keyed by detection id, so a phantom re-detected under
    a new id starts a new track.
    """
    if len(per_frame) != len(scene.frames):
        raise ValueError("need exactly one match result per frame")
    groups: dict[tuple[str, str], list[Occurrence]] = {}
    for result in per_frame:
        frame = scene.frames[result.frame_index]
        gt_by_id = {o.id: o for o in frame.gt_objects}
        det_by_id = {o.id: o for o in frame.detections}
        for kind, ids, lookup in ((FN, result.fn_ids, gt_by_id), (FP, result.fp_ids, det_by_id)):
            for ident in ids:
                obj = lookup[ident]
                occ = Occurrence(result.frame_index, obj, project_to_ego(frame.ego, obj))
                groups.setdefault((kind, ident), []).append(occ)
    tracks = []
    for (kind, ident), occs in sorted(groups.items()):
        occs.sort(key=lambda o: o.frame_index)
        label = class_label if class_label is not None else occs[0].obj.class_label
        tracks.append(ErrorTrack(kind, ident, label, tuple(occs), scene.scene_id))
    return tracks


def precision_recall(per_frame: Iterable[FrameMatchResult]) -> tuple[float, float]:
    tp = fp = fn = 0
    for r in per_frame:
        tp += len(r.matches)
        fp += len(r.fp_ids)
        fn += len(r.fn_ids)
    precision = tp / (tp + fp) if tp + fp else 1.0
    recall = tp / (tp + fn) if tp + fn else 1.0
    return precision, recall
