"""Command-line entry point.

Exit codes: 0 success, 2 input/usage error, 3 internal invariant violation.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional, Sequence

from .analysis import SCHEMA_VERSION, CORRELATION_POPULATION, correlation_from_records, dumps_report, tracks_csv
from .model import CLASS_LABELS, ConfigError, ReachParams, SceneError, load_config, load_scene
from .pipeline import (
    DEFAULT_CLASSES, InvariantViolation, build_report, check_invariants, evaluate_scene, make_manifest,
)
from . import synth

log = logging.getLogger("effortcrit")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_INTERNAL = 3


class InputError(Exception):
    pass


def _scene_paths(specs: Sequence[str]) -> list[Path]:
    paths: list[Path] = []
    for spec in specs:
        p = Path(spec)
        if p.is_dir():
            paths.extend(sorted(p.glob("*.jsonl")))
        elif p.is_file():
            paths.append(p)
        else:
            raise InputError(f"unreadable path: {spec}")
    return paths


def _classes(raw: str) -> list[str]:
    classes = [c.strip().lower() for c in raw.split(",") if c.strip()]
    bad = [c for c in classes if c not in CLASS_LABELS]
    if not classes or bad:
        raise InputError(f"invalid --classes {raw!r}; choose from {', '.join(CLASS_LABELS)}")
    return sorted(set(classes), key=classes.index)


def _evaluate_job(job):
    scene, classes, gate, params, mdr_mode = job
    return evaluate_scene(scene, classes, gate, params, mdr_mode)


def cmd_evaluate(args: argparse.Namespace) -> int:
    params = load_config(args.config) if args.config else ReachParams()
    if args.jobs < 1:
        raise InputError("--jobs must be >= 1")
    if args.csv and Path(args.csv).resolve() == Path(args.out).resolve():
        raise InputError("--out and --csv point to the same file")
    classes = _classes(args.classes)
    gate = args.gate.upper()
    mdr_mode = args.mdr_mode.replace("-", "_")
    paths = _scene_paths(args.scenes)
    if not paths:
        raise InputError("no scenes found")

    scenes, failures = [], []
    for path in paths:
        try:
            scenes.append(load_scene(path, params))
        except SceneError as exc:
            failures.append(str(exc))
    if failures:
        for msg in failures:
            log.error("%s", msg)
        raise InputError(f"{len(failures)} scene file(s) failed validation")

    jobs = [(s, classes, gate, params, mdr_mode) for s in scenes]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(args.jobs, len(jobs))) as pool:
            per_scene = list(pool.map(_evaluate_job, jobs))
    else:
        per_scene = [_evaluate_job(j) for j in jobs]

    results = [r for scene_results in per_scene for r in scene_results]
    for scene, scene_results in zip(scenes, per_scene):
        for r in scene_results:
            check_invariants(r.efforts, scene.t_cycle, params)

    manifest = make_manifest(params, gate, mdr_mode, paths, classes, args.dataset_id, args.pipeline_id)
    report = build_report(results, manifest, params)
    Path(args.out).write_text(dumps_report(report), encoding="utf-8")
    if args.csv:
        Path(args.csv).write_text(tracks_csv(report["tracks"]), encoding="utf-8")
    n_tracks = len(report["tracks"])
    n_gated = sum(1 for r in report["tracks"] if r["n_gated"] > 0)
    log.info("%d scene(s), %d error track(s), %d gated -> %s", len(scenes), n_tracks, n_gated, args.out)
    return EXIT_OK


def cmd_correlate(args: argparse.Namespace) -> int:
    by_gate: dict[str, list[dict]] = {}
    for path in args.reports:
        try:
            report = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read report {path}: {exc}") from None
        version = report.get("schema_version") if isinstance(report, dict) else None
        if version != SCHEMA_VERSION:
            raise InputError(f"{path}: incompatible schema version {version!r} (expected {SCHEMA_VERSION})")
        gate = report["manifest"]["gate"]
        by_gate.setdefault(gate, []).extend(report["tracks"])
    out = {
        "schema_version": SCHEMA_VERSION,
        "population": CORRELATION_POPULATION,
        "correlations": {gate: correlation_from_records(recs) for gate, recs in sorted(by_gate.items())},
    }
    text = dumps_report(out)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_synth(args: argparse.Namespace) -> int:
    params = load_config(args.config) if args.config else ReachParams()
    kind = args.template.replace("-", "_")
    try:
        tpl = synth.ScenarioTemplate.preset(
            kind, gap=args.gap, v_ego=args.v_ego, v_obj=args.v_obj, a_obj=args.a_obj,
            lateral_offset=args.lateral_offset, v_lat=args.v_lat, n_frames=args.frames,
            t_cycle=args.t_cycle, scene_id=args.scene_id,
        )
        scene_path, sidecar_path = synth.write(tpl, args.out, params, name=args.name)
    except synth.SynthError as exc:
        raise InputError(f"invalid template parameters: {exc}") from None
    log.info("wrote %s and %s", scene_path, sidecar_path)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="effortcrit", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="cmd", required=True)

    ev = sub.add_parser("evaluate", help="score perception errors in scene files")
    ev.add_argument("--scenes", nargs="+", required=True, metavar="PATH",
                    help="scene files or directories of *.jsonl scene files")
    ev.add_argument("--gate", choices=("rsb", "sat"), default="rsb")
    ev.add_argument("--mdr-mode", choices=("consistent", "as-printed"), default="consistent")
    ev.add_argument("--classes", default=",".join(DEFAULT_CLASSES))
    ev.add_argument("--config", help="flat key/value parameter overrides")
    ev.add_argument("--out", default="report.json")
    ev.add_argument("--csv", help="per-track CSV output")
    ev.add_argument("--jobs", type=int, default=1)
    ev.add_argument("--dataset-id", default="default")
    ev.add_argument("--pipeline-id", default="default")
    ev.set_defaults(func=cmd_evaluate)

    co = sub.add_parser("correlate", help="Spearman tables from one or more reports")
    co.add_argument("reports", nargs="+")
    co.add_argument("--out")
    co.set_defaults(func=cmd_correlate)

    sy = sub.add_parser("synth", help="generate a scene with a known-metric sidecar")
    sy.add_argument("--template", required=True,
                    choices=[t.replace("_", "-") for t in synth.TEMPLATES] + list(synth.TEMPLATES))
    sy.add_argument("--frames", type=int)
    sy.add_argument("--gap", type=float, help="initial bumper gap, m")
    sy.add_argument("--v-ego", type=float)
    sy.add_argument("--v-obj", type=float)
    sy.add_argument("--a-obj", type=float)
    sy.add_argument("--lateral-offset", type=float)
    sy.add_argument("--v-lat", type=float)
    sy.add_argument("--t-cycle", type=float)
    sy.add_argument("--scene-id")
    sy.add_argument("--name", help="output file stem")
    sy.add_argument("--config")
    sy.add_argument("--out", default=".")
    sy.set_defaults(func=cmd_synth)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except (InputError, ConfigError) as exc:
        log.error("%s", exc)
        return EXIT_INPUT
    except InvariantViolation as exc:
        log.error("invariant violation: %s", exc)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
