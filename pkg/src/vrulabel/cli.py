"""Command-line entry point: ``vrulabel {simulate,label,evaluate,features,compare}``.

Exit codes: 0 success, 2 input/format error, 3 time-alignment error,
4 internal invariant violation.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path

from . import formats
from .analysis import (FEATURES, FeatureVector, compare_features, cycle_features,
                       macro_average, precision_recall)
from .config import RunConfig, load_config
from .errors import InputError, TimeAlignmentError, VruLabelError
from .geomath import SensorMount
from .pipeline import EgoTrack, run
from .simulator import simulate
from .trajectory import VruTrack

log = logging.getLogger("vrulabel")

MANIFEST_SCHEMA = "scene_manifest"
FEATURE_COLUMNS = ("time_s", "sensor_id", "track_id", "n") + FEATURES
COMPARE_COLUMNS = ("feature", "a_mean", "a_std", "b_mean", "b_std", "t_stat", "dof",
                   "p_two_sided", "significant")
EVAL_COLUMNS = ("scene", "tp", "fp", "fn", "precision", "recall", "frames_unlabeled")


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _emit(text: str, out: str | None) -> None:
    if out:
        formats.atomic_write_text(out, text)
    else:
        sys.stdout.write(text)


# -- simulate ---------------------------------------------------------------

def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    sc = cfg.scenario
    scene = simulate(sc)
    out = Path(args.out)
    files = {"ego": "ego.csv", "radar": "radar.jsonl", "truth": "truth.jsonl",
             "vru": {sc.track_id: {"path": f"vru_{sc.track_id}.csv", "kind": sc.kind}}}
    formats.write_ego(out / files["ego"], scene.ego_fixes)
    formats.write_gnss(out / files["vru"][sc.track_id]["path"], scene.vru_track.fixes)
    formats.write_frames(out / files["radar"], scene.frames)
    formats.write_labels(out / files["truth"], scene.truth_labels)
    written = [files["ego"], files["radar"], files["truth"], files["vru"][sc.track_id]["path"]]
    scenario = {k: v for k, v in asdict(sc).items() if k != "mounts"}
    manifest = {
        "schema": MANIFEST_SCHEMA,
        "schema_version": formats.SCHEMA_VERSION,
        "kind": sc.kind,
        "seed": sc.seed,
        "scenario": scenario,
        "mounts": {sid: asdict(m) for sid, m in sorted(sc.mounts.items())},
        "files": files,
        "sha256": {name: _sha256(out / name) for name in sorted(written)},
    }
    formats.write_json(out / "manifest.json", manifest)
    log.info("wrote %d frames to %s", len(scene.frames), out)
    return 0


# -- label ------------------------------------------------------------------

def read_manifest(path: Path) -> dict:
    man = formats.read_json(path)
    if man.get("schema") != MANIFEST_SCHEMA or man.get("schema_version") != formats.SCHEMA_VERSION:
        raise InputError(f"{path}: not a version {formats.SCHEMA_VERSION} scene manifest")
    return man


def resolve_inputs(cfg: RunConfig):
    """Input paths, VRU specs and sensor mounts from the config (and manifest)."""
    ego_path, radar_path = cfg.ego_path, cfg.radar_path
    vrus = {v.id: (v.path, v.kind) for v in cfg.vru_inputs.values()}
    mounts = dict(cfg.mounts)
    if cfg.manifest_path is not None:
        man = read_manifest(cfg.manifest_path)
        base = cfg.manifest_path.parent
        try:
            files = man["files"]
            ego_path = ego_path or base / files["ego"]
            radar_path = radar_path or base / files["radar"]
            for vid, spec in files["vru"].items():
                vrus.setdefault(vid, (base / spec["path"], spec["kind"]))
            if not mounts:
                mounts = {sid: SensorMount(**m) for sid, m in man["mounts"].items()}
        except (KeyError, TypeError) as exc:
            raise InputError(f"{cfg.manifest_path}: malformed manifest ({exc})") from None
    if ego_path is None or radar_path is None or not vrus:
        raise InputError("config must name input.ego, input.radar and at least one "
                         "input.vru.<id> (directly or via input.manifest)")
    return ego_path, radar_path, vrus, mounts or cfg.sensor_mounts()


def cmd_label(args) -> int:
    cfg = load_config(args.config)
    ego_path, radar_path, vrus, mounts = resolve_inputs(cfg)
    ego = formats.read_ego(ego_path)
    tracks = [VruTrack(vid, kind, tuple(formats.read_gnss(path)))
              for vid, (path, kind) in sorted(vrus.items())]
    frames = formats.read_frames(radar_path)
    cfg.pipeline.mounts = mounts
    try:
        labeled, report = run(cfg.pipeline, ego, tracks, frames)
    except TimeAlignmentError as exc:
        if exc.report is not None:
            sys.stderr.write(json.dumps(exc.report.as_dict(), sort_keys=True) + "\n")
        raise
    out = args.out or cfg.labels_path
    if out is None:
        raise InputError("no output path: pass --out or set output.labels")
    text = formats.format_labels(labeled)
    report_text = json.dumps(report.as_dict(), indent=2, sort_keys=True) + "\n"
    formats.atomic_write_text(out, text)
    formats.atomic_write_text(str(out) + ".report.json", report_text)
    sys.stdout.write(report_text)
    return 0


# -- evaluate ---------------------------------------------------------------

def _frames_of(labeled):
    frames: dict[tuple, list] = {}
    for ld in labeled:
        frames.setdefault((ld.detection.time_s, ld.detection.sensor_id), []).append(ld)
    return frames


def align_scene(auto, truth, where="scene"):
    """Pair auto and truth labels frame by frame.

    Truth frames absent from the auto stream (skipped by the labeler) are
    counted and left out; every auto frame must match its truth frame
    detection for detection.
    """
    auto_frames, truth_frames = _frames_of(auto), _frames_of(truth)
    a_labels, t_labels = [], []
    for key, a in auto_frames.items():
        t = truth_frames.get(key)
        if t is None or [x.detection for x in a] != [x.detection for x in t]:
            raise InputError(f"{where}: frame at t={key[0]} sensor {key[1]!r} does not "
                             "match the truth stream")
        a_labels += [x.label for x in a]
        t_labels += [x.label for x in t]
    return a_labels, t_labels, len(truth_frames) - len(auto_frames)


def cmd_evaluate(args) -> int:
    if len(args.auto) != len(args.truth):
        raise InputError("--auto and --truth need the same number of files")
    rows, counts = [], []
    for auto_path, truth_path in zip(args.auto, args.truth):
        a, t, unlabeled = align_scene(formats.read_labels(auto_path),
                                      formats.read_labels(truth_path), auto_path)
        c = precision_recall(a, t)
        counts.append(c)
        rows.append((str(auto_path), c.tp, c.fp, c.fn, c.precision, c.recall, unlabeled))
    pr, re = macro_average(counts)
    rows.append(("macro", None, None, None, pr, re, None))
    _emit(formats.format_table(EVAL_COLUMNS, rows), args.out)
    return 0


# -- features / compare -----------------------------------------------------

def cmd_features(args) -> int:
    mounts: dict[str, SensorMount] = {}
    ref = 10.0
    ego = None
    if args.config:
        cfg = load_config(args.config)
        ref = cfg.weighted_count_ref_m
        if cfg.ego_path is not None or cfg.manifest_path is not None:
            ego_path, _, _, mounts = resolve_inputs(cfg)
            fixes = formats.read_ego(ego_path)
            ego = EgoTrack(fixes, fixes[0].geo(), cfg.pipeline.smoothing_window,
                           cfg.pipeline.ego_offset_s, cfg.pipeline.time_tolerance_s)
        else:
            mounts = cfg.sensor_mounts()
    rows = [(c.time_s, c.sensor_id, c.track_id, c.n, *c.features)
            for c in cycle_features(formats.read_labels(args.labels), mounts, ego, ref)]
    _emit(formats.format_table(FEATURE_COLUMNS, rows), args.out)
    return 0


def read_features(path) -> list[FeatureVector]:
    rows = formats.parse_table(formats._read_text(path), FEATURE_COLUMNS, path)
    return [FeatureVector(*(formats._float(r[name], f"{path}:{i + 2}:{name}")
                            for name in FEATURES)) for i, r in enumerate(rows)]


def cmd_compare(args) -> int:
    alpha, welch = args.alpha, args.welch
    if args.config:
        cfg = load_config(args.config)
        alpha = cfg.alpha if args.alpha is None else alpha
        welch = welch or cfg.welch
    alpha = 0.05 if alpha is None else alpha
    res = compare_features(read_features(args.a), read_features(args.b), alpha, welch)
    rows = [(r.feature, r.a_mean, r.a_std, r.b_mean, r.b_std, r.test.t_stat,
             float(r.test.dof), r.test.p_two_sided, str(r.test.significant).lower())
            for r in res]
    _emit(formats.format_table(COMPARE_COLUMNS, rows), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vrulabel", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic scene")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("label", help="auto-label radar detections")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="labeled detections file (report goes to <out>.report.json)")
    p.set_defaults(func=cmd_label)

    p = sub.add_parser("evaluate", help="precision/recall against reference labels")
    p.add_argument("--auto", nargs="+", required=True)
    p.add_argument("--truth", nargs="+", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("features", help="per-cycle feature table")
    p.add_argument("--labels", required=True)
    p.add_argument("--config")
    p.add_argument("--out")
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("compare", help="t-tests between two feature tables (b = baseline)")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--alpha", type=float)
    p.add_argument("--welch", action="store_true")
    p.add_argument("--config")
    p.add_argument("--out")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except VruLabelError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return exc.exit_code
    except Exception as exc:  # noqa: BLE001
        log.debug("internal failure", exc_info=True)
        sys.stderr.write(f"internal error: {exc!r}\n")
        return 4


if __name__ == "__main__":
    sys.exit(main())
