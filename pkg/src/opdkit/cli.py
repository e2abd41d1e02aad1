"""Command-line surface.

Subcommands: evaluate, pose-eval, consistency, build-dataset, stats, synth,
losses. Exit codes: 0 success, 1 input error (bad arguments, missing files,
schema violations), 2 internal error. The OPDKIT_CONFIG environment variable
supplies a default metric-config path.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import io as tio
from . import reports
from .core import MetricConfig
from .losses import total_loss
from .metrics import (
    consistency_report,
    evaluate,
    prediction_consistency_report,
)
from .pipeline import build_frame, dataset_stats
from .synth import SynthSpec, generate

CONFIG_ENV = "OPDKIT_CONFIG"


class _InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # Argument mistakes are input errors (exit 1), not argparse's default 2.
    def error(self, message):
        raise _InputError(f"{self.prog}: {message}")


def _load_metric_config(args) -> MetricConfig:
    path = getattr(args, "config", None) or os.environ.get(CONFIG_ENV)
    if path:
        return tio.load_config(path)
    return MetricConfig()


def _write_outputs(args, json_payload, csv_text) -> None:
    if getattr(args, "out_json", None):
        tio.save_json(args.out_json, json_payload)
    if getattr(args, "out_csv", None) and csv_text is not None:
        Path(args.out_csv).write_text(csv_text, encoding="utf-8")


def _cmd_evaluate(args) -> int:
    config = _load_metric_config(args)
    gt_frames, _ = tio.load_annotations(args.gt)
    pred_frames = tio.load_predictions(args.pred)
    report = evaluate(pred_frames, gt_frames, config, threads=args.threads)
    csv_text = reports.eval_csv(report)
    print(csv_text, end="")
    _write_outputs(args, reports.report_to_dict(report), csv_text)
    return 0


def _cmd_pose_eval(args) -> int:
    config = _load_metric_config(args)
    gt_frames, _ = tio.load_annotations(args.gt)
    pred_frames = tio.load_predictions(args.pred)
    report = evaluate(pred_frames, gt_frames, config, threads=args.threads)
    csv_text = reports.pose_csv(report) + "\n"
    print(csv_text, end="")
    _write_outputs(args, reports.report_to_dict(report)["pose"], csv_text)
    return 0


def _parse_thresholds(raw: str) -> tuple[float, ...]:
    try:
        values = tuple(float(v) for v in raw.split(","))
    except ValueError as err:
        raise _InputError(f"bad threshold list {raw!r}") from err
    if not values or any(v <= 0 for v in values):
        raise _InputError("thresholds must be positive degrees")
    return values


def _cmd_consistency(args) -> int:
    thresholds = _parse_thresholds(args.thresholds)
    gt_frames, _ = tio.load_annotations(args.gt)
    out = {"gt": consistency_report(gt_frames, thresholds)}
    if args.pred:
        config = _load_metric_config(args)
        pred_frames = tio.load_predictions(args.pred)
        out["pred"] = prediction_consistency_report(
            pred_frames, gt_frames, config, thresholds
        )
    csv_text = reports.consistency_csv(out)
    print(csv_text, end="")
    _write_outputs(args, reports.consistency_to_dict(out), csv_text)
    return 0


def _cmd_build_dataset(args) -> int:
    scenes = dict(tio.load_scenes(args.scene))
    trajectories = tio.load_trajectories(args.trajectory)
    missing = [sid for sid, _ in trajectories if sid not in scenes]
    if missing:
        raise _InputError(f"trajectories reference unknown scenes: {missing}")

    jobs = [
        (scenes[sid], view)
        for sid, trajectory in trajectories
        for view in trajectory.views
    ]

    def run(job):
        scene, view = job
        return build_frame(scene, view, args.threshold)

    if args.threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            frames = list(pool.map(run, jobs))
    else:
        frames = [run(job) for job in jobs]

    ids = [f.frame_id for f in frames]
    if len(ids) != len(set(ids)):
        raise _InputError("duplicate frame ids across trajectories")
    tio.save_annotations(args.out_json, frames, split=args.split)
    kept = sum(len(f.visible_parts()) for f in frames)
    total = sum(len(f.parts) for f in frames)
    print(
        f"wrote {len(frames)} frames to {args.out_json} "
        f"({kept} parts kept, {total - kept} ignored)"
    )
    return 0


def _cmd_stats(args) -> int:
    frames_by_split = {}
    for path in args.gt:
        frames, split = tio.load_annotations(path)
        if split in frames_by_split:
            raise _InputError(f"duplicate split {split!r} (from {path})")
        frames_by_split[split] = frames
    stats = dataset_stats(frames_by_split)
    csv_text = reports.stats_csv(stats)
    print(csv_text, end="")
    _write_outputs(args, reports.stats_to_dict(stats), csv_text)
    return 0


def _cmd_synth(args) -> int:
    spec = tio.load_synth_spec(args.spec) if args.spec else SynthSpec()
    if args.seed is not None:
        from dataclasses import replace

        spec = replace(spec, seed=args.seed)
    result = generate(spec)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tio.save_scenes(out / "scenes.json", list(zip(result.scene_ids, result.scenes)))
    tio.save_trajectories(
        out / "trajectories.json", list(zip(result.scene_ids, result.trajectories))
    )
    tio.save_annotations(out / "gt.json", list(result.gt_frames), split=args.split)
    tio.save_predictions(out / "pred.json", list(result.pred_frames))
    print(
        f"wrote {len(result.gt_frames)} frames over {len(result.scenes)} scenes to {out}"
    )
    return 0


def _cmd_losses(args) -> int:
    matched, unmatched, weights = tio.load_loss_pairs(args.pairs)
    breakdown = total_loss(matched, unmatched, weights)
    payload = {"schema_version": 1, **{k: float(v) for k, v in breakdown.items()}}
    for key in ("seg", "motion", "pose_weighted", "total"):
        print(f"{key}: {breakdown[key]:.6f}")
    if args.out_json:
        tio.save_json(args.out_json, payload)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="opdkit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, pred_required=True, with_threads=True):
        p.add_argument("--gt", required=True, help="ground-truth annotations JSON")
        if pred_required:
            p.add_argument("--pred", required=True, help="predictions JSON")
        else:
            p.add_argument("--pred", help="predictions JSON")
        p.add_argument("--config", help=f"metric config JSON (default ${CONFIG_ENV})")
        p.add_argument("--out-json", help="write the full-precision report here")
        p.add_argument("--out-csv", help="write fixed-precision CSV tables here")
        if with_threads:
            p.add_argument("--threads", type=int, default=1)

    p = sub.add_parser("evaluate", help="motion-aware detection metrics")
    add_common(p)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("pose-eval", help="object pose error metrics")
    add_common(p)
    p.set_defaults(func=_cmd_pose_eval)

    p = sub.add_parser("consistency", help="within-object motion consistency")
    add_common(p, pred_required=False, with_threads=False)
    p.add_argument("--thresholds", default="1,5,10", help="degrees, comma separated")
    p.set_defaults(func=_cmd_consistency)

    p = sub.add_parser("build-dataset", help="project scenes into annotated frames")
    p.add_argument("--scene", required=True, help="scene JSON")
    p.add_argument("--trajectory", required=True, help="camera trajectory JSON")
    p.add_argument("--split", default="val")
    p.add_argument("--threshold", type=float, default=0.05, help="small-part coverage cutoff")
    p.add_argument("--out-json", required=True, help="annotations output path")
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=_cmd_build_dataset)

    p = sub.add_parser("stats", help="dataset statistics tables")
    p.add_argument("--gt", nargs="+", required=True, help="annotation JSONs, one per split")
    p.add_argument("--out-json")
    p.add_argument("--out-csv")
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("synth", help="generate a synthetic benchmark")
    p.add_argument("--spec", help="generator spec JSON (defaults are used if omitted)")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, help="override the spec seed")
    p.add_argument("--split", default="synth")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("losses", help="reference loss breakdown for a pairs file")
    p.add_argument("--pairs", required=True, help="matched/unmatched pairs JSON")
    p.add_argument("--out-json")
    p.set_defaults(func=_cmd_losses)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _InputError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except _InputError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except (tio.SchemaError, FileNotFoundError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except Exception as err:  # pragma: no cover - defensive
        print(f"internal error: {type(err).__name__}: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
