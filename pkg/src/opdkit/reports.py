"""Report serialization: full-precision JSON dictionaries and fixed-precision
CSV/text tables whose column layouts follow the standard benchmark tables
(part-averaged mAP, AO-stratified, per-category, pose error, consistency,
and dataset statistics).

Printed numbers use one decimal for mAP-style percentages and two decimals
for errors and accuracy fractions, so command output diffs stably in CI.
The JSON side always keeps full precision.
"""

from __future__ import annotations

from typing import Optional, Sequence

from .core import AOCategory, MotionType, PartLabel
from .metrics import APBlock, ConsistencyReport, EvalCore, EvalReport
from .pipeline import DatasetStats, SplitStats

__all__ = [
    "pct",
    "err",
    "report_to_dict",
    "eval_csv",
    "pose_csv",
    "consistency_to_dict",
    "consistency_csv",
    "stats_to_dict",
    "stats_csv",
]


def pct(value: Optional[float]) -> str:
    """mAP-style percentage with one decimal; absent values print as '-'."""
    return "-" if value is None else f"{value:.1f}"


def err(value: Optional[float]) -> str:
    """Error or accuracy fraction with two decimals."""
    return "-" if value is None else f"{value:.2f}"


def _block_dict(block: Optional[APBlock]) -> Optional[dict]:
    if block is None:
        return None
    return {
        "PDet": block.pdet,
        "+M": block.plus_m,
        "+MA": block.plus_ma,
        "+MAO": block.plus_mao,
    }


def _core_dict(core: EvalCore) -> dict:
    return {
        "part_averaged": _block_dict(core.part_averaged),
        "motion_averaged": _block_dict(core.motion_averaged),
        "per_label": {k.value: _block_dict(v) for k, v in core.per_label.items()},
        "per_motion": {k.value: _block_dict(v) for k, v in core.per_motion.items()},
        "gt_parts": core.gt_parts,
        "frames": core.frames,
    }


def report_to_dict(report: EvalReport) -> dict:
    return {
        "schema_version": 1,
        "overall": _core_dict(report.overall),
        "no_ao_accuracy": report.no_ao_accuracy,
        "no_ao_frames": report.no_ao_frames,
        "pose": {
            "rotation_med_err_deg": report.pose.rotation_med_err_deg,
            "rotation_acc_5deg": report.pose.rotation_acc,
            "translation_med_err": report.pose.translation_med_err,
            "translation_acc_0.1": report.pose.translation_acc,
            "evaluated_pairs": report.pose.evaluated_pairs,
            "skipped_pairs": report.pose.skipped_pairs,
        },
        "ao_strata": {cat.value: _core_dict(core) for cat, core in report.ao_strata.items()},
        "counts": report.counts,
    }


def _block_cells(block: Optional[APBlock]) -> list[str]:
    if block is None:
        return ["-", "-", "-", "-"]
    return [pct(v) for v in block.as_tuple()]


def eval_csv(report: EvalReport) -> str:
    """CSV with sections for averaged, per-category, AO-stratified, and pose
    numbers. Section titles are '#' comment lines."""
    lines = []
    lines.append("# part-averaged mAP (%)")
    lines.append("PDet,+M,+MA,+MAO")
    lines.append(",".join(_block_cells(report.overall.part_averaged)))
    lines.append("")
    lines.append("# motion-averaged mAP (%)")
    lines.append("PDet,+M,+MA,+MAO")
    lines.append(",".join(_block_cells(report.overall.motion_averaged)))
    lines.append("")
    lines.append("# per-category mAP (%)")
    lines.append("category,PDet,+M,+MA,+MAO")
    for label in PartLabel:
        lines.append(",".join([label.value] + _block_cells(report.overall.per_label[label])))
    for mt in MotionType:
        lines.append(",".join([mt.value] + _block_cells(report.overall.per_motion[mt])))
    lines.append("")
    lines.append("# AO-stratified (no/single/multiple articulated objects)")
    lines.append("stratum,frames,no_ao_accuracy,PDet,+M,+MA,+MAO")
    no_ao_pct = None if report.no_ao_accuracy is None else report.no_ao_accuracy * 100.0
    for cat in AOCategory:
        core = report.ao_strata[cat]
        accuracy = pct(no_ao_pct) if cat is AOCategory.NONE else "-"
        lines.append(
            ",".join(
                [cat.value, str(core.frames), accuracy]
                + _block_cells(core.part_averaged)
            )
        )
    lines.append("")
    lines.append(pose_csv(report))
    return "\n".join(lines) + "\n"


def pose_csv(report: EvalReport) -> str:
    lines = [
        "# object pose error (rotation deg / translation fraction of diagonal)",
        "rotation_med_err,rotation_acc_5deg,translation_med_err,translation_acc_0.1,pairs,skipped",
        ",".join(
            [
                err(report.pose.rotation_med_err_deg),
                err(report.pose.rotation_acc),
                err(report.pose.translation_med_err),
                err(report.pose.translation_acc),
                str(report.pose.evaluated_pairs),
                str(report.pose.skipped_pairs),
            ]
        ),
    ]
    return "\n".join(lines)


def consistency_to_dict(reports: dict[str, ConsistencyReport]) -> dict:
    out = {"schema_version": 1}
    for subject, rep in reports.items():
        out[subject] = {
            "axis": {f"{t:g}deg": v for t, v in rep.axis.items()},
            "type": rep.type_consistency,
            "axis_frames": rep.axis_frames,
            "type_frames": rep.type_frames,
        }
    return out


def consistency_csv(reports: dict[str, ConsistencyReport]) -> str:
    """One row per subject (ground truth and/or predictions), axis columns
    per threshold then the motion-type column."""
    lines = ["# motion consistency (fraction of within-object pairs)"]
    thresholds = None
    for rep in reports.values():
        thresholds = sorted(rep.axis)
        break
    header = ["subject"] + [f"axis_{t:g}deg" for t in (thresholds or [])] + ["type"]
    lines.append(",".join(header))
    for subject, rep in reports.items():
        cells = [subject] + [err(rep.axis[t]) for t in sorted(rep.axis)] + [
            err(rep.type_consistency)
        ]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def _split_dict(stats: SplitStats) -> dict:
    return {
        "frames": stats.frames,
        "none": stats.none,
        "single": stats.single,
        "multiple": stats.multiple,
        "parts_per_frame": stats.parts_per_frame,
        "total_parts": stats.total_parts,
        "labels": {k.value: v for k, v in stats.label_counts.items()},
        "motion_types": {k.value: v for k, v in stats.motion_counts.items()},
        "part_histogram": {
            "0": stats.part_histogram[0],
            "1": stats.part_histogram[1],
            "2": stats.part_histogram[2],
            "3": stats.part_histogram[3],
            "4+": stats.part_histogram[4],
        },
    }


def stats_to_dict(stats: DatasetStats) -> dict:
    return {
        "schema_version": 1,
        "splits": {split: _split_dict(s) for split, s in stats.splits.items()},
        "total": _split_dict(stats.totals()),
    }


def stats_csv(stats: DatasetStats) -> str:
    """Three sections: frame counts by articulated objects, the parts-per-
    frame histogram, and part/motion-type counts."""
    rows = list(stats.splits.items())
    if len(rows) > 1:
        rows.append(("total", stats.totals()))
    lines = ["# frames by articulated objects"]
    lines.append("split,frames,none,single,multiple,parts_per_frame")
    for split, s in rows:
        lines.append(
            f"{split},{s.frames},{s.none},{s.single},{s.multiple},{s.parts_per_frame:.2f}"
        )
    lines.append("")
    lines.append("# frames by number of openable parts")
    lines.append("split,0,1,2,3,4+")
    for split, s in rows:
        lines.append(f"{split}," + ",".join(str(c) for c in s.part_histogram))
    lines.append("")
    lines.append("# openable part and motion type counts")
    lines.append("split,parts,door,drawer,lid,revolute,prismatic")
    for split, s in rows:
        lines.append(
            ",".join(
                [
                    split,
                    str(s.total_parts),
                    str(s.label_counts[PartLabel.DOOR]),
                    str(s.label_counts[PartLabel.DRAWER]),
                    str(s.label_counts[PartLabel.LID]),
                    str(s.motion_counts[MotionType.REVOLUTE]),
                    str(s.motion_counts[MotionType.PRISMATIC]),
                ]
            )
        )
    return "\n".join(lines) + "\n"
