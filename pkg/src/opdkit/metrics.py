"""Motion-aware detection metrics.

The metric family extends detection average precision with nested motion
requirements: PDet scores part label and localization at IoU 0.5, +M
additionally requires the motion type to match, +MA the motion axis within
an angular threshold, and +MAO the motion origin within a distance threshold
(origins exist for revolute joints only, so prismatic pairs satisfy the
origin requirement whenever the axis does).

Also provides frame accuracy for part-free images, object pose error
metrics, and within-object motion consistency analysis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Sequence

import numpy as np

from .core import (
    AOCategory,
    CoordFrame,
    Frame,
    MetricConfig,
    MotionType,
    PartAnnotation,
    PartLabel,
    PoseScope,
    PredictionFrame,
    PredictionInstance,
    bbox_iou,
    mask_iou,
)
from .geometry import (
    RigidPose,
    apply_pose_to_motion,
    axis_angle_deg,
    origin_error,
    rotation_geodesic_deg,
    sanitize_rotation,
    translation_error,
)
from .pipeline import classify_frame_ao

__all__ = [
    "LEVELS",
    "MatchRecord",
    "APBlock",
    "EvalCore",
    "PoseMetricsBlock",
    "ConsistencyReport",
    "EvalReport",
    "resolve_prediction",
    "match_frame",
    "motion_flags",
    "average_precision",
    "evaluate",
    "no_ao_accuracy",
    "pose_metrics",
    "consistency_report",
    "prediction_consistency_report",
]

LEVELS = ("pdet", "m", "ma", "mao")

POSE_ROTATION_ACC_DEG = 5.0
POSE_TRANSLATION_ACC = 0.1
CONSISTENCY_THRESHOLDS = (1.0, 5.0, 10.0)


@dataclass(frozen=True)
class MatchRecord:
    """Outcome of matching one prediction within one frame.

    The motion flags are nested by construction: ``axis_ok`` implies
    ``type_ok`` and ``origin_ok`` implies ``axis_ok``. ``ignored_match``
    marks predictions whose only qualifying overlap was with ignored ground
    truth; they count as neither true nor false positives.
    """

    frame_id: str
    pred_index: int
    confidence: float
    pred_label: PartLabel
    pred_motion_type: MotionType
    iou: float
    gt_index: Optional[int] = None
    gt_label: Optional[PartLabel] = None
    gt_motion_type: Optional[MotionType] = None
    label_ok: bool = False
    type_ok: bool = False
    axis_ok: bool = False
    origin_ok: bool = False
    ignored_match: bool = False

    def __post_init__(self) -> None:
        if self.axis_ok and not self.type_ok:
            raise ValueError("axis_ok requires type_ok")
        if self.origin_ok and not self.axis_ok:
            raise ValueError("origin_ok requires axis_ok")

    @property
    def matched(self) -> bool:
        """True when matched to a non-ignored ground-truth part."""
        return self.gt_index is not None and not self.ignored_match

    def passes(self, level: str) -> bool:
        if not self.matched:
            return False
        if level == "pdet":
            return True
        if level == "m":
            return self.type_ok
        if level == "ma":
            return self.axis_ok
        if level == "mao":
            return self.origin_ok
        raise ValueError(f"unknown metric level {level!r}")


def resolve_prediction(
    pred: PredictionInstance,
    sanitize: bool = True,
) -> PredictionInstance:
    """Bring a prediction's motion into camera coordinates.

    Object- or scene-frame motion is transformed through the prediction's own
    pose. Predicted pose rotations are sanitized (quaternion round-trip)
    since raw 9-number outputs need not be valid rotations.
    """
    pose = pred.predicted_pose
    if pose is not None and sanitize:
        pose = RigidPose(sanitize_rotation(pose.rotation), pose.translation)
    if pred.motion.frame is CoordFrame.CAMERA:
        if pose is pred.predicted_pose:
            return pred
        return replace(pred, predicted_pose=pose)
    if pose is None:
        raise ValueError(
            f"motion in {pred.motion.frame.value} coordinates but no pose to resolve it"
        )
    motion = apply_pose_to_motion(pred.motion, pose)
    return replace(pred, motion=motion, predicted_pose=pose)


def motion_flags(
    pred: PredictionInstance,
    gt: PartAnnotation,
    config: MetricConfig,
) -> tuple[bool, bool, bool]:
    """Nested (type_ok, axis_ok, origin_ok) flags for a matched pair.

    Comparison happens in camera coordinates; the origin threshold is a
    fraction of the ground-truth object diagonal when one is recorded,
    otherwise an absolute distance.
    """
    if pred.motion.frame is not CoordFrame.CAMERA:
        raise ValueError("prediction motion must be resolved to camera coordinates")
    if gt.motion.frame is not CoordFrame.CAMERA:
        raise ValueError("ground-truth motion must be in camera coordinates")
    type_ok = pred.motion.motion_type is gt.motion.motion_type
    axis_ok = False
    if type_ok:
        angle = axis_angle_deg(
            pred.motion.axis, gt.motion.axis, orientation_aware=config.axis_orientation_aware
        )
        axis_ok = angle <= config.axis_threshold_deg
    origin_ok = False
    if axis_ok:
        if gt.motion.motion_type is MotionType.PRISMATIC:
            origin_ok = True
        else:
            err = origin_error(
                pred.motion.origin,
                gt.motion,
                normalizer=gt.object_diagonal,
                mode=config.origin_mode,
            )
            origin_ok = err <= config.origin_threshold
    return type_ok, axis_ok, origin_ok


def _pair_iou(pred: PredictionInstance, gt: PartAnnotation, config: MetricConfig) -> float:
    if config.matcher == "bbox":
        return bbox_iou(pred.bbox, gt.bbox)
    return mask_iou(pred.mask, gt.mask)


def match_frame(
    preds: Sequence[PredictionInstance],
    gts: Sequence[PartAnnotation],
    config: MetricConfig,
    frame_id: str = "",
) -> list[MatchRecord]:
    """Greedily match predictions to same-label ground truth by IoU.

    Predictions are visited in descending confidence (ties broken by the
    best candidate IoU, then input order); each takes the unmatched
    same-label GT with the highest IoU at or above the threshold. Non-ignored
    GT is matched at most once. Ignored GT only absorbs predictions that
    could not match anything real; such predictions are flagged and later
    excluded from both TP and FP accounting.
    """
    iou_table = np.zeros((len(preds), len(gts)))
    for i, pred in enumerate(preds):
        for j, gt in enumerate(gts):
            if pred.label is gt.label:
                iou_table[i, j] = _pair_iou(pred, gt, config)
    best_candidate = iou_table.max(axis=1) if len(gts) else np.zeros(len(preds))
    order = sorted(
        range(len(preds)),
        key=lambda i: (-preds[i].confidence, -best_candidate[i], i),
    )

    taken = [False] * len(gts)
    records = []
    for i in order:
        pred = preds[i]
        real_best, real_j = -1.0, None
        ignored_best, ignored_j = -1.0, None
        for j, gt in enumerate(gts):
            iou = iou_table[i, j]
            if pred.label is not gt.label or iou < config.iou_threshold:
                continue
            if gt.ignored:
                if iou > ignored_best:
                    ignored_best, ignored_j = iou, j
            elif not taken[j] and iou > real_best:
                real_best, real_j = iou, j

        if real_j is not None:
            taken[real_j] = True
            gt = gts[real_j]
            type_ok, axis_ok, origin_ok = motion_flags(pred, gt, config)
            records.append(
                MatchRecord(
                    frame_id=frame_id,
                    pred_index=i,
                    confidence=pred.confidence,
                    pred_label=pred.label,
                    pred_motion_type=pred.motion.motion_type,
                    iou=float(real_best),
                    gt_index=real_j,
                    gt_label=gt.label,
                    gt_motion_type=gt.motion.motion_type,
                    label_ok=True,
                    type_ok=type_ok,
                    axis_ok=axis_ok,
                    origin_ok=origin_ok,
                )
            )
        elif ignored_j is not None:
            records.append(
                MatchRecord(
                    frame_id=frame_id,
                    pred_index=i,
                    confidence=pred.confidence,
                    pred_label=pred.label,
                    pred_motion_type=pred.motion.motion_type,
                    iou=float(ignored_best),
                    gt_index=ignored_j,
                    gt_label=gts[ignored_j].label,
                    gt_motion_type=gts[ignored_j].motion.motion_type,
                    label_ok=True,
                    ignored_match=True,
                )
            )
        else:
            records.append(
                MatchRecord(
                    frame_id=frame_id,
                    pred_index=i,
                    confidence=pred.confidence,
                    pred_label=pred.label,
                    pred_motion_type=pred.motion.motion_type,
                    iou=float(best_candidate[i]),
                )
            )
    return records


def average_precision(
    records: Iterable[MatchRecord],
    gt_count: int,
    level: str = "pdet",
    config: MetricConfig = MetricConfig(),
) -> Optional[float]:
    """Average precision in [0, 1] at one metric level.

    Detections are ranked globally by confidence; the precision envelope is
    sampled at ``config.recall_samples`` evenly spaced recall points.
    Returns None when there is no ground truth (the category is then
    excluded from averaging, not scored as zero).
    """
    if level not in LEVELS:
        raise ValueError(f"unknown metric level {level!r}")
    if gt_count == 0:
        return None
    usable = [r for r in records if not r.ignored_match]
    usable.sort(key=lambda r: (-r.confidence, r.frame_id, r.pred_index))
    if not usable:
        return 0.0
    tp = np.array([r.passes(level) for r in usable], dtype=np.float64)
    cum_tp = np.cumsum(tp)
    cum_fp = np.cumsum(1.0 - tp)
    precision = cum_tp / (cum_tp + cum_fp)
    recall = cum_tp / gt_count
    # Precision envelope: best precision achievable at recall >= r.
    envelope = np.maximum.accumulate(precision[::-1])[::-1]
    samples = np.linspace(0.0, 1.0, config.recall_samples)
    idx = np.searchsorted(recall, samples, side="left")
    sampled = np.where(idx < len(usable), envelope[np.minimum(idx, len(usable) - 1)], 0.0)
    return float(sampled.mean())


@dataclass(frozen=True)
class APBlock:
    """The four nested AP levels for one category, as percentages."""

    pdet: float
    plus_m: float
    plus_ma: float
    plus_mao: float

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.pdet, self.plus_m, self.plus_ma, self.plus_mao)


def _ap_block(records, gt_count, config) -> Optional[APBlock]:
    values = [average_precision(records, gt_count, level, config) for level in LEVELS]
    if values[0] is None:
        return None
    return APBlock(*(v * 100.0 for v in values))


def _mean_block(blocks: Sequence[APBlock]) -> Optional[APBlock]:
    present = [b for b in blocks if b is not None]
    if not present:
        return None
    return APBlock(
        pdet=float(np.mean([b.pdet for b in present])),
        plus_m=float(np.mean([b.plus_m for b in present])),
        plus_ma=float(np.mean([b.plus_ma for b in present])),
        plus_mao=float(np.mean([b.plus_mao for b in present])),
    )


@dataclass(frozen=True)
class EvalCore:
    """Per-category AP blocks and their part/motion-type averages."""

    per_label: dict
    per_motion: dict
    part_averaged: Optional[APBlock]
    motion_averaged: Optional[APBlock]
    gt_parts: int
    frames: int


@dataclass(frozen=True)
class PoseMetricsBlock:
    """Object pose errors over matched pairs.

    Rotation error is in degrees, translation error is a fraction of the
    ground-truth object diagonal. Accuracies count matched pairs within
    5 degrees / 0.1 diagonal over the configured denominator.
    """

    rotation_med_err_deg: Optional[float]
    rotation_acc: Optional[float]
    translation_med_err: Optional[float]
    translation_acc: Optional[float]
    evaluated_pairs: int
    skipped_pairs: int


@dataclass(frozen=True)
class ConsistencyReport:
    """Within-object motion agreement.

    ``axis`` maps each angular threshold to the fraction of part pairs whose
    axes are parallel or perpendicular within it; ``type_consistency`` is the
    fraction of same-category pairs sharing a motion type. Fractions average
    per-frame scores over frames that have at least one valid pair.
    """

    axis: dict
    type_consistency: Optional[float]
    axis_frames: int
    type_frames: int


@dataclass(frozen=True)
class EvalReport:
    """Full evaluation output: overall APs, no-AO accuracy, pose errors, and
    sub-reports stratified by articulated-object count."""

    overall: EvalCore
    no_ao_accuracy: Optional[float]
    no_ao_frames: int
    pose: PoseMetricsBlock
    ao_strata: dict
    counts: dict


def _median(values: Sequence[float]) -> Optional[float]:
    if not values:
        return None
    ordered = sorted(values)
    n = len(ordered)
    if n % 2 == 1:
        return float(ordered[n // 2])
    return float(0.5 * (ordered[n // 2 - 1] + ordered[n // 2]))


def _pair_frames(
    pred_frames: Sequence[PredictionFrame],
    gt_frames: Sequence[Frame],
) -> list[tuple[Frame, PredictionFrame]]:
    gt_by_id = {f.frame_id: f for f in gt_frames}
    pred_by_id = {f.frame_id: f for f in pred_frames}
    if len(gt_by_id) != len(gt_frames):
        raise ValueError("duplicate ground-truth frame ids")
    if len(pred_by_id) != len(pred_frames):
        raise ValueError("duplicate prediction frame ids")
    missing = sorted(set(gt_by_id) ^ set(pred_by_id))
    if missing:
        raise ValueError(
            "prediction and ground-truth frame ids do not align; first "
            f"mismatches: {missing[:5]}"
        )
    return [(gt_by_id[fid], pred_by_id[fid]) for fid in sorted(gt_by_id)]


def _core_from_records(
    records: list[MatchRecord],
    gts: list[PartAnnotation],
    n_frames: int,
    config: MetricConfig,
) -> EvalCore:
    visible = [g for g in gts if not g.ignored]
    per_label = {}
    for label in PartLabel:
        cat_records = [
            r
            for r in records
            if (r.gt_label is label if r.matched else r.pred_label is label)
            and not r.ignored_match
        ]
        gt_count = sum(1 for g in visible if g.label is label)
        per_label[label] = _ap_block(cat_records, gt_count, config)
    per_motion = {}
    for mt in MotionType:
        cat_records = [
            r
            for r in records
            if (r.gt_motion_type is mt if r.matched else r.pred_motion_type is mt)
            and not r.ignored_match
        ]
        gt_count = sum(1 for g in visible if g.motion.motion_type is mt)
        per_motion[mt] = _ap_block(cat_records, gt_count, config)
    return EvalCore(
        per_label=per_label,
        per_motion=per_motion,
        part_averaged=_mean_block(list(per_label.values())),
        motion_averaged=_mean_block(list(per_motion.values())),
        gt_parts=len(visible),
        frames=n_frames,
    )


def _eval_frame(
    gt_frame: Frame,
    pred_frame: PredictionFrame,
    config: MetricConfig,
) -> tuple[list[MatchRecord], list[PredictionInstance]]:
    resolved = [resolve_prediction(p) for p in pred_frame.instances]
    records = match_frame(resolved, gt_frame.parts, config, frame_id=gt_frame.frame_id)
    return records, resolved


def evaluate(
    pred_frames: Sequence[PredictionFrame],
    gt_frames: Sequence[Frame],
    config: MetricConfig = MetricConfig(),
    threads: int = 1,
) -> EvalReport:
    """Match every frame pair and assemble the full metric report.

    Frame ids must align one-to-one. Predictions below the confidence
    threshold still participate in average precision (the threshold gates
    only the no-AO accuracy and count reports). Frames may be matched by a
    thread pool; records are merged in frame order so the report is
    identical for any thread count.
    """
    pairs = _pair_frames(pred_frames, gt_frames)

    if threads > 1 and len(pairs) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            frame_results = list(pool.map(lambda p: _eval_frame(p[0], p[1], config), pairs))
    else:
        frame_results = [_eval_frame(g, p, config) for g, p in pairs]

    all_records: list[MatchRecord] = []
    matched_lookup: list[tuple[MatchRecord, PredictionInstance, PartAnnotation]] = []
    gt_parts: list[PartAnnotation] = []
    strata_frames: dict[AOCategory, list[str]] = {cat: [] for cat in AOCategory}
    records_by_frame: dict[str, list[MatchRecord]] = {}
    gts_by_frame: dict[str, list[PartAnnotation]] = {}

    for (gt_frame, pred_frame), (records, resolved) in zip(pairs, frame_results):
        all_records.extend(records)
        records_by_frame[gt_frame.frame_id] = records
        gts_by_frame[gt_frame.frame_id] = list(gt_frame.parts)
        gt_parts.extend(gt_frame.parts)
        strata_frames[classify_frame_ao(gt_frame)].append(gt_frame.frame_id)
        for record in records:
            if record.matched:
                matched_lookup.append(
                    (record, resolved[record.pred_index], gt_frame.parts[record.gt_index])
                )

    overall = _core_from_records(all_records, gt_parts, len(pairs), config)

    strata = {}
    for cat, frame_ids in strata_frames.items():
        records = [r for fid in frame_ids for r in records_by_frame[fid]]
        gts = [g for fid in frame_ids for g in gts_by_frame[fid]]
        strata[cat] = _core_from_records(records, gts, len(frame_ids), config)

    pose = pose_metrics(matched_lookup, total_gt=overall.gt_parts, config=config)
    no_ao, no_ao_frames = _no_ao_accuracy_counted(pairs, config)

    n_preds = sum(len(p.instances) for _, p in pairs)
    n_confident = sum(
        1
        for _, p in pairs
        for inst in p.instances
        if inst.confidence >= config.confidence_threshold
    )
    return EvalReport(
        overall=overall,
        no_ao_accuracy=no_ao,
        no_ao_frames=no_ao_frames,
        pose=pose,
        ao_strata=strata,
        counts={
            "frames": len(pairs),
            "gt_parts": overall.gt_parts,
            "predictions": n_preds,
            "confident_predictions": n_confident,
        },
    )


def _no_ao_accuracy_counted(
    pairs: list[tuple[Frame, PredictionFrame]],
    config: MetricConfig,
) -> tuple[Optional[float], int]:
    empty = [(g, p) for g, p in pairs if not g.visible_parts()]
    if not empty:
        return None, 0
    correct = sum(
        1
        for _, pred in empty
        if not any(inst.confidence >= config.confidence_threshold for inst in pred.instances)
    )
    return correct / len(empty), len(empty)


def no_ao_accuracy(
    pred_frames: Sequence[PredictionFrame],
    gt_frames: Sequence[Frame],
    config: MetricConfig = MetricConfig(),
) -> Optional[float]:
    """Fraction of part-free GT frames with no confident prediction.

    A prediction counts against the frame when its confidence reaches the
    configured threshold. Returns None when no part-free frames exist.
    """
    value, _ = _no_ao_accuracy_counted(_pair_frames(pred_frames, gt_frames), config)
    return value


def pose_metrics(
    matched_pairs: Sequence[tuple[MatchRecord, PredictionInstance, PartAnnotation]],
    total_gt: int,
    config: MetricConfig = MetricConfig(),
    rotation_acc_deg: float = POSE_ROTATION_ACC_DEG,
    translation_acc: float = POSE_TRANSLATION_ACC,
) -> PoseMetricsBlock:
    """Median pose errors and accuracies over matched prediction/GT pairs.

    Pairs missing either pose or the GT object diagonal are skipped and
    counted. The accuracy denominator is every non-ignored GT part by
    default ("all_gt"), or only evaluated pairs with "matched".
    """
    rot_errors: list[float] = []
    trans_errors: list[float] = []
    skipped = 0
    for record, pred, gt in matched_pairs:
        if (
            pred.predicted_pose is None
            or gt.object_pose is None
            or gt.object_diagonal is None
        ):
            skipped += 1
            continue
        rot_errors.append(
            rotation_geodesic_deg(pred.predicted_pose.rotation, gt.object_pose.rotation)
        )
        trans_errors.append(
            translation_error(
                pred.predicted_pose.translation,
                gt.object_pose.translation,
                gt.object_diagonal,
            )
        )
    denom = total_gt if config.pose_acc_denominator == "all_gt" else len(rot_errors)
    rot_acc = None
    trans_acc = None
    if denom > 0 and rot_errors:
        rot_acc = sum(1 for e in rot_errors if e <= rotation_acc_deg) / denom
        trans_acc = sum(1 for e in trans_errors if e <= translation_acc) / denom
    return PoseMetricsBlock(
        rotation_med_err_deg=_median(rot_errors),
        rotation_acc=rot_acc,
        translation_med_err=_median(trans_errors),
        translation_acc=trans_acc,
        evaluated_pairs=len(rot_errors),
        skipped_pairs=skipped,
    )


def _axis_pair_consistent(axis_a, axis_b, threshold_deg: float) -> bool:
    # Angle between undirected lines, folded so 0 and 90 degrees both count
    # as consistent (parallel or perpendicular).
    angle = axis_angle_deg(axis_a, axis_b, orientation_aware=False)
    return min(angle, 90.0 - angle) <= threshold_deg


def _consistency_from_groups(
    per_frame_parts: Iterable[Sequence[tuple[str, PartLabel, MotionType, np.ndarray]]],
    thresholds: Sequence[float],
) -> ConsistencyReport:
    axis_scores = {t: [] for t in thresholds}
    type_scores = []
    for parts in per_frame_parts:
        axis_pairs = []
        type_pairs = []
        for i in range(len(parts)):
            for j in range(i + 1, len(parts)):
                obj_i, label_i, type_i, axis_i = parts[i]
                obj_j, label_j, type_j, axis_j = parts[j]
                if obj_i != obj_j:
                    continue
                axis_pairs.append((axis_i, axis_j))
                if label_i is label_j:
                    type_pairs.append(type_i is type_j)
        if axis_pairs:
            for t in thresholds:
                ok = sum(1 for a, b in axis_pairs if _axis_pair_consistent(a, b, t))
                axis_scores[t].append(ok / len(axis_pairs))
        if type_pairs:
            type_scores.append(sum(type_pairs) / len(type_pairs))
    axis = {
        t: (float(np.mean(vals)) if vals else None) for t, vals in axis_scores.items()
    }
    n_axis = len(next(iter(axis_scores.values()))) if thresholds else 0
    return ConsistencyReport(
        axis=axis,
        type_consistency=float(np.mean(type_scores)) if type_scores else None,
        axis_frames=n_axis,
        type_frames=len(type_scores),
    )


def consistency_report(
    frames: Iterable[Frame],
    thresholds: Sequence[float] = CONSISTENCY_THRESHOLDS,
) -> ConsistencyReport:
    """Within-object axis and motion-type agreement over annotated frames.

    For every unordered pair of non-ignored parts sharing an object, the
    axis pair is consistent at a threshold when the two axes are parallel or
    perpendicular within it; motion types are compared for same-category
    pairs only. Scores are per-frame fractions averaged over frames with at
    least one valid pair.
    """
    groups = [
        [
            (p.object_id, p.label, p.motion.motion_type, p.motion.axis)
            for p in frame.visible_parts()
        ]
        for frame in sorted(frames, key=lambda f: f.frame_id)
    ]
    return _consistency_from_groups(groups, thresholds)


def prediction_consistency_report(
    pred_frames: Sequence[PredictionFrame],
    gt_frames: Sequence[Frame],
    config: MetricConfig = MetricConfig(),
    thresholds: Sequence[float] = CONSISTENCY_THRESHOLDS,
) -> ConsistencyReport:
    """Consistency of predicted motions, grouped into objects via matching.

    Confident predictions (confidence at or above the configured threshold)
    inherit the object id of the ground-truth part they match; unmatched
    predictions carry no object association and drop out of the analysis.
    """
    groups = []
    for gt_frame, pred_frame in _pair_frames(pred_frames, gt_frames):
        resolved = [resolve_prediction(p) for p in pred_frame.instances]
        records = match_frame(resolved, gt_frame.parts, config, frame_id=gt_frame.frame_id)
        parts = []
        for record in records:
            if not record.matched:
                continue
            pred = resolved[record.pred_index]
            if pred.confidence < config.confidence_threshold:
                continue
            gt = gt_frame.parts[record.gt_index]
            parts.append((gt.object_id, pred.label, pred.motion.motion_type, pred.motion.axis))
        groups.append(parts)
    return _consistency_from_groups(groups, thresholds)
