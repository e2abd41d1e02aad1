"""Reference implementations of the training losses and set matching.

Pure math on numpy arrays, no gradients: these exist to verify external
trainers and to score prediction/target pairs offline. All mask and class
inputs are probabilities; callers apply their own activations.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .core import MotionType

__all__ = [
    "LossWeights",
    "LossPrediction",
    "LossTarget",
    "smooth_l1",
    "dice_loss",
    "bce_loss",
    "ce_loss",
    "hungarian_match",
    "matching_cost",
    "build_cost_matrix",
    "total_loss",
]

PROB_FLOOR = 1e-7
DICE_EPS = 1e-8


@dataclass(frozen=True)
class LossWeights:
    """Loss term weights; defaults follow the combined training objective."""

    lambda_ce: float = 5.0
    lambda_dice: float = 5.0
    lambda_cls_matched: float = 2.0
    lambda_cls_unmatched: float = 0.1
    lambda_type: float = 2.0
    lambda_axis: float = 16.0
    lambda_origin: float = 16.0
    lambda_pose: float = 30.0
    smooth_l1_beta: float = 1.0

    def __post_init__(self) -> None:
        for name, value in self.__dict__.items():
            if value < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.smooth_l1_beta <= 0:
            raise ValueError("smooth_l1_beta must be positive")


@dataclass(frozen=True)
class LossPrediction:
    """One predicted instance for loss evaluation.

    ``class_probs`` ranges over the part categories plus a trailing
    "no object" entry used for unmatched predictions. ``type_probs`` is
    (prismatic, revolute).
    """

    class_probs: np.ndarray
    mask_probs: np.ndarray
    type_probs: np.ndarray
    axis: np.ndarray
    origin: Optional[np.ndarray] = None
    pose: Optional[np.ndarray] = None  # 12 numbers: 9 rotation + 3 translation


@dataclass(frozen=True)
class LossTarget:
    """Ground-truth side of a loss pair."""

    label_index: int
    mask: np.ndarray
    motion_type: MotionType
    axis: np.ndarray
    origin: Optional[np.ndarray] = None
    pose: Optional[np.ndarray] = None


def smooth_l1(residual, beta: float = 1.0) -> float:
    """Smooth L1 averaged over components: quadratic inside beta, linear outside."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    x = np.abs(np.asarray(residual, dtype=np.float64)).ravel()
    per_component = np.where(x < beta, 0.5 * x * x / beta, x - 0.5 * beta)
    return float(per_component.mean())


def dice_loss(pred_probs, gt_mask) -> float:
    """Dice loss 1 - 2|P.G| / (|P| + |G|) with a small stabilizer."""
    p = np.asarray(pred_probs, dtype=np.float64)
    g = np.asarray(gt_mask, dtype=np.float64)
    if p.shape != g.shape:
        raise ValueError(f"shape mismatch: {p.shape} vs {g.shape}")
    numerator = 2.0 * float((p * g).sum())
    denominator = float(p.sum() + g.sum()) + DICE_EPS
    return 1.0 - numerator / denominator


def bce_loss(pred_probs, gt_mask) -> float:
    """Mean binary cross-entropy; probabilities are floored at 1e-7."""
    p = np.asarray(pred_probs, dtype=np.float64)
    g = np.asarray(gt_mask, dtype=np.float64)
    if p.shape != g.shape:
        raise ValueError(f"shape mismatch: {p.shape} vs {g.shape}")
    p = np.clip(p, PROB_FLOOR, 1.0 - PROB_FLOOR)
    return float(-(g * np.log(p) + (1.0 - g) * np.log(1.0 - p)).mean())


def ce_loss(class_probs, true_class: int) -> float:
    """Negative log-likelihood of the true class under given probabilities."""
    p = np.asarray(class_probs, dtype=np.float64).ravel()
    if not 0 <= true_class < p.size:
        raise ValueError(f"true class {true_class} out of range for {p.size} classes")
    return float(-np.log(np.clip(p[true_class], PROB_FLOOR, 1.0)))


def hungarian_match(cost_matrix) -> list[tuple[int, int]]:
    """Minimal-cost one-to-one assignment of min(n, m) pairs.

    Backed by scipy's linear sum assignment; pairs come back sorted by row
    index, and the solver is deterministic. NaN costs are rejected.
    """
    cost = np.asarray(cost_matrix, dtype=np.float64)
    if cost.ndim != 2 or cost.size == 0:
        raise ValueError(f"cost matrix must be 2-d and non-empty, got shape {cost.shape}")
    if np.isnan(cost).any():
        raise ValueError("cost matrix contains NaN")
    rows, cols = linear_sum_assignment(cost)
    return sorted(zip(rows.tolist(), cols.tolist()))


def matching_cost(
    pred: LossPrediction,
    target: LossTarget,
    weights: LossWeights = LossWeights(),
) -> float:
    """Assignment cost for one prediction/target pair.

    Weighted sum of a class cost (negative predicted probability of the
    target label) and the two mask losses, mirroring the set-prediction
    matching convention.
    """
    class_cost = -float(np.asarray(pred.class_probs, dtype=np.float64)[target.label_index])
    return (
        weights.lambda_cls_matched * class_cost
        + weights.lambda_ce * bce_loss(pred.mask_probs, target.mask)
        + weights.lambda_dice * dice_loss(pred.mask_probs, target.mask)
    )


def build_cost_matrix(
    preds: Sequence[LossPrediction],
    targets: Sequence[LossTarget],
    weights: LossWeights = LossWeights(),
) -> np.ndarray:
    cost = np.zeros((len(preds), len(targets)))
    for i, pred in enumerate(preds):
        for j, target in enumerate(targets):
            cost[i, j] = matching_cost(pred, target, weights)
    return cost


def total_loss(
    matched: Sequence[tuple[LossPrediction, LossTarget]],
    unmatched: Sequence[LossPrediction] = (),
    weights: LossWeights = LossWeights(),
) -> dict:
    """Combined objective with a per-term breakdown.

    Terms are means over their instances: segmentation (mask BCE, dice,
    classification with matched/unmatched weights), motion (type CE, axis and
    origin smooth L1, origin for revolute targets only), and the pose smooth
    L1 on the 12-number residual. Returns a dict with every unweighted term,
    the three weighted groups, and "total".

    Unmatched predictions are scored against the trailing "no object" class;
    they may be passed as LossPrediction values or bare class-probability
    arrays.
    """
    ce_terms, dice_terms, cls_matched_terms = [], [], []
    type_terms, axis_terms, origin_terms, pose_terms = [], [], [], []
    for pred, target in matched:
        ce_terms.append(bce_loss(pred.mask_probs, target.mask))
        dice_terms.append(dice_loss(pred.mask_probs, target.mask))
        cls_matched_terms.append(ce_loss(pred.class_probs, target.label_index))
        type_index = 0 if target.motion_type is MotionType.PRISMATIC else 1
        type_terms.append(ce_loss(pred.type_probs, type_index))
        axis_terms.append(
            smooth_l1(
                np.asarray(pred.axis, dtype=np.float64)
                - np.asarray(target.axis, dtype=np.float64),
                weights.smooth_l1_beta,
            )
        )
        if target.motion_type is MotionType.REVOLUTE:
            if pred.origin is None or target.origin is None:
                raise ValueError("revolute pair requires origins on both sides")
            origin_terms.append(
                smooth_l1(
                    np.asarray(pred.origin, dtype=np.float64)
                    - np.asarray(target.origin, dtype=np.float64),
                    weights.smooth_l1_beta,
                )
            )
        if pred.pose is not None and target.pose is not None:
            pose_terms.append(
                smooth_l1(
                    np.asarray(pred.pose, dtype=np.float64).ravel()
                    - np.asarray(target.pose, dtype=np.float64).ravel(),
                    weights.smooth_l1_beta,
                )
            )

    cls_unmatched_terms = []
    for pred in unmatched:
        probs = np.asarray(
            pred.class_probs if isinstance(pred, LossPrediction) else pred,
            dtype=np.float64,
        ).ravel()
        cls_unmatched_terms.append(ce_loss(probs, probs.size - 1))

    def _mean(terms):
        return float(np.mean(terms)) if terms else 0.0

    breakdown = {
        "ce": _mean(ce_terms),
        "dice": _mean(dice_terms),
        "cls_matched": _mean(cls_matched_terms),
        "cls_unmatched": _mean(cls_unmatched_terms),
        "type": _mean(type_terms),
        "axis": _mean(axis_terms),
        "origin": _mean(origin_terms),
        "pose": _mean(pose_terms),
    }
    breakdown["seg"] = (
        weights.lambda_ce * breakdown["ce"]
        + weights.lambda_dice * breakdown["dice"]
        + weights.lambda_cls_matched * breakdown["cls_matched"]
        + weights.lambda_cls_unmatched * breakdown["cls_unmatched"]
    )
    breakdown["motion"] = (
        weights.lambda_type * breakdown["type"]
        + weights.lambda_axis * breakdown["axis"]
        + weights.lambda_origin * breakdown["origin"]
    )
    breakdown["pose_weighted"] = weights.lambda_pose * breakdown["pose"]
    breakdown["total"] = breakdown["seg"] + breakdown["motion"] + breakdown["pose_weighted"]
    return breakdown
