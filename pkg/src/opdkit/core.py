"""Domain types shared across the toolkit: openable-part labels, motion
parameters, run-length-encoded binary masks, boxes, and per-frame annotation
records.

All types are immutable values after construction. Stored numpy arrays are
marked read-only, so instances are safe to share between threads.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import TYPE_CHECKING, Optional

import numpy as np

if TYPE_CHECKING:  # pragma: no cover
    from .geometry import Intrinsics, RigidPose

__all__ = [
    "MotionType",
    "PartLabel",
    "CoordFrame",
    "PoseScope",
    "AOCategory",
    "MotionParams",
    "BinaryMask",
    "BBox",
    "PartAnnotation",
    "PredictionInstance",
    "Frame",
    "PredictionFrame",
    "MetricConfig",
    "rle_encode",
    "rle_decode",
    "mask_iou",
    "bbox_iou",
    "tight_bbox",
]

# Axes shorter than this are rejected rather than silently normalized to junk.
AXIS_NORM_EPS = 1e-8


class MotionType(enum.Enum):
    """Joint kind of an openable part."""

    PRISMATIC = "prismatic"
    REVOLUTE = "revolute"


class PartLabel(enum.Enum):
    """Semantic category of an openable part."""

    DRAWER = "drawer"
    DOOR = "door"
    LID = "lid"


class CoordFrame(enum.Enum):
    """Coordinate frame that motion parameters are expressed in."""

    CAMERA = "camera"
    OBJECT = "object"
    SCENE = "scene"


class PoseScope(enum.Enum):
    """How a prediction's pose field is meant to be applied.

    NONE: motion already in camera coordinates, no pose attached.
    GLOBAL: one scene-level pose shared by all instances in the frame.
    PER_PART: an object pose predicted independently for this instance.
    """

    NONE = "none"
    GLOBAL = "global"
    PER_PART = "per_part"


class AOCategory(enum.Enum):
    """Number of articulated objects visible in a frame."""

    NONE = "none"
    SINGLE = "single"
    MULTIPLE = "multiple"


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=np.float64, copy=True)
    out.flags.writeable = False
    return out


def _unit(vec: np.ndarray, name: str = "axis") -> np.ndarray:
    v = np.asarray(vec, dtype=np.float64).reshape(3)
    norm = float(np.linalg.norm(v))
    if norm < AXIS_NORM_EPS:
        raise ValueError(f"{name} has near-zero length ({norm:.3e})")
    return v / norm


@dataclass(frozen=True)
class MotionParams:
    """Motion type, unit axis direction, and (revolute only) axis origin.

    The axis is normalized at construction; vectors shorter than 1e-8 are
    rejected. A prismatic joint never stores an origin, a revolute joint
    always does.
    """

    motion_type: MotionType
    axis: np.ndarray
    origin: Optional[np.ndarray]
    frame: CoordFrame

    def __post_init__(self) -> None:
        object.__setattr__(self, "axis", _freeze(_unit(self.axis)))
        if self.motion_type is MotionType.REVOLUTE:
            if self.origin is None:
                raise ValueError("revolute motion requires an origin")
            origin = np.asarray(self.origin, dtype=np.float64).reshape(3)
            object.__setattr__(self, "origin", _freeze(origin))
        else:
            if self.origin is not None:
                raise ValueError("prismatic motion must not carry an origin")

    def with_frame(self, frame: CoordFrame) -> "MotionParams":
        return MotionParams(self.motion_type, self.axis, self.origin, frame)


@dataclass(frozen=True)
class BinaryMask:
    """Binary mask stored as column-major run-length counts.

    The run array always starts with a run of zeros (possibly of length 0),
    then alternates ones/zeros. Runs after the first are strictly positive
    and sum to ``width * height``.
    """

    width: int
    height: int
    rle: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.width <= 0 or self.height <= 0:
            raise ValueError("mask dimensions must be positive")
        runs = tuple(int(r) for r in self.rle)
        if not runs:
            raise ValueError("run array must be non-empty")
        if runs[0] < 0 or any(r <= 0 for r in runs[1:]):
            raise ValueError("runs must be positive (leading zero-run excepted)")
        if sum(runs) != self.width * self.height:
            raise ValueError(
                f"runs sum to {sum(runs)}, expected {self.width * self.height}"
            )
        object.__setattr__(self, "rle", runs)

    @property
    def area(self) -> int:
        """Number of set pixels (sum of the odd-indexed runs)."""
        return int(sum(self.rle[1::2]))

    def decode(self) -> np.ndarray:
        """Expand to a dense (height, width) boolean grid."""
        return rle_decode(self)

    def _boundaries(self) -> np.ndarray:
        return np.cumsum(np.asarray(self.rle, dtype=np.int64))


def rle_encode(grid: np.ndarray) -> BinaryMask:
    """Encode a dense (height, width) boolean grid as a column-major RLE mask.

    Raises ValueError on an empty grid.
    """
    arr = np.asarray(grid)
    if arr.ndim != 2 or arr.size == 0:
        raise ValueError(f"expected a non-empty 2-d grid, got shape {arr.shape}")
    height, width = arr.shape
    flat = arr.ravel(order="F").astype(np.int8)
    changes = np.flatnonzero(np.diff(flat)) + 1
    edges = np.concatenate(([0], changes, [flat.size]))
    runs = np.diff(edges)
    if flat[0] == 1:
        runs = np.concatenate(([0], runs))
    return BinaryMask(width=int(width), height=int(height), rle=tuple(int(r) for r in runs))


def rle_decode(mask: BinaryMask) -> np.ndarray:
    """Expand an RLE mask back to a dense (height, width) boolean grid."""
    runs = np.asarray(mask.rle, dtype=np.int64)
    values = (np.arange(runs.size) % 2).astype(bool)
    flat = np.repeat(values, runs)
    return flat.reshape((mask.height, mask.width), order="F")


def mask_iou(a: BinaryMask, b: BinaryMask) -> float:
    """Intersection-over-union of two masks of equal dimensions.

    Computed directly on the run boundaries, so cost scales with the number
    of runs rather than pixels. An empty union yields 0 by convention.
    """
    if (a.width, a.height) != (b.width, b.height):
        raise ValueError(
            f"mask dimensions differ: {a.width}x{a.height} vs {b.width}x{b.height}"
        )
    inter = _rle_intersection_area(a, b)
    union = a.area + b.area - inter
    if union == 0:
        return 0.0
    return inter / union


def _rle_intersection_area(a: BinaryMask, b: BinaryMask) -> int:
    # Between consecutive run boundaries both masks are constant, so the
    # intersection is the total length of segments where both are "on".
    pa = a._boundaries()
    pb = b._boundaries()
    bounds = np.union1d(pa, pb)
    starts = np.concatenate(([0], bounds[:-1]))
    lengths = bounds - starts
    a_on = np.searchsorted(pa, starts, side="right") % 2 == 1
    b_on = np.searchsorted(pb, starts, side="right") % 2 == 1
    return int(lengths[a_on & b_on].sum())


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box over half-open pixel intervals [x_min, x_max) x [y_min, y_max)."""

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self) -> None:
        if self.x_min > self.x_max or self.y_min > self.y_max:
            raise ValueError(f"invalid box extents {self}")

    @property
    def area(self) -> float:
        return (self.x_max - self.x_min) * (self.y_max - self.y_min)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x_min, self.y_min, self.x_max, self.y_max)


def bbox_iou(a: BBox, b: BBox) -> float:
    """Rectangle IoU with half-open semantics; degenerate boxes have zero area."""
    ix = max(0.0, min(a.x_max, b.x_max) - max(a.x_min, b.x_min))
    iy = max(0.0, min(a.y_max, b.y_max) - max(a.y_min, b.y_min))
    inter = ix * iy
    union = a.area + b.area - inter
    if union <= 0.0:
        return 0.0
    return inter / union


def tight_bbox(mask: BinaryMask) -> BBox:
    """Minimal half-open box containing every set pixel; errors on empty masks."""
    if mask.area == 0:
        raise ValueError("cannot compute a tight box for an empty mask")
    grid = rle_decode(mask)
    rows = np.flatnonzero(grid.any(axis=1))
    cols = np.flatnonzero(grid.any(axis=0))
    return BBox(
        x_min=float(cols[0]),
        y_min=float(rows[0]),
        x_max=float(cols[-1] + 1),
        y_max=float(rows[-1] + 1),
    )


@dataclass(frozen=True)
class PartAnnotation:
    """Ground-truth openable part in one frame.

    ``ignored`` marks parts below the small-part coverage threshold; they are
    kept in the data and excluded from evaluation denominators instead of
    being deleted.
    """

    part_id: str
    object_id: str
    label: PartLabel
    mask: BinaryMask
    bbox: BBox
    motion: MotionParams
    object_pose: Optional["RigidPose"] = None
    object_diagonal: Optional[float] = None
    coverage_ratio: float = 0.0
    ignored: bool = False

    def __post_init__(self) -> None:
        if not 0.0 <= self.coverage_ratio <= 1.0:
            raise ValueError(f"coverage_ratio {self.coverage_ratio} outside [0, 1]")
        if self.object_diagonal is not None and self.object_diagonal <= 0:
            raise ValueError("object_diagonal must be positive")


@dataclass(frozen=True)
class PredictionInstance:
    """One predicted openable part with confidence and motion parameters."""

    label: PartLabel
    confidence: float
    mask: BinaryMask
    bbox: BBox
    motion: MotionParams
    predicted_pose: Optional["RigidPose"] = None
    pose_scope: PoseScope = PoseScope.NONE

    def __post_init__(self) -> None:
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")
        if self.pose_scope is PoseScope.NONE and self.motion.frame is not CoordFrame.CAMERA:
            raise ValueError("pose_scope=none requires motion in the camera frame")


@dataclass(frozen=True)
class Frame:
    """Single-view ground-truth frame: camera, intrinsics, and part annotations."""

    frame_id: str
    width: int
    height: int
    intrinsics: "Intrinsics"
    camera_pose: "RigidPose"
    parts: tuple[PartAnnotation, ...] = ()
    global_pose: Optional["RigidPose"] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "parts", tuple(self.parts))
        for part in self.parts:
            if (part.mask.width, part.mask.height) != (self.width, self.height):
                raise ValueError(
                    f"part {part.part_id} mask {part.mask.width}x{part.mask.height} "
                    f"does not match frame {self.width}x{self.height}"
                )

    def visible_parts(self) -> tuple[PartAnnotation, ...]:
        """Parts that count for evaluation (not ignored)."""
        return tuple(p for p in self.parts if not p.ignored)


@dataclass(frozen=True)
class PredictionFrame:
    """All predicted instances for one frame id."""

    frame_id: str
    instances: tuple[PredictionInstance, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "instances", tuple(self.instances))


@dataclass(frozen=True)
class MetricConfig:
    """Thresholds and knobs for matching and the metric family.

    ``origin_threshold`` is a fraction of the ground-truth object diagonal
    when a diagonal is available, otherwise an absolute distance in meters.
    The confidence threshold gates only the no-articulated-object accuracy
    and count-style reports; average precision always uses the full ranked
    detection list.
    """

    iou_threshold: float = 0.5
    axis_threshold_deg: float = 10.0
    origin_threshold: float = 0.25
    confidence_threshold: float = 0.8
    recall_samples: int = 101
    matcher: str = "mask"  # "mask" or "bbox"
    axis_orientation_aware: bool = True
    origin_mode: str = "line"  # "line" or "point"
    pose_acc_denominator: str = "all_gt"  # "all_gt" or "matched"

    def __post_init__(self) -> None:
        if not 0.0 < self.iou_threshold <= 1.0:
            raise ValueError("iou_threshold must be in (0, 1]")
        for name in ("axis_threshold_deg", "origin_threshold", "confidence_threshold"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.recall_samples < 2:
            raise ValueError("recall_samples must be at least 2")
        if self.matcher not in ("mask", "bbox"):
            raise ValueError(f"unknown matcher {self.matcher!r}")
        if self.origin_mode not in ("line", "point"):
            raise ValueError(f"unknown origin_mode {self.origin_mode!r}")
        if self.pose_acc_denominator not in ("all_gt", "matched"):
            raise ValueError(f"unknown pose_acc_denominator {self.pose_acc_denominator!r}")
