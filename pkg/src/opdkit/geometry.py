"""Rigid poses, coordinate-frame transforms for motion parameters, rotation
sanitization, and the angular/positional error measures used by the metrics.

Camera convention: +Z faces into the camera and +Y is up, so a visible world
point has camera-frame depth ``d = -z > 0``. Object frames are centered on
the object's oriented bounding box with +Z as front and +Y as up.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import AXIS_NORM_EPS, CoordFrame, MotionParams, MotionType

__all__ = [
    "RigidPose",
    "Intrinsics",
    "OrientedBoundingBox",
    "Quaternion",
    "sanitize_rotation",
    "rotation_to_quaternion",
    "quaternion_to_rotation",
    "quat_roundtrip",
    "compose_pose",
    "invert_pose",
    "apply_pose_to_motion",
    "derive_object_pose",
    "axis_angle_deg",
    "origin_error",
    "rotation_geodesic_deg",
    "translation_error",
    "rotation_about_axis",
]


def _as_rotation_array(matrix) -> np.ndarray:
    arr = np.asarray(matrix, dtype=np.float64)
    if arr.shape == (9,):
        arr = arr.reshape(3, 3)
    if arr.shape != (3, 3):
        raise ValueError(f"expected a 3x3 matrix, got shape {arr.shape}")
    return arr


def _frozen(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=np.float64, copy=True)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class RigidPose:
    """3x3 rotation plus translation; the 12-number pose layout (9 + 3).

    The rotation is stored as given. Predicted poses should pass through
    :func:`sanitize_rotation` before being used in transforms.
    """

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "rotation", _frozen(_as_rotation_array(self.rotation)))
        t = np.asarray(self.translation, dtype=np.float64).reshape(3)
        object.__setattr__(self, "translation", _frozen(t))

    @staticmethod
    def identity() -> "RigidPose":
        return RigidPose(np.eye(3), np.zeros(3))

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Transform one point (3,) or many points (n, 3)."""
        pts = np.asarray(points, dtype=np.float64)
        return pts @ self.rotation.T + self.translation

    def as_vector(self) -> np.ndarray:
        """Flatten to the 12-number layout: 9 row-major rotation entries, then translation."""
        return np.concatenate([self.rotation.ravel(), self.translation])


@dataclass(frozen=True)
class Intrinsics:
    """Pinhole intrinsics in pixels."""

    fx: float
    fy: float
    cx: float
    cy: float

    def __post_init__(self) -> None:
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")


@dataclass(frozen=True)
class OrientedBoundingBox:
    """Oriented box with a designated front (+Z column) and up (+Y column)."""

    center: np.ndarray
    half_extents: np.ndarray
    basis: np.ndarray

    def __post_init__(self) -> None:
        center = np.asarray(self.center, dtype=np.float64).reshape(3)
        he = np.asarray(self.half_extents, dtype=np.float64).reshape(3)
        if np.any(he <= 0):
            raise ValueError("half_extents must be positive")
        basis = _as_rotation_array(self.basis)
        if not _is_rotation(basis, tol=1e-6):
            raise ValueError("OBB basis is not a rotation matrix")
        object.__setattr__(self, "center", _frozen(center))
        object.__setattr__(self, "half_extents", _frozen(he))
        object.__setattr__(self, "basis", _frozen(basis))

    @property
    def diagonal(self) -> float:
        """Full diagonal length, 2 * ||half_extents||."""
        return float(2.0 * np.linalg.norm(self.half_extents))


@dataclass(frozen=True)
class Quaternion:
    """Unit quaternion, scalar-first."""

    w: float
    x: float
    y: float
    z: float

    def __post_init__(self) -> None:
        norm = math.sqrt(self.w**2 + self.x**2 + self.y**2 + self.z**2)
        if abs(norm - 1.0) > 1e-9:
            raise ValueError(f"quaternion norm {norm} is not 1")

    def as_array(self) -> np.ndarray:
        return np.array([self.w, self.x, self.y, self.z])


def _is_rotation(matrix: np.ndarray, tol: float) -> bool:
    return (
        np.max(np.abs(matrix.T @ matrix - np.eye(3))) <= tol
        and abs(np.linalg.det(matrix) - 1.0) <= tol
    )


def rotation_to_quaternion(matrix) -> Quaternion:
    """Extract a unit quaternion using the max-diagonal branch.

    Selecting the branch by the largest of ``trace, R00, R11, R22`` keeps the
    divisor large, which stays numerically stable near 180-degree rotations
    and tolerates mildly non-orthogonal input. The sign is canonicalized to
    w >= 0.
    """
    m = _as_rotation_array(matrix)
    trace = m[0, 0] + m[1, 1] + m[2, 2]
    if trace > max(m[0, 0], m[1, 1], m[2, 2]):
        s = math.sqrt(max(trace + 1.0, 0.0)) * 2.0
        w = 0.25 * s
        x = (m[2, 1] - m[1, 2]) / s
        y = (m[0, 2] - m[2, 0]) / s
        z = (m[1, 0] - m[0, 1]) / s
    elif m[0, 0] >= m[1, 1] and m[0, 0] >= m[2, 2]:
        s = math.sqrt(max(1.0 + m[0, 0] - m[1, 1] - m[2, 2], 0.0)) * 2.0
        w = (m[2, 1] - m[1, 2]) / s
        x = 0.25 * s
        y = (m[0, 1] + m[1, 0]) / s
        z = (m[0, 2] + m[2, 0]) / s
    elif m[1, 1] >= m[2, 2]:
        s = math.sqrt(max(1.0 + m[1, 1] - m[0, 0] - m[2, 2], 0.0)) * 2.0
        w = (m[0, 2] - m[2, 0]) / s
        x = (m[0, 1] + m[1, 0]) / s
        y = 0.25 * s
        z = (m[1, 2] + m[2, 1]) / s
    else:
        s = math.sqrt(max(1.0 + m[2, 2] - m[0, 0] - m[1, 1], 0.0)) * 2.0
        w = (m[1, 0] - m[0, 1]) / s
        x = (m[0, 2] + m[2, 0]) / s
        y = (m[1, 2] + m[2, 1]) / s
        z = 0.25 * s
    q = np.array([w, x, y, z])
    q /= np.linalg.norm(q)
    if q[0] < 0:
        q = -q
    return Quaternion(*(float(c) for c in q))


def quaternion_to_rotation(q: Quaternion) -> np.ndarray:
    """Rotation matrix of a unit quaternion."""
    w, x, y, z = q.w, q.x, q.y, q.z
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def quat_roundtrip(rotation) -> tuple[Quaternion, np.ndarray]:
    """Convert a rotation to a unit quaternion and back."""
    q = rotation_to_quaternion(rotation)
    return q, quaternion_to_rotation(q)


def sanitize_rotation(matrix, max_deviation: float = 0.5) -> np.ndarray:
    """Repair a raw predicted 3x3 matrix into a valid rotation.

    Goes through a unit quaternion and back, so already-valid rotations are
    reproduced to machine precision. Inputs farther than ``max_deviation``
    (Frobenius) from the nearest rotation, or with a reflective/singular
    nearest factor, are rejected.
    """
    m = _as_rotation_array(matrix)
    u, singular, vt = np.linalg.svd(m)
    polar = u @ vt
    if np.linalg.det(polar) <= 0.0:
        raise ValueError("matrix projects onto a reflection, not a rotation")
    deviation = float(np.sqrt(np.sum((singular - 1.0) ** 2)))
    if deviation > max_deviation:
        raise ValueError(
            f"matrix is {deviation:.3f} (Frobenius) from the nearest rotation,"
            f" beyond the guard {max_deviation}"
        )
    _, repaired = quat_roundtrip(m)
    return repaired


def compose_pose(outer: RigidPose, inner: RigidPose) -> RigidPose:
    """Composition ``outer . inner`` (apply inner first)."""
    return RigidPose(
        rotation=outer.rotation @ inner.rotation,
        translation=outer.rotation @ inner.translation + outer.translation,
    )


def invert_pose(pose: RigidPose) -> RigidPose:
    rt = pose.rotation.T
    return RigidPose(rotation=rt, translation=-rt @ pose.translation)


def apply_pose_to_motion(
    motion: MotionParams,
    pose: RigidPose,
    source_frame: Optional[CoordFrame] = None,
) -> MotionParams:
    """Transform motion parameters into the camera frame.

    ``pose`` maps the motion's current frame into camera coordinates. The
    axis is rotated and re-normalized; a revolute origin is fully
    transformed. Pass ``source_frame`` to assert which frame the pose was
    derived for; a mismatch with ``motion.frame`` raises.
    """
    if motion.frame is CoordFrame.CAMERA:
        raise ValueError("motion is already in the camera frame")
    if source_frame is not None and motion.frame is not source_frame:
        raise ValueError(
            f"motion is in {motion.frame.value} coordinates but the pose maps"
            f" from {source_frame.value}"
        )
    axis = pose.rotation @ motion.axis
    origin = None
    if motion.origin is not None:
        origin = pose.rotation @ motion.origin + pose.translation
    return MotionParams(motion.motion_type, axis, origin, CoordFrame.CAMERA)


def derive_object_pose(obb: OrientedBoundingBox, camera_pose: RigidPose) -> RigidPose:
    """Object pose (camera from object) from an OBB and a world-from-camera pose.

    The object frame sits at the box center with axes given by the box basis.
    """
    if not _is_rotation(np.asarray(camera_pose.rotation), tol=1e-6):
        raise ValueError("camera pose rotation is degenerate")
    world_from_object = RigidPose(obb.basis, obb.center)
    return compose_pose(invert_pose(camera_pose), world_from_object)


def axis_angle_deg(a, b, orientation_aware: bool = True) -> float:
    """Angle in degrees between two axis directions.

    Orientation-aware compares signed directions (range [0, 180]); otherwise
    directions are treated as lines (range [0, 90]).
    """
    ua = _unit_checked(a)
    ub = _unit_checked(b)
    dot = float(np.dot(ua, ub))
    if not orientation_aware:
        dot = abs(dot)
    return math.degrees(math.acos(max(-1.0, min(1.0, dot))))


def _unit_checked(vec) -> np.ndarray:
    v = np.asarray(vec, dtype=np.float64).reshape(3)
    norm = float(np.linalg.norm(v))
    if norm < AXIS_NORM_EPS:
        raise ValueError(f"axis has near-zero length ({norm:.3e})")
    return v / norm


def origin_error(
    pred_origin,
    gt: MotionParams,
    normalizer: Optional[float] = None,
    mode: str = "line",
) -> float:
    """Distance from a predicted origin to the ground-truth rotation axis.

    ``line`` mode (default) measures the shortest distance to the infinite
    line through the GT origin along the GT axis: any point on a revolute
    axis is geometrically equivalent. ``point`` mode measures straight
    point-to-point distance. Divided by ``normalizer`` (the object diagonal)
    when provided.
    """
    if gt.motion_type is not MotionType.REVOLUTE:
        raise ValueError("origin error is defined for revolute ground truth only")
    if gt.origin is None:
        raise ValueError("ground-truth motion lacks an origin")
    p = np.asarray(pred_origin, dtype=np.float64).reshape(3)
    delta = p - gt.origin
    if mode == "line":
        along = float(np.dot(delta, gt.axis))
        dist = float(np.linalg.norm(delta - along * gt.axis))
    elif mode == "point":
        dist = float(np.linalg.norm(delta))
    else:
        raise ValueError(f"unknown origin mode {mode!r}")
    if normalizer is not None:
        if normalizer <= 0:
            raise ValueError("normalizer must be positive")
        dist /= normalizer
    return dist


def rotation_geodesic_deg(r1, r2) -> float:
    """Geodesic angle between two rotations: arccos((trace(R1^T R2) - 1) / 2)."""
    m1 = _as_rotation_array(r1)
    m2 = _as_rotation_array(r2)
    cos = (np.trace(m1.T @ m2) - 1.0) / 2.0
    return math.degrees(math.acos(max(-1.0, min(1.0, float(cos)))))


def translation_error(t1, t2, diagonal: float) -> float:
    """Euclidean distance between translations, normalized by the object diagonal."""
    if diagonal <= 0:
        raise ValueError("diagonal must be positive")
    a = np.asarray(t1, dtype=np.float64).reshape(3)
    b = np.asarray(t2, dtype=np.float64).reshape(3)
    return float(np.linalg.norm(a - b)) / diagonal


def rotation_about_axis(axis, angle_deg: float) -> np.ndarray:
    """Rodrigues rotation matrix about a (not necessarily unit) axis."""
    u = _unit_checked(axis)
    theta = math.radians(angle_deg)
    k = np.array(
        [
            [0.0, -u[2], u[1]],
            [u[2], 0.0, -u[0]],
            [-u[1], u[0], 0.0],
        ]
    )
    return np.eye(3) + math.sin(theta) * k + (1.0 - math.cos(theta)) * (k @ k)
