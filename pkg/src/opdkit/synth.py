"""Synthetic scenes with exactly-known ground truth and controlled
prediction perturbations.

Scenes are rows of cabinet-like objects whose openable parts are rectangular
panels on the front face. Within an object every motion axis is exactly
parallel or perpendicular to the others (drawers slide along the front
normal, doors hinge on the up axis, lids on the side axis), so the
consistency analysis must score 1.0 on ground truth. Predictions are copies
of the ground truth with each requested perturbation injected at its exact
magnitude, which makes metric thresholds sharply testable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import (
    BBox,
    CoordFrame,
    Frame,
    MotionParams,
    MotionType,
    PartLabel,
    PoseScope,
    PredictionFrame,
    PredictionInstance,
    rle_encode,
)
from .geometry import (
    Intrinsics,
    OrientedBoundingBox,
    RigidPose,
    invert_pose,
    rotation_about_axis,
)
from .pipeline import (
    CameraTrajectory,
    CameraView,
    ObjectModel,
    PartModel,
    SceneModel,
    build_frame,
)

__all__ = ["PerturbationSpec", "SynthSpec", "SynthResult", "generate"]

LABEL_MOTION = {
    PartLabel.DRAWER: MotionType.PRISMATIC,
    PartLabel.DOOR: MotionType.REVOLUTE,
    PartLabel.LID: MotionType.REVOLUTE,
}


@dataclass(frozen=True)
class PerturbationSpec:
    """Exact-magnitude noise injected into predictions.

    Angular noise rotates about a uniformly random perpendicular axis, so
    the resulting error equals the requested magnitude exactly. Origin and
    translation offsets are fractions of the object diagonal; origin offsets
    are perpendicular to the rotation axis so the point-to-line error is
    exact as well.
    """

    axis_noise_deg: float = 0.0
    origin_noise_frac: float = 0.0
    pose_rotation_noise_deg: float = 0.0
    pose_translation_noise_frac: float = 0.0
    confidence_range: tuple[float, float] = (0.85, 1.0)
    drop_rate: float = 0.0
    false_positive_rate: float = 0.0

    def __post_init__(self) -> None:
        lo, hi = self.confidence_range
        if not (0.0 <= lo <= hi <= 1.0):
            raise ValueError("confidence_range must satisfy 0 <= low <= high <= 1")
        for name in ("axis_noise_deg", "origin_noise_frac", "pose_rotation_noise_deg",
                     "pose_translation_noise_frac"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        for name in ("drop_rate", "false_positive_rate"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must be in [0, 1]")


@dataclass(frozen=True)
class SynthSpec:
    """Generator parameters; the seed fully determines every output byte."""

    seed: int = 0
    scenes: int = 3
    objects_per_scene: tuple[int, int] = (1, 2)
    parts_per_object: tuple[int, int] = (1, 3)
    label_mix: tuple[float, float, float] = (0.4, 0.4, 0.2)  # drawer, door, lid
    cameras_per_object: int = 2
    empty_frames_per_scene: int = 1
    camera_distance: tuple[float, float] = (2.2, 3.2)
    image_width: int = 96
    image_height: int = 96
    small_part_threshold: float = 0.05
    perturbation: PerturbationSpec = field(default_factory=PerturbationSpec)

    def __post_init__(self) -> None:
        if self.scenes <= 0:
            raise ValueError("scenes must be positive")
        for name in ("objects_per_scene", "parts_per_object", "camera_distance"):
            lo, hi = getattr(self, name)
            if lo > hi or lo <= 0:
                raise ValueError(f"{name} range ({lo}, {hi}) is infeasible")
        if len(self.label_mix) != 3 or sum(self.label_mix) <= 0 or min(self.label_mix) < 0:
            raise ValueError("label_mix needs three non-negative weights, not all zero")
        if self.image_width <= 0 or self.image_height <= 0:
            raise ValueError("image dimensions must be positive")


@dataclass(frozen=True)
class SynthResult:
    scenes: tuple[SceneModel, ...]
    scene_ids: tuple[str, ...]
    trajectories: tuple[CameraTrajectory, ...]
    gt_frames: tuple[Frame, ...]
    pred_frames: tuple[PredictionFrame, ...]


def _quad(corners: np.ndarray) -> np.ndarray:
    """Two triangles covering a quad given 4 corners in winding order."""
    return np.stack([corners[[0, 1, 2]], corners[[0, 2, 3]]])


def _box_mesh(half: np.ndarray) -> np.ndarray:
    """Closed axis-aligned box around the origin as 12 triangles."""
    hx, hy, hz = half
    tris = []
    for axis in range(3):
        for sign in (-1.0, 1.0):
            u, v = [a for a in range(3) if a != axis]
            corners = []
            for su, sv in ((-1, -1), (1, -1), (1, 1), (-1, 1)):
                c = np.zeros(3)
                c[axis] = sign * half[axis]
                c[u] = su * half[u]
                c[v] = sv * half[v]
                corners.append(c)
            tris.append(_quad(np.stack(corners)))
    return np.concatenate(tris)


def _look_at(eye: np.ndarray, target: np.ndarray, up=(0.0, 1.0, 0.0)) -> RigidPose:
    """World-from-camera pose for a camera at eye looking toward target.

    The camera frame has +Z pointing back toward the viewer (it looks along
    -Z) and +Y up.
    """
    z = eye - target
    z = z / np.linalg.norm(z)
    x = np.cross(np.asarray(up, dtype=np.float64), z)
    x = x / np.linalg.norm(x)
    y = np.cross(z, x)
    return RigidPose(np.stack([x, y, z], axis=1), eye)


def _random_perpendicular(rng: np.random.Generator, axis: np.ndarray) -> np.ndarray:
    while True:
        v = rng.normal(size=3)
        v -= np.dot(v, axis) * axis
        norm = np.linalg.norm(v)
        if norm > 1e-6:
            return v / norm


def _rotate_exact(rng: np.random.Generator, axis: np.ndarray, angle_deg: float) -> np.ndarray:
    perp = _random_perpendicular(rng, axis)
    return rotation_about_axis(perp, angle_deg) @ axis


def _random_unit(rng: np.random.Generator) -> np.ndarray:
    while True:
        v = rng.normal(size=3)
        norm = np.linalg.norm(v)
        if norm > 1e-6:
            return v / norm


def _build_scene(rng: np.random.Generator, spec: SynthSpec) -> SceneModel:
    n_objects = int(rng.integers(spec.objects_per_scene[0], spec.objects_per_scene[1] + 1))
    objects = []
    static = []
    spacing = 2.5
    labels = list(PartLabel)
    mix = np.asarray(spec.label_mix, dtype=np.float64)
    mix = mix / mix.sum()
    for k in range(n_objects):
        hx = rng.uniform(0.55, 0.8)
        hy = rng.uniform(0.5, 0.85)
        hz = rng.uniform(0.25, 0.4)
        yaw = rng.uniform(-25.0, 25.0)
        basis = rotation_about_axis([0.0, 1.0, 0.0], yaw)
        center = np.array([k * spacing - (n_objects - 1) * spacing / 2.0, 0.0, 0.0])
        obb = OrientedBoundingBox(center=center, half_extents=[hx, hy, hz], basis=basis)

        n_parts = int(rng.integers(spec.parts_per_object[0], spec.parts_per_object[1] + 1))
        margin = 0.04
        strip = (2.0 * hx - 2.0 * margin) / n_parts
        parts = []
        for i in range(n_parts):
            label = labels[int(rng.choice(3, p=mix))]
            x0 = -hx + margin + i * strip + 0.01
            x1 = -hx + margin + (i + 1) * strip - 0.01
            y0, y1 = -hy + margin, hy - margin
            z = hz + 0.02  # panels sit proud of the cabinet body
            corners_obj = np.array(
                [[x0, y0, z], [x1, y0, z], [x1, y1, z], [x0, y1, z]]
            )
            corners_world = corners_obj @ basis.T + center
            if label is PartLabel.DRAWER:
                motion = MotionParams(
                    MotionType.PRISMATIC, [0.0, 0.0, 1.0], None, CoordFrame.OBJECT
                )
            elif label is PartLabel.DOOR:
                hinge_x = x0 if rng.random() < 0.5 else x1
                motion = MotionParams(
                    MotionType.REVOLUTE, [0.0, 1.0, 0.0], [hinge_x, 0.0, z], CoordFrame.OBJECT
                )
            else:  # lid hinges along the top edge
                motion = MotionParams(
                    MotionType.REVOLUTE, [1.0, 0.0, 0.0], [0.0, y1, z], CoordFrame.OBJECT
                )
            parts.append(
                PartModel(
                    part_id=f"obj{k}_part{i}",
                    label=label,
                    mesh=_quad(corners_world),
                    motion=motion,
                )
            )
        objects.append(ObjectModel(object_id=f"obj{k}", obb=obb, parts=tuple(parts)))
        static.append(_box_mesh(np.array([hx, hy, hz])) @ basis.T + center)
    return SceneModel(objects=tuple(objects), static_geometry=np.concatenate(static))


def _scene_cameras(
    rng: np.random.Generator,
    spec: SynthSpec,
    scene: SceneModel,
    scene_id: str,
) -> CameraTrajectory:
    intr = Intrinsics(
        fx=float(spec.image_width),
        fy=float(spec.image_width),
        cx=spec.image_width / 2.0,
        cy=spec.image_height / 2.0,
    )
    views = []
    counter = 0
    for obj in scene.objects:
        front = obj.obb.basis[:, 2]
        up = obj.obb.basis[:, 1]
        side = obj.obb.basis[:, 0]
        for _ in range(spec.cameras_per_object):
            d = rng.uniform(*spec.camera_distance)
            jitter = rng.uniform(-0.35, 0.35, size=2)
            eye = obj.obb.center + d * front + jitter[0] * side + jitter[1] * up
            views.append(
                CameraView(
                    frame_id=f"{scene_id}_c{counter:02d}",
                    camera_pose=_look_at(eye, obj.obb.center),
                    intrinsics=intr,
                    width=spec.image_width,
                    height=spec.image_height,
                )
            )
            counter += 1
    for _ in range(spec.empty_frames_per_scene):
        d = rng.uniform(*spec.camera_distance)
        eye = scene.objects[0].obb.center + d * scene.objects[0].obb.basis[:, 2]
        away = eye + np.array([0.0, 0.0, 10.0]) + scene.objects[0].obb.basis[:, 2] * d
        views.append(
            CameraView(
                frame_id=f"{scene_id}_c{counter:02d}",
                camera_pose=_look_at(eye, away),
                intrinsics=intr,
                width=spec.image_width,
                height=spec.image_height,
            )
        )
        counter += 1
    return CameraTrajectory(views=tuple(views))


def _perturb_frame(
    rng: np.random.Generator,
    frame: Frame,
    noise: PerturbationSpec,
) -> PredictionFrame:
    instances = []
    for part in frame.parts:
        if noise.drop_rate > 0.0 and rng.random() < noise.drop_rate:
            continue
        confidence = float(rng.uniform(*noise.confidence_range))

        axis = np.array(part.motion.axis)
        if noise.axis_noise_deg > 0.0:
            axis = _rotate_exact(rng, axis, noise.axis_noise_deg)
        origin = None
        if part.motion.motion_type is MotionType.REVOLUTE:
            origin = np.array(part.motion.origin)
            if noise.origin_noise_frac > 0.0:
                offset_dir = _random_perpendicular(rng, np.array(part.motion.axis))
                origin = origin + noise.origin_noise_frac * part.object_diagonal * offset_dir

        pose = part.object_pose
        rotation = np.array(pose.rotation)
        translation = np.array(pose.translation)
        if noise.pose_rotation_noise_deg > 0.0:
            rotation = rotation @ rotation_about_axis(
                _random_unit(rng), noise.pose_rotation_noise_deg
            )
        if noise.pose_translation_noise_frac > 0.0:
            translation = translation + (
                noise.pose_translation_noise_frac * part.object_diagonal * _random_unit(rng)
            )
        pred_pose = RigidPose(rotation, translation)

        # Store the motion in object coordinates through the predicted pose;
        # resolving it back through the same pose reproduces the perturbed
        # camera-frame motion, keeping each noise channel independent.
        cam_from_obj = pred_pose
        obj_axis = cam_from_obj.rotation.T @ axis
        obj_origin = None
        if origin is not None:
            obj_origin = cam_from_obj.rotation.T @ (origin - cam_from_obj.translation)
        instances.append(
            PredictionInstance(
                label=part.label,
                confidence=confidence,
                mask=part.mask,
                bbox=part.bbox,
                motion=MotionParams(
                    part.motion.motion_type, obj_axis, obj_origin, CoordFrame.OBJECT
                ),
                predicted_pose=pred_pose,
                pose_scope=PoseScope.PER_PART,
            )
        )

    if noise.false_positive_rate > 0.0 and rng.random() < noise.false_positive_rate:
        instances.append(_false_positive(rng, frame))
    return PredictionFrame(frame_id=frame.frame_id, instances=tuple(instances))


def _false_positive(rng: np.random.Generator, frame: Frame) -> PredictionInstance:
    w, h = frame.width, frame.height
    bw = int(rng.integers(max(2, w // 10), max(3, w // 3)))
    bh = int(rng.integers(max(2, h // 10), max(3, h // 3)))
    x0 = int(rng.integers(0, w - bw))
    y0 = int(rng.integers(0, h - bh))
    grid = np.zeros((h, w), dtype=bool)
    grid[y0 : y0 + bh, x0 : x0 + bw] = True
    mask = rle_encode(grid)
    label = list(PartLabel)[int(rng.integers(0, 3))]
    motion_type = LABEL_MOTION[label]
    origin = _random_unit(rng) if motion_type is MotionType.REVOLUTE else None
    return PredictionInstance(
        label=label,
        confidence=float(rng.uniform(0.5, 0.95)),
        mask=mask,
        bbox=BBox(x0, y0, x0 + bw, y0 + bh),
        motion=MotionParams(motion_type, _random_unit(rng), origin, CoordFrame.CAMERA),
        predicted_pose=None,
        pose_scope=PoseScope.NONE,
    )


def generate(spec: SynthSpec) -> SynthResult:
    """Generate scenes, trajectories, ground-truth frames, and perturbed
    predictions, bit-reproducibly from the spec seed."""
    rng = np.random.default_rng(spec.seed)
    scenes = []
    scene_ids = []
    trajectories = []
    gt_frames: list[Frame] = []
    pred_frames: list[PredictionFrame] = []
    for s in range(spec.scenes):
        scene_id = f"s{s:02d}"
        scene = _build_scene(rng, spec)
        trajectory = _scene_cameras(rng, spec, scene, scene_id)
        scenes.append(scene)
        scene_ids.append(scene_id)
        trajectories.append(trajectory)
        for view in trajectory.views:
            frame = build_frame(scene, view, spec.small_part_threshold)
            gt_frames.append(frame)
            pred_frames.append(_perturb_frame(rng, frame, spec.perturbation))
    return SynthResult(
        scenes=tuple(scenes),
        scene_ids=tuple(scene_ids),
        trajectories=tuple(trajectories),
        gt_frames=tuple(gt_frames),
        pred_frames=tuple(pred_frames),
    )
