"""Dataset construction: z-buffered projection of 3D part meshes into
per-frame masks, motion transfer into camera coordinates, small-part
filtering, frame classification, and split statistics.

Frames are independent, so callers may rasterize them in parallel; all
aggregation here is done in deterministic frame order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .core import (
    AOCategory,
    BinaryMask,
    CoordFrame,
    Frame,
    MotionParams,
    MotionType,
    PartAnnotation,
    PartLabel,
    rle_encode,
    tight_bbox,
)
from .geometry import (
    Intrinsics,
    OrientedBoundingBox,
    RigidPose,
    apply_pose_to_motion,
    derive_object_pose,
    invert_pose,
)

__all__ = [
    "PartModel",
    "ObjectModel",
    "SceneModel",
    "CameraView",
    "CameraTrajectory",
    "SplitStats",
    "DatasetStats",
    "project_point",
    "rasterize_labels",
    "build_frame",
    "classify_frame_ao",
    "dataset_stats",
]

NEAR_PLANE = 1e-4  # meters
BACKGROUND = -1  # label-image value for background and static occluders


def _triangle_array(mesh) -> np.ndarray:
    arr = np.asarray(mesh, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[1:] != (3, 3):
        raise ValueError(f"mesh must have shape (n, 3, 3), got {arr.shape}")
    return arr


@dataclass(frozen=True)
class PartModel:
    """Openable part: triangle soup in world coordinates plus object-frame motion."""

    part_id: str
    label: PartLabel
    mesh: np.ndarray
    motion: MotionParams

    def __post_init__(self) -> None:
        arr = _triangle_array(self.mesh).copy()
        arr.flags.writeable = False
        object.__setattr__(self, "mesh", arr)
        if self.motion.frame is not CoordFrame.OBJECT:
            raise ValueError("part motion must be expressed in the object frame")


@dataclass(frozen=True)
class ObjectModel:
    object_id: str
    obb: OrientedBoundingBox
    parts: tuple[PartModel, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "parts", tuple(self.parts))


@dataclass(frozen=True)
class SceneModel:
    """Objects with openable parts plus optional static occluder geometry."""

    objects: tuple[ObjectModel, ...]
    static_geometry: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "objects", tuple(self.objects))
        ids = [p.part_id for o in self.objects for p in o.parts]
        if len(ids) != len(set(ids)):
            raise ValueError("part ids must be unique within a scene")
        if self.static_geometry is not None:
            arr = _triangle_array(self.static_geometry).copy()
            arr.flags.writeable = False
            object.__setattr__(self, "static_geometry", arr)

    def flat_parts(self) -> tuple[tuple[ObjectModel, PartModel], ...]:
        """Parts in deterministic (object order, part order); the rasterizer's
        label indices refer to this list."""
        return tuple((o, p) for o in self.objects for p in o.parts)


@dataclass(frozen=True)
class CameraView:
    """One camera sample: id, pose (world from camera), intrinsics, image size."""

    frame_id: str
    camera_pose: RigidPose
    intrinsics: Intrinsics
    width: int
    height: int

    def __post_init__(self) -> None:
        if self.width <= 0 or self.height <= 0:
            raise ValueError("image dimensions must be positive")


@dataclass(frozen=True)
class CameraTrajectory:
    views: tuple[CameraView, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "views", tuple(self.views))


def project_point(point, camera_pose: RigidPose, intrinsics: Intrinsics):
    """Project a world point through a pinhole camera.

    Returns (u, v, depth) in pixels/meters, or None when the point lies at or
    behind the near plane. Depth is measured along the viewing direction, so
    d = -z in camera coordinates (+Z faces into the camera).
    """
    p = np.asarray(point, dtype=np.float64).reshape(3)
    cam = camera_pose.rotation.T @ (p - camera_pose.translation)
    depth = -cam[2]
    if depth <= NEAR_PLANE:
        return None
    u = intrinsics.cx + intrinsics.fx * cam[0] / depth
    v = intrinsics.cy - intrinsics.fy * cam[1] / depth
    return (float(u), float(v), float(depth))


def _clip_near(tri_cam: np.ndarray) -> list[np.ndarray]:
    """Clip one camera-space triangle against the near plane.

    Returns a list of triangles (each (3, 3)) fully in front of the plane.
    """
    depths = -tri_cam[:, 2]
    if np.all(depths > NEAR_PLANE):
        return [tri_cam]
    if np.all(depths <= NEAR_PLANE):
        return []
    poly: list[np.ndarray] = []
    for i in range(3):
        cur, nxt = tri_cam[i], tri_cam[(i + 1) % 3]
        dc = -cur[2] - NEAR_PLANE
        dn = -nxt[2] - NEAR_PLANE
        if dc > 0:
            poly.append(cur)
        if (dc > 0) != (dn > 0):
            t = dc / (dc - dn)
            poly.append(cur + t * (nxt - cur))
    return [np.stack([poly[0], poly[i], poly[i + 1]]) for i in range(1, len(poly) - 1)]


def _canonical_edge(ax, ay, bx, by, px, py):
    """Edge function evaluated with lexicographically ordered endpoints.

    Returns (value grid, flipped). Adjacent triangles sharing the edge then
    see bit-identical magnitudes with opposite signs, so a pixel center lying
    exactly on a shared edge is claimed by exactly one triangle.
    """
    if (ax, ay) <= (bx, by):
        w = (bx - ax) * (py - ay) - (by - ay) * (px - ax)
        return w, False
    w = (ax - bx) * (py - by) - (ay - by) * (px - bx)
    return w, True


def _raster_one(
    uv: np.ndarray,
    invd: np.ndarray,
    label: int,
    labels: np.ndarray,
    zbuf: np.ndarray,
) -> None:
    """Rasterize a projected triangle into the label/z buffers in place.

    Coverage uses pixel centers with a top-left fill rule; depth is
    interpolated as 1/d, linear in screen space, and the nearest surface
    (largest 1/d) wins. Ties keep the earlier write, so output depends only
    on the deterministic triangle submission order.
    """
    height, width = labels.shape
    area2 = (uv[1, 0] - uv[0, 0]) * (uv[2, 1] - uv[0, 1]) - (uv[1, 1] - uv[0, 1]) * (
        uv[2, 0] - uv[0, 0]
    )
    if area2 == 0.0:
        return
    order = (0, 1, 2) if area2 > 0 else (0, 2, 1)
    v = uv[list(order)]
    w_attr = invd[list(order)]
    area2 = abs(area2)

    x_lo = max(int(np.floor(v[:, 0].min() - 0.5)), 0)
    x_hi = min(int(np.ceil(v[:, 0].max() - 0.5)) + 1, width)
    y_lo = max(int(np.floor(v[:, 1].min() - 0.5)), 0)
    y_hi = min(int(np.ceil(v[:, 1].max() - 0.5)) + 1, height)
    if x_lo >= x_hi or y_lo >= y_hi:
        return

    px = np.arange(x_lo, x_hi, dtype=np.float64) + 0.5
    py = np.arange(y_lo, y_hi, dtype=np.float64) + 0.5
    px, py = np.meshgrid(px, py)

    inside = np.ones(px.shape, dtype=bool)
    bary = []
    for i in range(3):
        a = v[(i + 1) % 3]
        b = v[(i + 2) % 3]
        w, flipped = _canonical_edge(a[0], a[1], b[0], b[1], px, py)
        if flipped:
            w = -w
        # Top-left rule: with interior-positive edge functions in y-down
        # screen coordinates, a top edge runs in +x and a left edge in -y.
        dx = b[0] - a[0]
        dy = b[1] - a[1]
        top_left = dy < 0 or (dy == 0 and dx > 0)
        inside &= (w > 0) | ((w == 0) & top_left)
        bary.append(w)
    if not inside.any():
        return

    depth_inv = (bary[0] * w_attr[0] + bary[1] * w_attr[1] + bary[2] * w_attr[2]) / area2
    region_z = zbuf[y_lo:y_hi, x_lo:x_hi]
    region_l = labels[y_lo:y_hi, x_lo:x_hi]
    update = inside & (depth_inv > region_z)
    region_z[update] = depth_inv[update]
    region_l[update] = label


def _project_vertices(tri_cam: np.ndarray, intr: Intrinsics) -> tuple[np.ndarray, np.ndarray]:
    depth = -tri_cam[:, 2]
    u = intr.cx + intr.fx * tri_cam[:, 0] / depth
    v = intr.cy - intr.fy * tri_cam[:, 1] / depth
    return np.stack([u, v], axis=1), 1.0 / depth


def rasterize_labels(scene: SceneModel, view: CameraView) -> np.ndarray:
    """Render a (height, width) int32 image of part indices.

    Pixel values index into ``scene.flat_parts()``; background and static
    occluder pixels are -1. Z-buffered with the nearest surface winning;
    triangles are rendered double-sided since annotation meshes are often
    open shells seen from either side.
    """
    if view.width <= 0 or view.height <= 0:
        raise ValueError("zero-area image")
    labels = np.full((view.height, view.width), BACKGROUND, dtype=np.int32)
    zbuf = np.zeros((view.height, view.width), dtype=np.float64)

    world_from_cam = view.camera_pose
    rot_t = world_from_cam.rotation.T
    trans = world_from_cam.translation

    batches: list[tuple[int, np.ndarray]] = []
    for idx, (_, part) in enumerate(scene.flat_parts()):
        if part.mesh.shape[0]:
            batches.append((idx, part.mesh))
    if scene.static_geometry is not None and scene.static_geometry.shape[0]:
        batches.append((BACKGROUND, scene.static_geometry))

    for label, mesh in batches:
        cam = (mesh.reshape(-1, 3) - trans) @ rot_t.T
        cam = cam.reshape(-1, 3, 3)
        for tri in cam:
            for clipped in _clip_near(tri):
                uv, invd = _project_vertices(clipped, view.intrinsics)
                _raster_one(uv, invd, label, labels, zbuf)
    return labels


def build_frame(
    scene: SceneModel,
    view: CameraView,
    small_part_threshold: float = 0.05,
) -> Frame:
    """Rasterize one camera view into a ground-truth frame.

    Parts with no visible pixels are omitted. Visible parts covering less
    than ``small_part_threshold`` of the image (strict) are kept but marked
    ignored. Motion parameters are transferred from object to camera
    coordinates through the pose derived from the object's bounding box.
    """
    label_image = rasterize_labels(scene, view)
    total_pixels = view.width * view.height
    annotations: list[PartAnnotation] = []
    pose_cache: dict[str, RigidPose] = {}
    for idx, (obj, part) in enumerate(scene.flat_parts()):
        grid = label_image == idx
        count = int(grid.sum())
        if count == 0:
            continue
        if obj.object_id not in pose_cache:
            pose_cache[obj.object_id] = derive_object_pose(obj.obb, view.camera_pose)
        pose = pose_cache[obj.object_id]
        mask = rle_encode(grid)
        coverage = count / total_pixels
        annotations.append(
            PartAnnotation(
                part_id=part.part_id,
                object_id=obj.object_id,
                label=part.label,
                mask=mask,
                bbox=tight_bbox(mask),
                motion=apply_pose_to_motion(part.motion, pose, source_frame=CoordFrame.OBJECT),
                object_pose=pose,
                object_diagonal=obj.obb.diagonal,
                coverage_ratio=coverage,
                ignored=coverage < small_part_threshold,
            )
        )
    return Frame(
        frame_id=view.frame_id,
        width=view.width,
        height=view.height,
        intrinsics=view.intrinsics,
        camera_pose=view.camera_pose,
        parts=tuple(annotations),
        global_pose=invert_pose(view.camera_pose),
    )


def classify_frame_ao(frame: Frame) -> AOCategory:
    """Classify a frame by how many distinct objects own a non-ignored part."""
    owners = {p.object_id for p in frame.parts if not p.ignored}
    if not owners:
        return AOCategory.NONE
    if len(owners) == 1:
        return AOCategory.SINGLE
    return AOCategory.MULTIPLE


@dataclass(frozen=True)
class SplitStats:
    """Per-split dataset statistics over non-ignored parts."""

    frames: int
    none: int
    single: int
    multiple: int
    parts_per_frame: float
    total_parts: int
    label_counts: dict
    motion_counts: dict
    part_histogram: tuple[int, int, int, int, int]  # 0 / 1 / 2 / 3 / 4+

    def __post_init__(self) -> None:
        assert self.none + self.single + self.multiple == self.frames
        assert sum(self.part_histogram) == self.frames


@dataclass(frozen=True)
class DatasetStats:
    splits: dict

    def totals(self) -> SplitStats:
        return _aggregate_stats([s for s in self.splits.values()])


def _split_stats(frames: Sequence[Frame]) -> SplitStats:
    counts = {AOCategory.NONE: 0, AOCategory.SINGLE: 0, AOCategory.MULTIPLE: 0}
    label_counts = {label: 0 for label in PartLabel}
    motion_counts = {mt: 0 for mt in MotionType}
    histogram = [0, 0, 0, 0, 0]
    part_totals = []
    for frame in sorted(frames, key=lambda f: f.frame_id):
        visible = frame.visible_parts()
        counts[classify_frame_ao(frame)] += 1
        histogram[min(len(visible), 4)] += 1
        if visible:
            part_totals.append(len(visible))
        for part in visible:
            label_counts[part.label] += 1
            motion_counts[part.motion.motion_type] += 1
    parts_per_frame = float(np.mean(part_totals)) if part_totals else 0.0
    return SplitStats(
        frames=len(frames),
        none=counts[AOCategory.NONE],
        single=counts[AOCategory.SINGLE],
        multiple=counts[AOCategory.MULTIPLE],
        parts_per_frame=parts_per_frame,
        total_parts=sum(part_totals),
        label_counts=label_counts,
        motion_counts=motion_counts,
        part_histogram=tuple(histogram),
    )


def _aggregate_stats(splits: Sequence[SplitStats]) -> SplitStats:
    label_counts = {label: 0 for label in PartLabel}
    motion_counts = {mt: 0 for mt in MotionType}
    histogram = [0, 0, 0, 0, 0]
    for s in splits:
        for k, v in s.label_counts.items():
            label_counts[k] += v
        for k, v in s.motion_counts.items():
            motion_counts[k] += v
        for i, v in enumerate(s.part_histogram):
            histogram[i] += v
    frames = sum(s.frames for s in splits)
    total_parts = sum(s.total_parts for s in splits)
    frames_with_parts = sum(s.frames - s.part_histogram[0] for s in splits)
    return SplitStats(
        frames=frames,
        none=sum(s.none for s in splits),
        single=sum(s.single for s in splits),
        multiple=sum(s.multiple for s in splits),
        parts_per_frame=total_parts / frames_with_parts if frames_with_parts else 0.0,
        total_parts=total_parts,
        label_counts=label_counts,
        motion_counts=motion_counts,
        part_histogram=tuple(histogram),
    )


def dataset_stats(frames_by_split: dict[str, Sequence[Frame]]) -> DatasetStats:
    """Compute per-split statistics; parts per frame averages over frames
    with at least one non-ignored part."""
    return DatasetStats(
        splits={split: _split_stats(frames) for split, frames in frames_by_split.items()}
    )
