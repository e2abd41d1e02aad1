"""Independent oracles shared by the unit and acceptance tests.

Everything here recomputes expected values from first principles (per-pixel
counting, exhaustive enumeration, direct definitions) and deliberately avoids
the library code paths it is used to check.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from opdkit.core import MotionType, PartLabel
from opdkit.metrics import MatchRecord


def ap_oracle(records, gt_count, level, recall_samples=101):
    """Average precision by direct definition: enumerate every detection
    prefix, collect (recall, precision) points, and take the best precision
    at each sampled recall."""
    flag_of = {
        "pdet": lambda r: r.matched,
        "m": lambda r: r.matched and r.type_ok,
        "ma": lambda r: r.matched and r.axis_ok,
        "mao": lambda r: r.matched and r.origin_ok,
    }[level]
    dets = sorted(
        (r for r in records if not r.ignored_match),
        key=lambda r: (-r.confidence, r.frame_id, r.pred_index),
    )
    points = []
    tp = fp = 0
    for det in dets:
        if flag_of(det):
            tp += 1
        else:
            fp += 1
        points.append((tp / gt_count, tp / (tp + fp)))
    total = 0.0
    for k in range(recall_samples):
        r = k / (recall_samples - 1)
        best = 0.0
        for recall, precision in points:
            if recall >= r and precision > best:
                best = precision
        total += best
    return total / recall_samples


def random_match_records(rng, max_preds=8, max_gt=3, max_frames=5, with_ignored=True):
    """Random but physically consistent match records plus the GT count.

    Flags are nested by construction and the number of matched records never
    exceeds the ground-truth count.
    """
    gt_count = int(rng.integers(1, max_gt + 1))
    n_preds = int(rng.integers(0, max_preds + 1))
    n_frames = int(rng.integers(1, max_frames + 1))
    matched_budget = gt_count
    records = []
    for i in range(n_preds):
        ignored = bool(with_ignored and rng.random() < 0.1)
        matched = not ignored and matched_budget > 0 and rng.random() < 0.6
        type_ok = axis_ok = origin_ok = False
        gt_index = None
        if matched:
            matched_budget -= 1
            gt_index = matched_budget
            type_ok = rng.random() < 0.8
            axis_ok = type_ok and rng.random() < 0.7
            origin_ok = axis_ok and rng.random() < 0.7
        elif ignored:
            gt_index = 0
        records.append(
            MatchRecord(
                frame_id=f"f{int(rng.integers(0, n_frames)):02d}",
                pred_index=i,
                confidence=float(rng.random()),
                pred_label=PartLabel.DOOR,
                pred_motion_type=MotionType.REVOLUTE,
                iou=float(rng.random()),
                gt_index=gt_index,
                gt_label=PartLabel.DOOR if gt_index is not None else None,
                gt_motion_type=MotionType.REVOLUTE if gt_index is not None else None,
                label_ok=gt_index is not None,
                type_ok=type_ok,
                axis_ok=axis_ok,
                origin_ok=origin_ok,
                ignored_match=ignored,
            )
        )
    return records, gt_count


def assignment_oracle(cost):
    """Exhaustive minimum assignment cost over all permutations."""
    cost = np.asarray(cost, dtype=np.float64)
    n, m = cost.shape
    best = math.inf
    if n <= m:
        for perm in itertools.permutations(range(m), n):
            total = sum(cost[i, j] for i, j in enumerate(perm))
            best = min(best, total)
    else:
        for perm in itertools.permutations(range(n), m):
            total = sum(cost[i, j] for j, i in enumerate(perm))
            best = min(best, total)
    return best


def polar_rotation_oracle(matrix):
    """Nearest rotation by orthogonal (polar) projection via SVD."""
    u, _, vt = np.linalg.svd(np.asarray(matrix, dtype=np.float64))
    d = np.sign(np.linalg.det(u @ vt))
    return u @ np.diag([1.0, 1.0, d]) @ vt


def quat_angle_oracle(r1, r2):
    """Rotation distance as 2*arccos(|q1 . q2|) in degrees, quaternions built
    independently from the matrices via the trace-free eigen route."""

    def to_quat(m):
        # Build the 4x4 symmetric matrix whose top eigenvector is the quaternion.
        k = np.array(
            [
                [m[0, 0] - m[1, 1] - m[2, 2], 0, 0, 0],
                [m[0, 1] + m[1, 0], m[1, 1] - m[0, 0] - m[2, 2], 0, 0],
                [m[0, 2] + m[2, 0], m[1, 2] + m[2, 1], m[2, 2] - m[0, 0] - m[1, 1], 0],
                [m[2, 1] - m[1, 2], m[0, 2] - m[2, 0], m[1, 0] - m[0, 1],
                 m[0, 0] + m[1, 1] + m[2, 2]],
            ]
        ) / 3.0
        k = k + k.T - np.diag(np.diag(k))
        vals, vecs = np.linalg.eigh(k)
        q = vecs[:, np.argmax(vals)]  # (x, y, z, w)
        return np.array([q[3], q[0], q[1], q[2]])

    q1 = to_quat(np.asarray(r1, dtype=np.float64))
    q2 = to_quat(np.asarray(r2, dtype=np.float64))
    dot = min(1.0, abs(float(np.dot(q1, q2))))
    return math.degrees(2.0 * math.acos(dot))


def homogeneous_transform_oracle(rotation, translation, points):
    """Apply a rigid transform through an explicit 4x4 matrix."""
    mat = np.eye(4)
    mat[:3, :3] = rotation
    mat[:3, 3] = translation
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    homo = np.concatenate([pts, np.ones((len(pts), 1))], axis=1)
    out = homo @ mat.T
    return out[:, :3].squeeze()


def pixel_iou_oracle(grid_a, grid_b):
    """Mask IoU by counting individual pixels."""
    inter = 0
    union = 0
    for a, b in zip(np.asarray(grid_a).ravel(), np.asarray(grid_b).ravel()):
        if a and b:
            inter += 1
        if a or b:
            union += 1
    return inter / union if union else 0.0


def rle_expand_oracle(runs, width, height):
    """Naive run expansion: emit each value run by run, column-major."""
    flat = []
    value = False
    for run in runs:
        flat.extend([value] * run)
        value = not value
    grid = np.zeros((height, width), dtype=bool)
    k = 0
    for col in range(width):
        for row in range(height):
            grid[row, col] = flat[k]
            k += 1
    return grid


def supersample_reference(scene, view, factor=4):
    """Reference rasterization by dense sub-pixel point sampling.

    Every pixel is sampled on a factor x factor grid; each sample picks the
    nearest triangle covering it (double sided, inclusive edges, no fill
    rule). Returns (majority label image, unanimous mask) where ties in the
    majority vote go to the smaller label value.
    """
    w, h = view.width, view.height
    intr = view.intrinsics
    rot_t = np.asarray(view.camera_pose.rotation).T
    trans = np.asarray(view.camera_pose.translation)

    offsets = (np.arange(factor) + 0.5) / factor
    xs = (np.arange(w)[:, None] + offsets[None, :]).ravel()
    ys = (np.arange(h)[:, None] + offsets[None, :]).ravel()
    sample_x, sample_y = np.meshgrid(xs, ys)  # (h*factor, w*factor)

    best_invd = np.zeros(sample_x.shape)
    best_label = np.full(sample_x.shape, -1, dtype=np.int64)

    batches = [(idx, part.mesh) for idx, (_, part) in enumerate(scene.flat_parts())]
    if scene.static_geometry is not None:
        batches.append((-1, scene.static_geometry))

    for label, mesh in batches:
        for tri in mesh:
            cam = (tri - trans) @ rot_t.T
            depths = -cam[:, 2]
            if np.any(depths <= 1e-4):
                continue  # reference fixture keeps geometry in front
            u = intr.cx + intr.fx * cam[:, 0] / depths
            v = intr.cy - intr.fy * cam[:, 1] / depths
            invd = 1.0 / depths
            w0 = _edge(u[1], v[1], u[2], v[2], sample_x, sample_y)
            w1 = _edge(u[2], v[2], u[0], v[0], sample_x, sample_y)
            w2 = _edge(u[0], v[0], u[1], v[1], sample_x, sample_y)
            area = _edge(u[0], v[0], u[1], v[1], u[2], v[2])
            if area == 0:
                continue
            pos = (w0 >= 0) & (w1 >= 0) & (w2 >= 0)
            neg = (w0 <= 0) & (w1 <= 0) & (w2 <= 0)
            inside = pos | neg
            if not inside.any():
                continue
            sample_invd = (w0 * invd[0] + w1 * invd[1] + w2 * invd[2]) / area
            closer = inside & (sample_invd > best_invd)
            best_invd[closer] = sample_invd[closer]
            best_label[closer] = label

    # Collapse samples back to pixels.
    per_pixel = best_label.reshape(h, factor, w, factor).transpose(0, 2, 1, 3)
    per_pixel = per_pixel.reshape(h, w, factor * factor)
    unanimous = (per_pixel == per_pixel[:, :, :1]).all(axis=2)
    majority = np.zeros((h, w), dtype=np.int64)
    for row in range(h):
        for col in range(w):
            values, counts = np.unique(per_pixel[row, col], return_counts=True)
            majority[row, col] = values[np.argmax(counts)]
    return majority, unanimous


def _edge(ax, ay, bx, by, px, py):
    return (bx - ax) * (py - ay) - (by - ay) * (px - ax)
