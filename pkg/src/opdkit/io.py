"""JSON interchange formats for every file the toolkit reads or writes.

All files carry a ``schema_version`` field. Loaders validate structure and
report errors with a full field path (for example
``frames[2].parts[0].motion.axis``), which the command line surfaces as an
input error.

Wire formats:
  mask      {"size": [h, w], "counts": [...]}   column-major runs, zero first
  pose      {"rotation": [9 row-major], "translation": [3]}
  motion    {"type": "prismatic"|"revolute", "axis": [3], "origin": [3]?,
             "frame": "camera"|"object"|"scene"}
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np

from .core import (
    BBox,
    BinaryMask,
    CoordFrame,
    Frame,
    MetricConfig,
    MotionParams,
    MotionType,
    PartAnnotation,
    PartLabel,
    PoseScope,
    PredictionFrame,
    PredictionInstance,
    tight_bbox,
)
from .geometry import Intrinsics, OrientedBoundingBox, RigidPose
from .losses import LossPrediction, LossTarget, LossWeights
from .pipeline import CameraTrajectory, CameraView, ObjectModel, PartModel, SceneModel
from .synth import PerturbationSpec, SynthSpec

__all__ = [
    "SCHEMA_VERSION",
    "SchemaError",
    "load_json",
    "save_json",
    "mask_to_json",
    "mask_from_json",
    "pose_to_json",
    "pose_from_json",
    "load_config",
    "save_annotations",
    "load_annotations",
    "save_predictions",
    "load_predictions",
    "save_scenes",
    "load_scenes",
    "save_trajectories",
    "load_trajectories",
    "load_synth_spec",
    "load_loss_pairs",
]

SCHEMA_VERSION = 1


class SchemaError(ValueError):
    """Input file violates the expected schema; message carries the field path."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


def _sub(path: str, key) -> str:
    if isinstance(key, int):
        return f"{path}[{key}]"
    return f"{path}.{key}" if path else str(key)


def _obj(value, path: str) -> dict:
    if not isinstance(value, dict):
        raise SchemaError(path, f"expected an object, got {type(value).__name__}")
    return value


def _list(value, path: str) -> list:
    if not isinstance(value, list):
        raise SchemaError(path, f"expected an array, got {type(value).__name__}")
    return value


def _get(d: dict, key: str, path: str, required: bool = True, default=None):
    _obj(d, path)
    if key not in d or d[key] is None:
        if required:
            raise SchemaError(_sub(path, key), "missing required field")
        return default
    return d[key]


def _number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(path, f"expected a number, got {type(value).__name__}")
    return float(value)


def _integer(value, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaError(path, f"expected an integer, got {type(value).__name__}")
    return value


def _string(value, path: str) -> str:
    if not isinstance(value, str):
        raise SchemaError(path, f"expected a string, got {type(value).__name__}")
    return value


def _boolean(value, path: str) -> bool:
    if not isinstance(value, bool):
        raise SchemaError(path, f"expected a boolean, got {type(value).__name__}")
    return value


def _vector(value, n: int, path: str) -> np.ndarray:
    items = _list(value, path)
    if len(items) != n:
        raise SchemaError(path, f"expected {n} numbers, got {len(items)}")
    return np.array([_number(v, _sub(path, i)) for i, v in enumerate(items)])


def _enum(value, mapping: dict, path: str):
    name = _string(value, path)
    if name not in mapping:
        raise SchemaError(path, f"expected one of {sorted(mapping)}, got {name!r}")
    return mapping[name]


def _check_version(doc: dict, path: str) -> None:
    version = _get(doc, "schema_version", path, required=False)
    if version is not None and version != SCHEMA_VERSION:
        raise SchemaError(
            _sub(path, "schema_version"),
            f"unsupported version {version}, this toolkit reads {SCHEMA_VERSION}",
        )


def load_json(path) -> Any:
    """Parse a JSON file; decode errors carry line/column diagnostics."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        return json.loads(text)
    except json.JSONDecodeError as err:
        raise SchemaError(
            str(path), f"malformed JSON at line {err.lineno} column {err.colno}: {err.msg}"
        ) from err


def save_json(path, payload) -> None:
    Path(path).write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


# --- primitive encodings -------------------------------------------------

def mask_to_json(mask: BinaryMask) -> dict:
    return {"size": [mask.height, mask.width], "counts": list(mask.rle)}


def mask_from_json(value, path: str) -> BinaryMask:
    d = _obj(value, path)
    size = _list(_get(d, "size", path), _sub(path, "size"))
    if len(size) != 2:
        raise SchemaError(_sub(path, "size"), "expected [height, width]")
    counts = _list(_get(d, "counts", path), _sub(path, "counts"))
    runs = [_integer(c, _sub(_sub(path, "counts"), i)) for i, c in enumerate(counts)]
    try:
        return BinaryMask(
            width=_integer(size[1], _sub(path, "size")),
            height=_integer(size[0], _sub(path, "size")),
            rle=tuple(runs),
        )
    except ValueError as err:
        raise SchemaError(path, str(err)) from err


def pose_to_json(pose: RigidPose) -> dict:
    return {
        "rotation": [float(v) for v in pose.rotation.ravel()],
        "translation": [float(v) for v in pose.translation],
    }


def pose_from_json(value, path: str) -> RigidPose:
    d = _obj(value, path)
    rotation = _vector(_get(d, "rotation", path), 9, _sub(path, "rotation"))
    translation = _vector(_get(d, "translation", path), 3, _sub(path, "translation"))
    return RigidPose(rotation.reshape(3, 3), translation)


_LABELS = {label.value: label for label in PartLabel}
_MOTION_TYPES = {mt.value: mt for mt in MotionType}
_FRAMES = {f.value: f for f in CoordFrame}
_SCOPES = {s.value: s for s in PoseScope}


def motion_to_json(motion: MotionParams, include_frame: bool = True) -> dict:
    doc = {"type": motion.motion_type.value, "axis": [float(v) for v in motion.axis]}
    if motion.origin is not None:
        doc["origin"] = [float(v) for v in motion.origin]
    if include_frame:
        doc["frame"] = motion.frame.value
    return doc


def motion_from_json(value, path: str, default_frame: Optional[CoordFrame] = None) -> MotionParams:
    d = _obj(value, path)
    motion_type = _enum(_get(d, "type", path), _MOTION_TYPES, _sub(path, "type"))
    axis = _vector(_get(d, "axis", path), 3, _sub(path, "axis"))
    origin_raw = _get(d, "origin", path, required=motion_type is MotionType.REVOLUTE)
    origin = None
    if origin_raw is not None:
        origin = _vector(origin_raw, 3, _sub(path, "origin"))
    frame_raw = _get(d, "frame", path, required=default_frame is None)
    frame = default_frame if frame_raw is None else _enum(frame_raw, _FRAMES, _sub(path, "frame"))
    try:
        return MotionParams(motion_type, axis, origin, frame)
    except ValueError as err:
        raise SchemaError(path, str(err)) from err


def _bbox_from_json(value, path: str) -> BBox:
    v = _vector(value, 4, path)
    try:
        return BBox(*[float(x) for x in v])
    except ValueError as err:
        raise SchemaError(path, str(err)) from err


def _intrinsics_from_json(value, path: str) -> Intrinsics:
    d = _obj(value, path)
    try:
        return Intrinsics(
            fx=_number(_get(d, "fx", path), _sub(path, "fx")),
            fy=_number(_get(d, "fy", path), _sub(path, "fy")),
            cx=_number(_get(d, "cx", path), _sub(path, "cx")),
            cy=_number(_get(d, "cy", path), _sub(path, "cy")),
        )
    except ValueError as err:
        raise SchemaError(path, str(err)) from err


def _intrinsics_to_json(intr: Intrinsics) -> dict:
    return {"fx": intr.fx, "fy": intr.fy, "cx": intr.cx, "cy": intr.cy}


# --- metric configuration -------------------------------------------------

def load_config(path) -> MetricConfig:
    doc = _obj(load_json(path), "config")
    _check_version(doc, "config")
    known = {
        "iou_threshold",
        "axis_threshold_deg",
        "origin_threshold",
        "confidence_threshold",
        "recall_samples",
        "matcher",
        "axis_orientation_aware",
        "origin_mode",
        "pose_acc_denominator",
    }
    kwargs = {}
    for key, value in doc.items():
        if key == "schema_version":
            continue
        if key not in known:
            raise SchemaError(_sub("config", key), "unknown configuration field")
        kwargs[key] = value
    try:
        return MetricConfig(**kwargs)
    except (TypeError, ValueError) as err:
        raise SchemaError("config", str(err)) from err


# --- ground-truth annotations ----------------------------------------------

def _part_to_json(part: PartAnnotation) -> dict:
    doc = {
        "part_id": part.part_id,
        "object_id": part.object_id,
        "label": part.label.value,
        "mask": mask_to_json(part.mask),
        "bbox": list(part.bbox.as_tuple()),
        "motion": motion_to_json(part.motion),
        "coverage_ratio": part.coverage_ratio,
        "ignored": part.ignored,
    }
    if part.object_pose is not None:
        doc["object_pose"] = pose_to_json(part.object_pose)
    if part.object_diagonal is not None:
        doc["object_diagonal"] = part.object_diagonal
    return doc


def _part_from_json(value, path: str) -> PartAnnotation:
    d = _obj(value, path)
    mask = mask_from_json(_get(d, "mask", path), _sub(path, "mask"))
    bbox_raw = _get(d, "bbox", path, required=False)
    bbox = _bbox_from_json(bbox_raw, _sub(path, "bbox")) if bbox_raw is not None else tight_bbox(mask)
    pose_raw = _get(d, "object_pose", path, required=False)
    diagonal = _get(d, "object_diagonal", path, required=False)
    try:
        return PartAnnotation(
            part_id=_string(_get(d, "part_id", path), _sub(path, "part_id")),
            object_id=_string(_get(d, "object_id", path), _sub(path, "object_id")),
            label=_enum(_get(d, "label", path), _LABELS, _sub(path, "label")),
            mask=mask,
            bbox=bbox,
            motion=motion_from_json(
                _get(d, "motion", path), _sub(path, "motion"), default_frame=CoordFrame.CAMERA
            ),
            object_pose=pose_from_json(pose_raw, _sub(path, "object_pose"))
            if pose_raw is not None
            else None,
            object_diagonal=_number(diagonal, _sub(path, "object_diagonal"))
            if diagonal is not None
            else None,
            coverage_ratio=_number(
                _get(d, "coverage_ratio", path, required=False, default=0.0),
                _sub(path, "coverage_ratio"),
            ),
            ignored=_boolean(
                _get(d, "ignored", path, required=False, default=False),
                _sub(path, "ignored"),
            ),
        )
    except ValueError as err:
        if isinstance(err, SchemaError):
            raise
        raise SchemaError(path, str(err)) from err


def frame_to_json(frame: Frame) -> dict:
    doc = {
        "frame_id": frame.frame_id,
        "width": frame.width,
        "height": frame.height,
        "intrinsics": _intrinsics_to_json(frame.intrinsics),
        "camera_pose": pose_to_json(frame.camera_pose),
        "parts": [_part_to_json(p) for p in frame.parts],
    }
    if frame.global_pose is not None:
        doc["global_pose"] = pose_to_json(frame.global_pose)
    return doc


def frame_from_json(value, path: str) -> Frame:
    d = _obj(value, path)
    parts = [
        _part_from_json(p, _sub(_sub(path, "parts"), i))
        for i, p in enumerate(_list(_get(d, "parts", path, required=False, default=[]), _sub(path, "parts")))
    ]
    global_raw = _get(d, "global_pose", path, required=False)
    try:
        return Frame(
            frame_id=_string(_get(d, "frame_id", path), _sub(path, "frame_id")),
            width=_integer(_get(d, "width", path), _sub(path, "width")),
            height=_integer(_get(d, "height", path), _sub(path, "height")),
            intrinsics=_intrinsics_from_json(
                _get(d, "intrinsics", path), _sub(path, "intrinsics")
            ),
            camera_pose=pose_from_json(
                _get(d, "camera_pose", path), _sub(path, "camera_pose")
            ),
            parts=tuple(parts),
            global_pose=pose_from_json(global_raw, _sub(path, "global_pose"))
            if global_raw is not None
            else None,
        )
    except ValueError as err:
        if isinstance(err, SchemaError):
            raise
        raise SchemaError(path, str(err)) from err


def save_annotations(path, frames: Sequence[Frame], split: str = "val") -> None:
    save_json(
        path,
        {
            "schema_version": SCHEMA_VERSION,
            "split": split,
            "frames": [frame_to_json(f) for f in sorted(frames, key=lambda f: f.frame_id)],
        },
    )


def load_annotations(path) -> tuple[list[Frame], str]:
    doc = _obj(load_json(path), "annotations")
    _check_version(doc, "annotations")
    split = _string(_get(doc, "split", "annotations", required=False, default="val"), "annotations.split")
    frames = [
        frame_from_json(f, _sub("frames", i))
        for i, f in enumerate(_list(_get(doc, "frames", "annotations"), "frames"))
    ]
    return frames, split


# --- predictions ------------------------------------------------------------

_SCOPE_FRAME = {
    PoseScope.NONE: CoordFrame.CAMERA,
    PoseScope.GLOBAL: CoordFrame.SCENE,
    PoseScope.PER_PART: CoordFrame.OBJECT,
}


def _instance_to_json(inst: PredictionInstance) -> dict:
    doc = {
        "label": inst.label.value,
        "confidence": inst.confidence,
        "mask": mask_to_json(inst.mask),
        "bbox": list(inst.bbox.as_tuple()),
        "motion": motion_to_json(inst.motion, include_frame=False),
        "pose_scope": inst.pose_scope.value,
    }
    if inst.predicted_pose is not None:
        doc["pose"] = pose_to_json(inst.predicted_pose)
    return doc


def _instance_from_json(value, path: str) -> PredictionInstance:
    d = _obj(value, path)
    scope = _enum(
        _get(d, "pose_scope", path, required=False, default=PoseScope.NONE.value),
        _SCOPES,
        _sub(path, "pose_scope"),
    )
    mask = mask_from_json(_get(d, "mask", path), _sub(path, "mask"))
    bbox_raw = _get(d, "bbox", path, required=False)
    pose_raw = _get(d, "pose", path, required=False)
    if scope is not PoseScope.NONE and pose_raw is None:
        raise SchemaError(_sub(path, "pose"), f"pose_scope {scope.value!r} requires a pose")
    try:
        return PredictionInstance(
            label=_enum(_get(d, "label", path), _LABELS, _sub(path, "label")),
            confidence=_number(_get(d, "confidence", path), _sub(path, "confidence")),
            mask=mask,
            bbox=_bbox_from_json(bbox_raw, _sub(path, "bbox"))
            if bbox_raw is not None
            else tight_bbox(mask),
            motion=motion_from_json(
                _get(d, "motion", path),
                _sub(path, "motion"),
                default_frame=_SCOPE_FRAME[scope],
            ),
            predicted_pose=pose_from_json(pose_raw, _sub(path, "pose"))
            if pose_raw is not None
            else None,
            pose_scope=scope,
        )
    except ValueError as err:
        if isinstance(err, SchemaError):
            raise
        raise SchemaError(path, str(err)) from err


def save_predictions(path, frames: Sequence[PredictionFrame]) -> None:
    save_json(
        path,
        {
            "schema_version": SCHEMA_VERSION,
            "frames": [
                {
                    "frame_id": f.frame_id,
                    "instances": [_instance_to_json(i) for i in f.instances],
                }
                for f in sorted(frames, key=lambda f: f.frame_id)
            ],
        },
    )


def load_predictions(path) -> list[PredictionFrame]:
    doc = _obj(load_json(path), "predictions")
    _check_version(doc, "predictions")
    frames = []
    for i, f in enumerate(_list(_get(doc, "frames", "predictions"), "frames")):
        fpath = _sub("frames", i)
        d = _obj(f, fpath)
        instances = [
            _instance_from_json(inst, _sub(_sub(fpath, "instances"), j))
            for j, inst in enumerate(
                _list(_get(d, "instances", fpath, required=False, default=[]), _sub(fpath, "instances"))
            )
        ]
        frames.append(
            PredictionFrame(
                frame_id=_string(_get(d, "frame_id", fpath), _sub(fpath, "frame_id")),
                instances=tuple(instances),
            )
        )
    return frames


# --- scenes and trajectories -------------------------------------------------

def _mesh_to_json(mesh: np.ndarray) -> dict:
    # Triangle soup: deduplicate vertices for a compact vertices/faces layout.
    flat = mesh.reshape(-1, 3)
    vertices, inverse = np.unique(flat.round(12), axis=0, return_inverse=True)
    faces = inverse.reshape(-1, 3)
    return {
        "vertices": [[float(v) for v in vert] for vert in vertices],
        "faces": [[int(i) for i in face] for face in faces],
    }


def _mesh_from_json(value, path: str) -> np.ndarray:
    d = _obj(value, path)
    verts_raw = _list(_get(d, "vertices", path), _sub(path, "vertices"))
    vertices = np.array(
        [_vector(v, 3, _sub(_sub(path, "vertices"), i)) for i, v in enumerate(verts_raw)]
    )
    faces_raw = _list(_get(d, "faces", path), _sub(path, "faces"))
    triangles = []
    for i, face in enumerate(faces_raw):
        idx = _list(face, _sub(_sub(path, "faces"), i))
        if len(idx) != 3:
            raise SchemaError(_sub(_sub(path, "faces"), i), "faces must be triangles")
        for j in idx:
            _integer(j, _sub(_sub(path, "faces"), i))
            if not 0 <= j < len(vertices):
                raise SchemaError(_sub(_sub(path, "faces"), i), f"vertex index {j} out of range")
        triangles.append(vertices[idx])
    if not triangles:
        raise SchemaError(path, "mesh has no faces")
    return np.stack(triangles)


def _obb_from_json(value, path: str) -> OrientedBoundingBox:
    d = _obj(value, path)
    try:
        return OrientedBoundingBox(
            center=_vector(_get(d, "center", path), 3, _sub(path, "center")),
            half_extents=_vector(_get(d, "half_extents", path), 3, _sub(path, "half_extents")),
            basis=_vector(_get(d, "basis", path), 9, _sub(path, "basis")).reshape(3, 3),
        )
    except ValueError as err:
        if isinstance(err, SchemaError):
            raise
        raise SchemaError(path, str(err)) from err


def save_scenes(path, scenes: Sequence[tuple[str, SceneModel]]) -> None:
    docs = []
    for scene_id, scene in scenes:
        objects = []
        for obj in scene.objects:
            objects.append(
                {
                    "object_id": obj.object_id,
                    "obb": {
                        "center": [float(v) for v in obj.obb.center],
                        "half_extents": [float(v) for v in obj.obb.half_extents],
                        "basis": [float(v) for v in obj.obb.basis.ravel()],
                    },
                    "parts": [
                        {
                            "part_id": p.part_id,
                            "label": p.label.value,
                            "motion": motion_to_json(p.motion),
                            "mesh": _mesh_to_json(p.mesh),
                        }
                        for p in obj.parts
                    ],
                }
            )
        doc = {"scene_id": scene_id, "objects": objects}
        if scene.static_geometry is not None:
            doc["static_geometry"] = _mesh_to_json(scene.static_geometry)
        docs.append(doc)
    save_json(path, {"schema_version": SCHEMA_VERSION, "scenes": docs})


def load_scenes(path) -> list[tuple[str, SceneModel]]:
    doc = _obj(load_json(path), "scenes")
    _check_version(doc, "scenes")
    out = []
    for i, s in enumerate(_list(_get(doc, "scenes", "scenes"), "scenes")):
        spath = _sub("scenes", i)
        d = _obj(s, spath)
        scene_id = _string(_get(d, "scene_id", spath), _sub(spath, "scene_id"))
        objects = []
        for j, o in enumerate(_list(_get(d, "objects", spath), _sub(spath, "objects"))):
            opath = _sub(_sub(spath, "objects"), j)
            od = _obj(o, opath)
            parts = []
            for k, p in enumerate(_list(_get(od, "parts", opath), _sub(opath, "parts"))):
                ppath = _sub(_sub(opath, "parts"), k)
                pd = _obj(p, ppath)
                try:
                    parts.append(
                        PartModel(
                            part_id=_string(_get(pd, "part_id", ppath), _sub(ppath, "part_id")),
                            label=_enum(_get(pd, "label", ppath), _LABELS, _sub(ppath, "label")),
                            mesh=_mesh_from_json(_get(pd, "mesh", ppath), _sub(ppath, "mesh")),
                            motion=motion_from_json(
                                _get(pd, "motion", ppath),
                                _sub(ppath, "motion"),
                                default_frame=CoordFrame.OBJECT,
                            ),
                        )
                    )
                except ValueError as err:
                    if isinstance(err, SchemaError):
                        raise
                    raise SchemaError(ppath, str(err)) from err
            try:
                objects.append(
                    ObjectModel(
                        object_id=_string(_get(od, "object_id", opath), _sub(opath, "object_id")),
                        obb=_obb_from_json(_get(od, "obb", opath), _sub(opath, "obb")),
                        parts=tuple(parts),
                    )
                )
            except ValueError as err:
                if isinstance(err, SchemaError):
                    raise
                raise SchemaError(opath, str(err)) from err
        static_raw = _get(d, "static_geometry", spath, required=False)
        try:
            scene = SceneModel(
                objects=tuple(objects),
                static_geometry=_mesh_from_json(static_raw, _sub(spath, "static_geometry"))
                if static_raw is not None
                else None,
            )
        except ValueError as err:
            if isinstance(err, SchemaError):
                raise
            raise SchemaError(spath, str(err)) from err
        out.append((scene_id, scene))
    return out


def save_trajectories(path, trajectories: Sequence[tuple[str, CameraTrajectory]]) -> None:
    docs = []
    for scene_id, trajectory in trajectories:
        docs.append(
            {
                "scene_id": scene_id,
                "views": [
                    {
                        "frame_id": v.frame_id,
                        "width": v.width,
                        "height": v.height,
                        "intrinsics": _intrinsics_to_json(v.intrinsics),
                        "camera_pose": pose_to_json(v.camera_pose),
                    }
                    for v in trajectory.views
                ],
            }
        )
    save_json(path, {"schema_version": SCHEMA_VERSION, "trajectories": docs})


def load_trajectories(path) -> list[tuple[str, CameraTrajectory]]:
    doc = _obj(load_json(path), "trajectories")
    _check_version(doc, "trajectories")
    out = []
    for i, t in enumerate(_list(_get(doc, "trajectories", "trajectories"), "trajectories")):
        tpath = _sub("trajectories", i)
        d = _obj(t, tpath)
        scene_id = _string(_get(d, "scene_id", tpath), _sub(tpath, "scene_id"))
        views = []
        for j, v in enumerate(_list(_get(d, "views", tpath), _sub(tpath, "views"))):
            vpath = _sub(_sub(tpath, "views"), j)
            vd = _obj(v, vpath)
            try:
                views.append(
                    CameraView(
                        frame_id=_string(_get(vd, "frame_id", vpath), _sub(vpath, "frame_id")),
                        camera_pose=pose_from_json(
                            _get(vd, "camera_pose", vpath), _sub(vpath, "camera_pose")
                        ),
                        intrinsics=_intrinsics_from_json(
                            _get(vd, "intrinsics", vpath), _sub(vpath, "intrinsics")
                        ),
                        width=_integer(_get(vd, "width", vpath), _sub(vpath, "width")),
                        height=_integer(_get(vd, "height", vpath), _sub(vpath, "height")),
                    )
                )
            except ValueError as err:
                if isinstance(err, SchemaError):
                    raise
                raise SchemaError(vpath, str(err)) from err
        out.append((scene_id, CameraTrajectory(views=tuple(views))))
    return out


# --- synthetic generator spec -------------------------------------------------

def load_synth_spec(path) -> SynthSpec:
    doc = _obj(load_json(path), "synth")
    _check_version(doc, "synth")
    kwargs = {}
    perturbation = {}
    pair_fields = {"objects_per_scene", "parts_per_object", "camera_distance"}
    for key, value in doc.items():
        if key == "schema_version":
            continue
        if key == "perturbation":
            pd = _obj(value, "synth.perturbation")
            for pkey, pvalue in pd.items():
                if pkey == "confidence_range":
                    pvalue = tuple(_vector(pvalue, 2, _sub("synth.perturbation", pkey)))
                perturbation[pkey] = pvalue
            continue
        if key in pair_fields:
            value = tuple(_vector(value, 2, _sub("synth", key)))
            if key in ("objects_per_scene", "parts_per_object"):
                value = (int(value[0]), int(value[1]))
        if key == "label_mix":
            value = tuple(_vector(value, 3, "synth.label_mix"))
        kwargs[key] = value
    try:
        if perturbation:
            kwargs["perturbation"] = PerturbationSpec(**perturbation)
        return SynthSpec(**kwargs)
    except (TypeError, ValueError) as err:
        raise SchemaError("synth", str(err)) from err


# --- loss pairs -----------------------------------------------------------------

def _probs_grid(value, path: str) -> np.ndarray:
    if isinstance(value, dict):
        return mask_from_json(value, path).decode().astype(np.float64)
    rows = _list(value, path)
    grid = []
    for i, row in enumerate(rows):
        cols = _list(row, _sub(path, i))
        grid.append([_number(v, _sub(_sub(path, i), j)) for j, v in enumerate(cols)])
    arr = np.array(grid, dtype=np.float64)
    if arr.ndim != 2 or arr.size == 0:
        raise SchemaError(path, "expected a non-empty 2-d grid")
    return arr


def _loss_prediction(value, path: str) -> LossPrediction:
    d = _obj(value, path)
    class_probs = np.array(
        [
            _number(v, _sub(_sub(path, "class_probs"), i))
            for i, v in enumerate(_list(_get(d, "class_probs", path), _sub(path, "class_probs")))
        ]
    )
    origin_raw = _get(d, "origin", path, required=False)
    pose_raw = _get(d, "pose", path, required=False)
    return LossPrediction(
        class_probs=class_probs,
        mask_probs=_probs_grid(_get(d, "mask_probs", path), _sub(path, "mask_probs")),
        type_probs=_vector(_get(d, "type_probs", path), 2, _sub(path, "type_probs")),
        axis=_vector(_get(d, "axis", path), 3, _sub(path, "axis")),
        origin=_vector(origin_raw, 3, _sub(path, "origin")) if origin_raw is not None else None,
        pose=_vector(pose_raw, 12, _sub(path, "pose")) if pose_raw is not None else None,
    )


def _loss_target(value, path: str) -> LossTarget:
    d = _obj(value, path)
    motion_type = _enum(_get(d, "motion_type", path), _MOTION_TYPES, _sub(path, "motion_type"))
    origin_raw = _get(d, "origin", path, required=motion_type is MotionType.REVOLUTE)
    pose_raw = _get(d, "pose", path, required=False)
    return LossTarget(
        label_index=_integer(_get(d, "label_index", path), _sub(path, "label_index")),
        mask=_probs_grid(_get(d, "mask", path), _sub(path, "mask")),
        motion_type=motion_type,
        axis=_vector(_get(d, "axis", path), 3, _sub(path, "axis")),
        origin=_vector(origin_raw, 3, _sub(path, "origin")) if origin_raw is not None else None,
        pose=_vector(pose_raw, 12, _sub(path, "pose")) if pose_raw is not None else None,
    )


def load_loss_pairs(path) -> tuple[list, list, LossWeights]:
    """Read a loss-evaluation file: matched pred/gt pairs, unmatched
    predictions, and optional weight overrides."""
    doc = _obj(load_json(path), "pairs")
    _check_version(doc, "pairs")
    matched = []
    for i, pair in enumerate(
        _list(_get(doc, "matched", "pairs", required=False, default=[]), "matched")
    ):
        ppath = _sub("matched", i)
        d = _obj(pair, ppath)
        matched.append(
            (
                _loss_prediction(_get(d, "pred", ppath), _sub(ppath, "pred")),
                _loss_target(_get(d, "gt", ppath), _sub(ppath, "gt")),
            )
        )
    unmatched = []
    for i, pred in enumerate(
        _list(_get(doc, "unmatched", "pairs", required=False, default=[]), "unmatched")
    ):
        upath = _sub("unmatched", i)
        d = _obj(pred, upath)
        unmatched.append(
            np.array(
                [
                    _number(v, _sub(_sub(upath, "class_probs"), i))
                    for i, v in enumerate(
                        _list(_get(d, "class_probs", upath), _sub(upath, "class_probs"))
                    )
                ]
            )
        )
    weights_raw = _get(doc, "weights", "pairs", required=False)
    try:
        weights = LossWeights(**weights_raw) if weights_raw else LossWeights()
    except (TypeError, ValueError) as err:
        raise SchemaError("pairs.weights", str(err)) from err
    return matched, unmatched, weights
