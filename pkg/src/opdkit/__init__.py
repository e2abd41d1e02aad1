"""Openable-part detection toolkit.

Data model, dataset-construction pipeline, motion-aware detection metrics,
pose and consistency metrics, and reference loss math -- everything needed
to build, validate, and score openable-part datasets and predictions without
a neural network.
"""

from .core import (
    AOCategory,
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
    bbox_iou,
    mask_iou,
    rle_decode,
    rle_encode,
    tight_bbox,
)
from .geometry import (
    Intrinsics,
    OrientedBoundingBox,
    Quaternion,
    RigidPose,
    apply_pose_to_motion,
    axis_angle_deg,
    compose_pose,
    derive_object_pose,
    invert_pose,
    origin_error,
    quat_roundtrip,
    rotation_about_axis,
    rotation_geodesic_deg,
    sanitize_rotation,
    translation_error,
)
from .losses import (
    LossPrediction,
    LossTarget,
    LossWeights,
    bce_loss,
    ce_loss,
    dice_loss,
    hungarian_match,
    matching_cost,
    smooth_l1,
    total_loss,
)
from .metrics import (
    ConsistencyReport,
    EvalReport,
    MatchRecord,
    average_precision,
    consistency_report,
    evaluate,
    match_frame,
    motion_flags,
    no_ao_accuracy,
    pose_metrics,
    prediction_consistency_report,
)
from .pipeline import (
    CameraTrajectory,
    CameraView,
    DatasetStats,
    ObjectModel,
    PartModel,
    SceneModel,
    build_frame,
    classify_frame_ao,
    dataset_stats,
    project_point,
    rasterize_labels,
)
from .synth import PerturbationSpec, SynthResult, SynthSpec, generate

__version__ = "0.1.0"
