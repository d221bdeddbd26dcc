"""loomkit: shot partition, tracklet annotation, and spatial-temporal
evaluation for video datasets."""

from ._kernels import BACKEND as KERNEL_BACKEND
from .core import (
    ActionAnnotation,
    BinaryMask,
    FrameGeometry,
    Masklet,
    Shot,
    ShotOrigin,
    TemporalSegment,
    Tracklet,
    VideoMeta,
    VideoRecord,
    empty_mask,
    full_mask,
    loc,
    rle_decode,
    rle_encode,
    span_to_segment,
)
from .metrics import (
    BiForeBreakdown,
    FrameScore,
    SequenceScore,
    bi_fore_jf,
    bi_fore_value,
    contour_f,
    dvc_temporal_f1,
    jf_sequence,
    mean_iou,
    recall_at,
    region_j,
    t_iou,
    vhd_scores,
)

__version__ = "0.1.0"

__all__ = [
    "ActionAnnotation",
    "BinaryMask",
    "BiForeBreakdown",
    "FrameGeometry",
    "FrameScore",
    "KERNEL_BACKEND",
    "Masklet",
    "SequenceScore",
    "Shot",
    "ShotOrigin",
    "TemporalSegment",
    "Tracklet",
    "VideoMeta",
    "VideoRecord",
    "bi_fore_jf",
    "bi_fore_value",
    "contour_f",
    "dvc_temporal_f1",
    "empty_mask",
    "full_mask",
    "jf_sequence",
    "loc",
    "mean_iou",
    "recall_at",
    "region_j",
    "rle_decode",
    "rle_encode",
    "span_to_segment",
    "t_iou",
    "vhd_scores",
]
