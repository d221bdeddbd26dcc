"""Spatial and temporal evaluation metrics.

Per-frame region similarity and contour accuracy, their sequence averages,
the bidirectional-foreground combination over predicted and ground-truth
temporal spans, and the temporal-grounding / highlight-detection / dense-
captioning metrics used by the benchmark harness.

Scores are computed in [0, 1]; reports convert to percent.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from . import _kernels
from .core import BinaryMask, Masklet, TemporalSegment, loc, rle_decode
from .errors import (
    ClipGridMismatch,
    GeometryMismatch,
    InvalidInput,
    NoGroundTruthForeground,
)


def default_contour_tolerance(geometry) -> int:
    """Boundary match tolerance: 0.8% of the image diagonal, at least 1 px."""
    return max(1, int(round(0.008 * geometry.diagonal)))


def region_j(pred: BinaryMask, gt: BinaryMask) -> float:
    """Region similarity: intersection over union. Both empty scores 1."""
    if pred.geometry != gt.geometry:
        raise GeometryMismatch(f"{pred.geometry} vs {gt.geometry}")
    if pred.is_empty and gt.is_empty:
        return 1.0
    inter, union = _kernels.mask_overlap(rle_decode(pred), rle_decode(gt))
    return inter / union


def contour_f(pred: BinaryMask, gt: BinaryMask, tolerance_px: Optional[int] = None) -> float:
    """Contour accuracy: F-measure of boundary precision and recall.

    A boundary pixel matches when a counterpart lies within ``tolerance_px``
    Chebyshev distance. Both boundaries empty scores 1; exactly one empty
    scores 0.
    """
    if pred.geometry != gt.geometry:
        raise GeometryMismatch(f"{pred.geometry} vs {gt.geometry}")
    if tolerance_px is None:
        tolerance_px = default_contour_tolerance(pred.geometry)
    if tolerance_px < 0:
        raise InvalidInput(f"tolerance must be >= 0, got {tolerance_px}")
    if pred.is_empty and gt.is_empty:
        return 1.0
    if pred.is_empty or gt.is_empty:
        return 0.0
    pred_boundary = _kernels.boundary_map(rle_decode(pred))
    gt_boundary = _kernels.boundary_map(rle_decode(gt))
    pred_matched, pred_total, gt_matched, gt_total = _kernels.boundary_match_counts(
        pred_boundary, gt_boundary, int(tolerance_px)
    )
    precision = pred_matched / pred_total
    recall = gt_matched / gt_total
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


@dataclass(frozen=True)
class FrameScore:
    j: float
    f: float

    @property
    def jf(self) -> float:
        return (self.j + self.f) / 2


@dataclass(frozen=True)
class SequenceScore:
    """Mean per-frame scores over an evaluated frame set."""

    j: float
    f: float

    @property
    def jf(self) -> float:
        return (self.j + self.f) / 2


def frame_score(
    pred: Optional[BinaryMask], gt: Optional[BinaryMask], tolerance_px: Optional[int] = None
) -> FrameScore:
    """Score one frame; a missing mask counts as empty.

    Both empty (object absent and correctly not predicted) scores j = f = 1;
    exactly one empty scores j = f = 0.
    """
    pred_empty = pred is None or pred.is_empty
    gt_empty = gt is None or gt.is_empty
    if pred_empty and gt_empty:
        return FrameScore(1.0, 1.0)
    if pred_empty or gt_empty:
        return FrameScore(0.0, 0.0)
    return FrameScore(region_j(pred, gt), contour_f(pred, gt, tolerance_px))


def jf_sequence(
    pred: Masklet,
    gt: Masklet,
    frame_set: Iterable[int],
    tolerance_px: Optional[int] = None,
) -> SequenceScore:
    """Mean J and F over a frame set; frames absent from a masklet are empty."""
    frames = sorted(set(int(f) for f in frame_set))
    if not frames:
        raise InvalidInput("frame_set must be nonempty")
    js, fs = [], []
    for index in frames:
        score = frame_score(pred.frames.get(index), gt.frames.get(index), tolerance_px)
        js.append(score.j)
        fs.append(score.f)
    return SequenceScore(float(np.mean(js)), float(np.mean(fs)))


@dataclass(frozen=True)
class BiForeBreakdown:
    """The four components and the combined value.

    j_p/f_p are sequence means over the predicted masklet's temporal span,
    j_g/f_g over the ground truth's. The value is
    (j_p+f_p)(j_g+f_g) / ((j_p+f_p)+(j_g+f_g)), which equals the harmonic
    mean of the two span-level J&F scores; 0 when the denominator is 0.
    """

    j_p: float
    f_p: float
    j_g: float
    f_g: float

    @property
    def value(self) -> float:
        return bi_fore_value(self.j_p, self.f_p, self.j_g, self.f_g)

    @property
    def jf_p(self) -> float:
        return (self.j_p + self.f_p) / 2

    @property
    def jf_g(self) -> float:
        return (self.j_g + self.f_g) / 2


def bi_fore_value(j_p: float, f_p: float, j_g: float, f_g: float) -> float:
    """Combine the four components. Homogeneous: works on [0,1] or percents."""
    pred_side = j_p + f_p
    gt_side = j_g + f_g
    if pred_side + gt_side <= 0:
        return 0.0
    return (pred_side * gt_side) / (pred_side + gt_side)


def bi_fore_jf(pred: Masklet, gt: Masklet, tolerance_px: Optional[int] = None) -> BiForeBreakdown:
    """Bidirectional foreground J&F of a prediction against ground truth.

    Scores the pair over both temporal spans: frames inside loc(pred) give
    j_p/f_p, frames inside loc(gt) give j_g/f_g. A prediction with no
    foreground anywhere scores j_p = f_p = 0; ground truth with no
    foreground cannot be scored.
    """
    gt_span = loc(gt)
    if gt_span is None:
        raise NoGroundTruthForeground(f"masklet {gt.video_id} has no foreground")
    gt_score = jf_sequence(pred, gt, range(gt_span[0], gt_span[1] + 1), tolerance_px)
    pred_span = loc(pred)
    if pred_span is None:
        return BiForeBreakdown(0.0, 0.0, gt_score.j, gt_score.f)
    pred_score = jf_sequence(pred, gt, range(pred_span[0], pred_span[1] + 1), tolerance_px)
    return BiForeBreakdown(pred_score.j, pred_score.f, gt_score.j, gt_score.f)


def t_iou(a: TemporalSegment, b: TemporalSegment) -> float:
    """Intersection over union of two temporal segments."""
    inter = min(a.end_s, b.end_s) - max(a.start_s, b.start_s)
    if inter <= 0:
        return 0.0
    union = (a.end_s - a.start_s) + (b.end_s - b.start_s) - inter
    return inter / union


def recall_at(
    preds: Mapping[str, Optional[TemporalSegment]],
    gts: Mapping[str, TemporalSegment],
    threshold: float,
) -> float:
    """Fraction of queries whose top-1 prediction reaches tIoU >= threshold.

    Queries come from ``gts``; a missing or None prediction is a miss.
    """
    if not gts:
        raise InvalidInput("empty query set")
    hits = 0
    for qid, gt_segment in gts.items():
        pred = preds.get(qid)
        if pred is not None and t_iou(pred, gt_segment) >= threshold:
            hits += 1
    return hits / len(gts)


def mean_iou(
    preds: Mapping[str, Optional[TemporalSegment]],
    gts: Mapping[str, TemporalSegment],
) -> float:
    """Mean per-query tIoU; a missing prediction contributes 0."""
    if not gts:
        raise InvalidInput("empty query set")
    total = 0.0
    for qid in sorted(gts):
        pred = preds.get(qid)
        if pred is not None:
            total += t_iou(pred, gts[qid])
    return total / len(gts)


def _ranked_clips(scores: Sequence[float]) -> List[int]:
    # descending score, ties broken by clip index ascending
    return sorted(range(len(scores)), key=lambda i: (-float(scores[i]), i))


def average_precision(scores: Sequence[float], positives: Sequence[int]) -> float:
    """AP of a score ranking against binary labels; 0 when nothing is positive."""
    if len(scores) != len(positives):
        raise ClipGridMismatch(f"{len(scores)} scores vs {len(positives)} labels")
    order = _ranked_clips(scores)
    n_pos = sum(1 for p in positives if p)
    if n_pos == 0:
        return 0.0
    hits = 0
    precision_sum = 0.0
    for rank, clip in enumerate(order, start=1):
        if positives[clip]:
            hits += 1
            precision_sum += hits / rank
    return precision_sum / n_pos


def vhd_scores(
    saliency: Mapping[str, Sequence[float]],
    gt_highlights: Mapping[str, Sequence[int]],
    gt_saliency_labels: Mapping[str, Sequence[int]],
) -> Dict[str, float]:
    """Highlight-detection scores over a fixed clip grid.

    HIT@1 is the fraction of queries whose top-scored clip carries the
    highest ground-truth saliency label; mAP averages per-query AP of the
    score ranking against the binary highlight labels. Score ties break by
    clip index ascending.
    """
    if not gt_highlights:
        raise InvalidInput("empty query set")
    hit = 0
    ap_total = 0.0
    for qid in sorted(gt_highlights):
        scores = saliency.get(qid)
        highlights = gt_highlights[qid]
        labels = gt_saliency_labels[qid]
        if len(labels) != len(highlights):
            raise ClipGridMismatch(f"query {qid}: label grids disagree")
        if scores is None:
            continue  # unanswered query scores zero on both metrics
        if len(scores) != len(highlights):
            raise ClipGridMismatch(f"query {qid}: {len(scores)} scores vs {len(highlights)} clips")
        if not all(np.isfinite(s) for s in scores):
            raise InvalidInput(f"query {qid}: non-finite saliency score")
        top_clip = _ranked_clips(scores)[0]
        if labels[top_clip] == max(labels):
            hit += 1
        ap_total += average_precision(scores, highlights)
    n = len(gt_highlights)
    return {"mAP": ap_total / n, "HIT@1": hit / n}


def dvc_temporal_f1(
    pred_segments: Sequence[TemporalSegment],
    gt_segments: Sequence[TemporalSegment],
    thresholds: Sequence[float] = (0.3, 0.5, 0.7, 0.9),
) -> float:
    """Mean-over-thresholds F1 of greedy one-to-one segment matching.

    Pairs are matched in descending tIoU order; at each threshold precision
    counts matched predictions and recall matched ground truths.
    """
    if not pred_segments or not gt_segments:
        return 0.0
    pairs = []
    for pi, p in enumerate(pred_segments):
        for gi, g in enumerate(gt_segments):
            iou = t_iou(p, g)
            if iou > 0:
                pairs.append((iou, pi, gi))
    pairs.sort(key=lambda x: (-x[0], x[1], x[2]))
    f1_values = []
    for threshold in thresholds:
        used_pred, used_gt = set(), set()
        matched = 0
        for iou, pi, gi in pairs:
            if iou < threshold:
                break
            if pi in used_pred or gi in used_gt:
                continue
            used_pred.add(pi)
            used_gt.add(gi)
            matched += 1
        precision = matched / len(pred_segments)
        recall = matched / len(gt_segments)
        f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
        f1_values.append(f1)
    return float(np.mean(f1_values))


FOREGROUND_BUCKETS = ("0-20%", "20-60%", "60-100%")


def foreground_fraction(gt: Masklet, frame_count: int) -> float:
    """Length of the ground-truth span relative to the video length."""
    span = loc(gt)
    if span is None:
        return 0.0
    return (span[1] - span[0] + 1) / frame_count


def bucket_for_fraction(fraction: float) -> str:
    """Bucket boundaries are closed on the upper end: [0,.2], (.2,.6], (.6,1]."""
    if fraction <= 0.2:
        return FOREGROUND_BUCKETS[0]
    if fraction <= 0.6:
        return FOREGROUND_BUCKETS[1]
    return FOREGROUND_BUCKETS[2]


def bucket_by_foreground_fraction(
    items: Iterable[Tuple[str, Masklet, int]],
) -> Dict[str, List[str]]:
    """Group (item_id, gt_masklet, frame_count) triples into span-fraction buckets."""
    groups: Dict[str, List[str]] = {name: [] for name in FOREGROUND_BUCKETS}
    for item_id, gt, frame_count in items:
        groups[bucket_for_fraction(foreground_fraction(gt, frame_count))].append(item_id)
    return groups
