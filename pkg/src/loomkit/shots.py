"""Shot partition: content-cut detection, kernel change-point segmentation,
boundary fusion, and shot filtering.

The change-point stage minimizes total within-segment scatter of a linear
kernel over the feature series, with a model-selection penalty
``w * m * (log(n/m) + 1)`` on the number of change points m.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import _kernels
from .core import Shot, ShotOrigin
from .errors import InvalidFeatures, InvalidInput

FEATURE_SOURCES = ("hsv_mean", "external")


@dataclass(frozen=True, eq=False)
class FrameFeatureSeries:
    """Per-frame feature vectors, one row per frame."""

    features: np.ndarray
    sample_fps: float
    source: str = "external"

    def __post_init__(self):
        features = np.asarray(self.features, dtype=np.float64)
        if features.ndim != 2 or features.shape[0] < 1 or features.shape[1] < 1:
            raise InvalidFeatures(f"expected (n, d) features, got shape {features.shape}")
        if not np.all(np.isfinite(features)):
            raise InvalidFeatures("features contain non-finite values")
        if self.sample_fps <= 0:
            raise InvalidInput(f"sample_fps must be positive, got {self.sample_fps}")
        if self.source not in FEATURE_SOURCES:
            raise InvalidInput(f"unknown feature source {self.source!r}")
        object.__setattr__(self, "features", features)

    @property
    def n_frames(self) -> int:
        return self.features.shape[0]


@dataclass(frozen=True)
class ChangePointResult:
    boundaries: Tuple[int, ...]
    objective: float
    num_segments: int


@dataclass(frozen=True)
class FilterOutcome:
    """Result of shot filtering: the merged shots, or a discard verdict."""

    shots: Tuple[Shot, ...]
    discard_video: bool


def detect_content_cuts(series: FrameFeatureSeries, threshold: float) -> List[int]:
    """Indices i >= 1 whose mean absolute per-channel difference to frame i-1
    exceeds the threshold (features on a 0-255 per-channel scale)."""
    if threshold <= 0:
        raise InvalidInput(f"threshold must be positive, got {threshold}")
    x = series.features
    if x.shape[0] < 2:
        return []
    deltas = np.mean(np.abs(np.diff(x, axis=0)), axis=1)
    return [int(i) + 1 for i in np.flatnonzero(deltas > threshold)]


def l2_normalize_rows(features: np.ndarray) -> np.ndarray:
    """Row-wise L2 normalization; all-zero rows stay zero."""
    x = np.asarray(features, dtype=np.float64)
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    return x / norms


def _penalty_curve(n: int, max_changes: int) -> np.ndarray:
    g = np.zeros(max_changes + 1)
    for m in range(1, max_changes + 1):
        g[m] = m * (math.log(n / m) + 1)
    return g


def kts_objectives(series: FrameFeatureSeries, max_change_points: int) -> np.ndarray:
    """Minimal total within-segment scatter for every change-point count
    0..max_change_points (the raw dynamic-program curve, no penalty)."""
    x = series.features
    n = x.shape[0]
    if n < 2:
        raise InvalidInput(f"need at least 2 frames, got {n}")
    if not 0 <= max_change_points < n:
        raise InvalidInput(f"max_change_points must be in [0, {n - 1}], got {max_change_points}")
    gram = x @ x.T
    scatter = _kernels.kts_scatter_table(gram)
    objectives, _ = _kernels.kts_dp(scatter, max_change_points)
    return objectives


def kts_segment(
    series: FrameFeatureSeries,
    max_change_points: int,
    penalty_weight: float,
) -> ChangePointResult:
    """Optimal change-point segmentation of the feature series.

    Picks the change-point count m in 0..max_change_points minimizing
    scatter(m) + penalty_weight * g(m), then returns the globally optimal
    boundaries for that m. Ties in the model selection go to the smaller m
    (within a 1e-12 relative slack, so exact-tie float residue cannot
    produce spurious splits). The reported objective excludes the penalty.
    """
    x = series.features
    n = x.shape[0]
    if n < 2:
        raise InvalidInput(f"need at least 2 frames, got {n}")
    if not 0 <= max_change_points < n:
        raise InvalidInput(f"max_change_points must be in [0, {n - 1}], got {max_change_points}")
    if penalty_weight < 0:
        raise InvalidInput(f"penalty_weight must be >= 0, got {penalty_weight}")
    gram = x @ x.T
    scatter = _kernels.kts_scatter_table(gram)
    objectives, parents = _kernels.kts_dp(scatter, max_change_points)
    costs = objectives + penalty_weight * _penalty_curve(n, max_change_points)
    slack = 1e-12 * max(1.0, float(np.min(costs)))
    best_m = int(np.flatnonzero(costs <= np.min(costs) + slack)[0])

    boundaries = []
    position = n
    for k in range(best_m, 0, -1):
        position = int(parents[k, position])
        boundaries.append(position)
    boundaries.reverse()
    return ChangePointResult(
        boundaries=tuple(boundaries),
        objective=float(objectives[best_m]),
        num_segments=best_m + 1,
    )


def fuse_boundaries(
    content_cuts: Sequence[int],
    kts_cuts: Sequence[int],
    min_gap_frames: int,
) -> List[int]:
    """Merge the two boundary lists into one sorted, deduplicated list.

    Content-cut boundaries take precedence: a boundary within
    ``min_gap_frames`` of an already-accepted one is dropped, content cuts
    are admitted first, and equal-priority conflicts keep the smaller index.
    """
    if min_gap_frames < 0:
        raise InvalidInput(f"min_gap_frames must be >= 0, got {min_gap_frames}")
    accepted: List[int] = []

    def conflicts(candidate: int) -> bool:
        return any(abs(candidate - b) <= min_gap_frames for b in accepted)

    for cut in sorted(set(int(c) for c in content_cuts)):
        if not conflicts(cut):
            accepted.append(cut)
    for cut in sorted(set(int(c) for c in kts_cuts)):
        if not conflicts(cut):
            accepted.append(cut)
    return sorted(accepted)


def boundaries_to_shots(
    n_frames: int,
    boundaries: Sequence[int],
    origin: ShotOrigin = ShotOrigin.fused,
) -> List[Shot]:
    """Tile [0, n_frames) into shots split at the given interior boundaries."""
    if n_frames < 1:
        raise InvalidInput("video must have at least one frame")
    cuts = sorted(set(int(b) for b in boundaries))
    if any(b <= 0 or b >= n_frames for b in cuts):
        raise InvalidInput(f"boundaries must lie strictly inside (0, {n_frames})")
    edges = [0] + cuts + [n_frames]
    return [Shot(a, b, origin) for a, b in zip(edges[:-1], edges[1:])]


def filter_shots(
    shots: Sequence[Shot],
    fps: float,
    min_len_s: float = 1.0,
    max_shot_count: int = 10,
) -> FilterOutcome:
    """Merge sub-minimum shots, then discard videos with too many shots.

    Repeatedly merges the shortest offending shot (ties: smallest index)
    into its shorter adjacent neighbor (ties: the preceding shot) until
    every shot is at least ``min_len_s`` long or one shot remains. Videos
    whose surviving count exceeds ``max_shot_count`` are flagged for
    discard.
    """
    if not shots:
        raise InvalidInput("empty shot list")
    current = list(shots)
    for left, right in zip(current[:-1], current[1:]):
        if left.end_frame != right.start_frame:
            raise InvalidInput("shots must tile the video contiguously")

    min_len_frames = min_len_s * fps
    while len(current) > 1:
        offenders = [i for i, s in enumerate(current) if s.length < min_len_frames]
        if not offenders:
            break
        index = min(offenders, key=lambda i: (current[i].length, i))
        if index == 0:
            neighbor = 1
        elif index == len(current) - 1:
            neighbor = index - 1
        else:
            before, after = current[index - 1], current[index + 1]
            neighbor = index - 1 if before.length <= after.length else index + 1
        lo, hi = sorted((index, neighbor))
        merged = Shot(current[lo].start_frame, current[hi].end_frame, ShotOrigin.merged)
        current[lo : hi + 1] = [merged]

    return FilterOutcome(shots=tuple(current), discard_video=len(current) > max_shot_count)


@dataclass(frozen=True)
class PartitionResult:
    shots: Tuple[Shot, ...]
    discard_video: bool
    content_cuts: Tuple[int, ...]
    kts_result: Optional[ChangePointResult]


def partition_video(
    series: FrameFeatureSeries,
    threshold: float = 27.0,
    max_change_points: int = 24,
    penalty_weight: float = 1.0,
    min_gap_frames: int = 0,
    min_shot_s: float = 1.0,
    max_shots: int = 10,
) -> PartitionResult:
    """Full partition stage: cuts + change points -> fused shots -> filtering.

    Change-point detection runs on L2-normalized feature rows so the scatter
    scale is comparable across feature sources; content cuts see the raw
    0-255 scale.
    """
    n = series.n_frames
    content = detect_content_cuts(series, threshold)
    kts_result = None
    kts_cuts: List[int] = []
    if n >= 2 and max_change_points > 0:
        normalized = FrameFeatureSeries(
            l2_normalize_rows(series.features), series.sample_fps, series.source
        )
        kts_result = kts_segment(normalized, min(max_change_points, n - 1), penalty_weight)
        kts_cuts = list(kts_result.boundaries)
    fused = fuse_boundaries(content, kts_cuts, min_gap_frames)
    shots = boundaries_to_shots(n, fused)
    outcome = filter_shots(shots, series.sample_fps, min_shot_s, max_shots)
    return PartitionResult(
        shots=outcome.shots,
        discard_video=outcome.discard_video,
        content_cuts=tuple(content),
        kts_result=kts_result,
    )
