"""Core domain types: masks, masklets, shots, segments, tracklets.

All types are immutable values after construction and safe to share between
workers. Binary masks are stored run-length encoded in row-major scan order;
the canonical encoding always starts with the zero-run (possibly of length
zero) so equal bitmaps serialize to identical byte sequences.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from types import MappingProxyType
from typing import Mapping, Optional, Tuple

import numpy as np

from .errors import InvalidInput, MalformedRle

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class FrameGeometry:
    """Pixel dimensions of a video frame."""

    height: int
    width: int

    def __post_init__(self):
        if self.height < 1 or self.width < 1:
            raise InvalidInput(f"geometry must be at least 1x1, got {self.height}x{self.width}")

    @property
    def area(self) -> int:
        return self.height * self.width

    @property
    def diagonal(self) -> float:
        return float(np.hypot(self.height, self.width))


@dataclass(frozen=True)
class VideoMeta:
    video_id: str
    fps: float
    frame_count: int
    duration_s: float
    geometry: FrameGeometry

    def __post_init__(self):
        if self.fps <= 0:
            raise InvalidInput(f"fps must be positive, got {self.fps}")
        if self.frame_count < 1:
            raise InvalidInput(f"frame_count must be >= 1, got {self.frame_count}")
        if abs(self.duration_s - self.frame_count / self.fps) > 1.0 / self.fps:
            raise InvalidInput(
                f"duration {self.duration_s}s inconsistent with "
                f"{self.frame_count} frames at {self.fps} fps"
            )


@dataclass(frozen=True)
class BinaryMask:
    """Single-frame binary mask, run-length encoded.

    ``rle`` holds alternating run lengths of zeros and ones in row-major scan
    order, starting with the zero-run. Only the leading zero-run may have
    length zero.
    """

    geometry: FrameGeometry
    rle: Tuple[int, ...]

    def __post_init__(self):
        runs = tuple(int(r) for r in self.rle)
        object.__setattr__(self, "rle", runs)
        if not runs:
            raise MalformedRle("empty run list")
        if runs[0] < 0 or any(r < 1 for r in runs[1:]):
            raise MalformedRle(f"non-canonical runs {runs}")
        if sum(runs) != self.geometry.area:
            raise MalformedRle(
                f"runs sum to {sum(runs)}, expected {self.geometry.area} "
                f"for {self.geometry.height}x{self.geometry.width}"
            )

    @property
    def is_empty(self) -> bool:
        """True when the mask contains no foreground pixel."""
        return len(self.rle) == 1

    @property
    def foreground_area(self) -> int:
        return sum(self.rle[1::2])


@dataclass(frozen=True, eq=False)
class Masklet:
    """Per-frame binary masks for one object across a video.

    ``frames`` is a sparse map from frame index to mask. A stored all-zero
    mask means the object was judged absent at that frame; an unstored frame
    was simply not annotated.
    """

    video_id: str
    frames: Mapping[int, BinaryMask]

    def __post_init__(self):
        frames = dict(sorted((int(k), v) for k, v in self.frames.items()))
        geometries = {m.geometry for m in frames.values()}
        if len(geometries) > 1:
            raise InvalidInput(f"masklet mixes geometries: {geometries}")
        if any(k < 0 for k in frames):
            raise InvalidInput("negative frame index in masklet")
        object.__setattr__(self, "frames", MappingProxyType(frames))

    def __eq__(self, other):
        if not isinstance(other, Masklet):
            return NotImplemented
        return self.video_id == other.video_id and dict(self.frames) == dict(other.frames)

    @property
    def geometry(self) -> Optional[FrameGeometry]:
        for mask in self.frames.values():
            return mask.geometry
        return None

    def nonempty_frames(self) -> Tuple[int, ...]:
        return tuple(k for k, m in self.frames.items() if not m.is_empty)


class ShotOrigin(str, Enum):
    content_cut = "content_cut"
    kts = "kts"
    fused = "fused"
    merged = "merged"


@dataclass(frozen=True)
class Shot:
    """Half-open frame interval [start_frame, end_frame)."""

    start_frame: int
    end_frame: int
    origin: ShotOrigin = ShotOrigin.fused

    def __post_init__(self):
        if not self.start_frame < self.end_frame:
            raise InvalidInput(f"empty shot [{self.start_frame}, {self.end_frame})")
        object.__setattr__(self, "origin", ShotOrigin(self.origin))

    @property
    def length(self) -> int:
        return self.end_frame - self.start_frame

    def length_s(self, fps: float) -> float:
        return self.length / fps

    def contains(self, frame_index: int) -> bool:
        return self.start_frame <= frame_index < self.end_frame


@dataclass(frozen=True)
class TemporalSegment:
    """Half-open interval in seconds."""

    start_s: float
    end_s: float

    def __post_init__(self):
        if not (0 <= self.start_s < self.end_s):
            raise InvalidInput(f"bad segment [{self.start_s}, {self.end_s})")

    @property
    def length(self) -> float:
        return self.end_s - self.start_s


@dataclass(frozen=True, eq=False)
class Tracklet:
    """A main character: appearance description + masklet + shot coverage."""

    character_id: str
    appearance_description: str
    masklet: Masklet
    covered_shots: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "covered_shots", frozenset(int(i) for i in self.covered_shots))

    def __eq__(self, other):
        if not isinstance(other, Tracklet):
            return NotImplemented
        return (
            self.character_id == other.character_id
            and self.appearance_description == other.appearance_description
            and self.masklet == other.masklet
            and self.covered_shots == other.covered_shots
        )


@dataclass(frozen=True)
class ActionAnnotation:
    """A timestamp-aligned action description."""

    segment: TemporalSegment
    text: str


@dataclass(frozen=True, eq=False)
class VideoRecord:
    """One video's full annotation: meta, shots, tracklets, actions."""

    meta: VideoMeta
    shots: Tuple[Shot, ...]
    tracklets: Tuple[Tracklet, ...] = ()
    actions: Tuple[ActionAnnotation, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "shots", tuple(self.shots))
        object.__setattr__(self, "tracklets", tuple(self.tracklets))
        object.__setattr__(self, "actions", tuple(self.actions))
        n_shots = len(self.shots)
        for t in self.tracklets:
            if any(i < 0 or i >= n_shots for i in t.covered_shots):
                raise InvalidInput(
                    f"tracklet {t.character_id} covers shot outside 0..{n_shots - 1}"
                )
            for frame in t.masklet.nonempty_frames():
                if not any(self.shots[i].contains(frame) for i in t.covered_shots):
                    raise InvalidInput(
                        f"tracklet {t.character_id} has a nonempty mask at frame "
                        f"{frame} outside its covered shots"
                    )

    def __eq__(self, other):
        if not isinstance(other, VideoRecord):
            return NotImplemented
        return (
            self.meta == other.meta
            and self.shots == other.shots
            and self.tracklets == other.tracklets
            and self.actions == other.actions
        )


def rle_encode(bitmap) -> BinaryMask:
    """Encode a row-major bit grid into the canonical RLE mask.

    Any nonzero entry counts as foreground. The inverse of :func:`rle_decode`.
    """
    grid = np.asarray(bitmap)
    if grid.ndim != 2:
        raise InvalidInput(f"expected a 2-D grid, got shape {grid.shape}")
    geometry = FrameGeometry(grid.shape[0], grid.shape[1])
    flat = (grid != 0).ravel()
    boundaries = np.flatnonzero(np.diff(flat))
    edges = np.concatenate(([0], boundaries + 1, [flat.size]))
    runs = np.diff(edges).tolist()
    if flat[0]:
        runs = [0] + runs
    return BinaryMask(geometry, tuple(int(r) for r in runs))


def rle_decode(mask: BinaryMask) -> np.ndarray:
    """Decode a mask to a uint8 row-major bit grid."""
    runs = mask.rle
    if sum(runs) != mask.geometry.area:
        raise MalformedRle("run sum does not match geometry")
    out = np.zeros(mask.geometry.area, dtype=np.uint8)
    pos = 0
    value = 0
    for run in runs:
        if value:
            out[pos : pos + run] = 1
        pos += run
        value ^= 1
    return out.reshape(mask.geometry.height, mask.geometry.width)


def empty_mask(geometry: FrameGeometry) -> BinaryMask:
    return BinaryMask(geometry, (geometry.area,))


def full_mask(geometry: FrameGeometry) -> BinaryMask:
    return BinaryMask(geometry, (0, geometry.area))


def loc(masklet: Masklet) -> Optional[Tuple[int, int]]:
    """Temporal span of a masklet: the contiguous hull of nonempty frames.

    Returns the inclusive (first, last) frame indices of frames holding a
    nonempty mask, or None when the masklet has no foreground anywhere.
    Absent and all-zero frames inside the hull are part of the span.
    """
    nonempty = masklet.nonempty_frames()
    if not nonempty:
        return None
    return (min(nonempty), max(nonempty))


def span_to_segment(span: Tuple[int, int], fps: float) -> TemporalSegment:
    """Convert an inclusive frame span to a half-open segment in seconds."""
    first, last = span
    return TemporalSegment(first / fps, (last + 1) / fps)
