"""Visual-prompt assembly and model-output parsing for action annotation.

Covers frame-ID stamping, instance-ID mask overlays, the action-description
prompt template, the ``frames A-B: text`` output grammar, and the
slow/fast visual token budget arithmetic.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from .core import BinaryMask, TemporalSegment, rle_decode
from .errors import CoverageViolation, InvalidConfig, InvalidGeometry, InvalidInput
from .raster import GLYPH_HEIGHT, as_image, digits_bitmap, text_extent

DEFAULT_SAMPLE_FPS = 2.0
STAMP_HEIGHT_FRACTION = 0.08
LABEL_HEIGHT_FRACTION = 0.06
MAX_FAST_FRAMES = 128
CONTEXT_TOKEN_LIMIT = 8192

# fixed per-instance tint palette (RGB)
INSTANCE_PALETTE = (
    (230, 25, 75),
    (60, 180, 75),
    (255, 225, 25),
    (0, 130, 200),
    (245, 130, 48),
    (145, 30, 180),
    (70, 240, 240),
    (240, 50, 230),
    (210, 245, 60),
    (250, 190, 190),
)


def sample_frame_ids(duration_s: float, sample_fps: float = DEFAULT_SAMPLE_FPS) -> List[Tuple[int, float]]:
    """Dense 1-based frame IDs with their sample times, at least one."""
    if duration_s <= 0:
        raise InvalidInput(f"duration must be positive, got {duration_s}")
    if sample_fps <= 0:
        raise InvalidInput(f"sample_fps must be positive, got {sample_fps}")
    count = max(1, math.floor(duration_s * sample_fps))
    return [(i, (i - 1) / sample_fps) for i in range(1, count + 1)]


def frame_id_to_time(frame_id: int, sample_fps: float = DEFAULT_SAMPLE_FPS) -> float:
    """Sample time of a 1-based frame ID: id 1 maps to t=0."""
    if frame_id < 1:
        raise InvalidInput(f"frame ids start at 1, got {frame_id}")
    return (frame_id - 1) / sample_fps


def _stamp_scale(height: int) -> int:
    return max(1, int(round(STAMP_HEIGHT_FRACTION * height)) // GLYPH_HEIGHT)


def stamp_frame_id(image: np.ndarray, frame_id: int) -> np.ndarray:
    """Print the frame ID into the bottom-right corner, white on black.

    The stamp height tracks 8% of the frame height. Raises when the stamp
    region cannot fit inside the image.
    """
    img = as_image(image)
    if frame_id < 1:
        raise InvalidInput(f"frame ids start at 1, got {frame_id}")
    height, width = img.shape[:2]
    scale = _stamp_scale(height)
    text = str(frame_id)
    text_h, text_w = text_extent(text, scale)
    pad = scale
    region_h, region_w = text_h + 2 * pad, text_w + 2 * pad
    if region_h > height or region_w > width:
        raise InvalidGeometry(
            f"stamp region {region_h}x{region_w} does not fit a {height}x{width} frame"
        )
    out = img.copy()
    y0, x0 = height - region_h, width - region_w
    out[y0:, x0:] = 0
    bitmap = digits_bitmap(text, scale)
    patch = out[y0 + pad : y0 + pad + text_h, x0 + pad : x0 + pad + text_w]
    patch[bitmap] = 255
    return out


def overlay_instance_id(image: np.ndarray, mask: BinaryMask, instance_id: int) -> np.ndarray:
    """Tint the masked pixels with the instance's palette color (50% blend)
    and print the instance ID at the mask centroid. Empty masks are a no-op."""
    img = as_image(image)
    if (mask.geometry.height, mask.geometry.width) != img.shape[:2]:
        raise InvalidGeometry(
            f"mask {mask.geometry.height}x{mask.geometry.width} vs "
            f"image {img.shape[0]}x{img.shape[1]}"
        )
    out = img.copy()
    if mask.is_empty:
        return out
    bits = rle_decode(mask).astype(bool)
    color = np.array(INSTANCE_PALETTE[instance_id % len(INSTANCE_PALETTE)], dtype=np.uint16)
    out[bits] = ((out[bits].astype(np.uint16) + color) // 2).astype(np.uint8)

    ys, xs = np.nonzero(bits)
    cy, cx = int(round(ys.mean())), int(round(xs.mean()))
    height, width = img.shape[:2]
    scale = max(1, int(round(LABEL_HEIGHT_FRACTION * height)) // GLYPH_HEIGHT)
    text = str(instance_id)
    text_h, text_w = text_extent(text, scale)
    pad = scale
    box_h, box_w = text_h + 2 * pad, text_w + 2 * pad
    if box_h > height or box_w > width:
        return out  # frame too small for a legible label; tint alone suffices
    y0 = min(max(cy - box_h // 2, 0), height - box_h)
    x0 = min(max(cx - box_w // 2, 0), width - box_w)
    out[y0 : y0 + box_h, x0 : x0 + box_w] = 0
    bitmap = digits_bitmap(text, scale)
    patch = out[y0 + pad : y0 + pad + text_h, x0 + pad : x0 + pad + text_w]
    patch[bitmap] = 255
    return out


_PROMPT_TEMPLATE = """You annotate the actions of the marked main character in one video shot.
Every frame you see carries two visual marks: a numeric frame ID printed in
the bottom-right corner, and a colored instance ID tinted onto the main
character's mask.

Shot context: {context}

Frame Range Division:
- Split the frame IDs into consecutive, non-overlapping ranges, one range per
  distinct action.
- Ranges start at frame 1, end at the last sampled frame, and leave no gaps.

Description Content:
- Describe only what the marked character is doing within each range.
- Include interactions with visible objects or people.
- Ignore the background, camera motion, and unmarked people.

Writing Style:
- One plain sentence per range, present tense.
- Name the motion precisely; avoid filler such as "can be seen" or "appears to".

Output Format:
- One line per range, exactly: frames A-B: description
- No commentary before or after the lines.

Example output:
frames 1-8: walks across the room toward the window
frames 9-15: opens the window and leans outside

Number of sampled frames in this shot: {count}
"""


def build_action_prompt(shot_context: str, num_sampled_frames: int) -> str:
    """Instantiate the action-annotation prompt; byte-stable for fixed inputs."""
    if num_sampled_frames < 1:
        raise InvalidInput(f"need at least one sampled frame, got {num_sampled_frames}")
    return _PROMPT_TEMPLATE.format(context=shot_context, count=num_sampled_frames)


@dataclass(frozen=True)
class ActionDescription:
    """An action aligned to an inclusive range of sampled frame IDs."""

    frame_id_start: int
    frame_id_end: int
    text: str
    segment: TemporalSegment

    def __post_init__(self):
        if not 1 <= self.frame_id_start <= self.frame_id_end:
            raise InvalidInput(
                f"bad frame range {self.frame_id_start}-{self.frame_id_end}"
            )
        if not self.text.strip():
            raise InvalidInput("description text must be nonempty")

    @classmethod
    def from_frame_ids(
        cls, start: int, end: int, text: str, sample_fps: float = DEFAULT_SAMPLE_FPS
    ) -> "ActionDescription":
        segment = TemporalSegment(
            frame_id_to_time(start, sample_fps),
            frame_id_to_time(end, sample_fps) + 1.0 / sample_fps,
        )
        return cls(start, end, text, segment)


_LINE_RE = re.compile(r"^\s*frames\s+(\d+)\s*[-–—]\s*(\d+)\s*:\s*(.+?)\s*$", re.IGNORECASE)


def parse_action_output(
    text: str, max_frame_id: int, sample_fps: float = DEFAULT_SAMPLE_FPS
) -> List[ActionDescription]:
    """Parse ``frames A-B: description`` lines into validated descriptions.

    The ranges must be sorted, non-overlapping, inside 1..max_frame_id, and
    jointly cover it with no gap; lines not matching the grammar are skipped.
    """
    if max_frame_id < 1:
        raise InvalidInput(f"max_frame_id must be >= 1, got {max_frame_id}")
    ranges: List[Tuple[int, int, str]] = []
    for line in text.splitlines():
        match = _LINE_RE.match(line)
        if match:
            ranges.append((int(match.group(1)), int(match.group(2)), match.group(3)))
    if not ranges:
        raise CoverageViolation("no 'frames A-B: description' lines found")

    expected_start = 1
    for start, end, _ in ranges:
        if start > end or start < 1 or end > max_frame_id:
            raise CoverageViolation(
                f"range {start}-{end} falls outside 1..{max_frame_id}", (start, end)
            )
        if start > expected_start:
            raise CoverageViolation(
                f"gap at frame {expected_start} before range {start}-{end}", (start, end)
            )
        if start < expected_start:
            raise CoverageViolation(
                f"range {start}-{end} overlaps an earlier range", (start, end)
            )
        expected_start = end + 1
    if expected_start != max_frame_id + 1:
        raise CoverageViolation(
            f"coverage stops at frame {expected_start - 1}, expected {max_frame_id}",
            (expected_start - 1, max_frame_id),
        )
    return [
        ActionDescription.from_frame_ids(start, end, body, sample_fps)
        for start, end, body in ranges
    ]


def serialize_action_output(descriptions: Sequence[ActionDescription]) -> str:
    """Render descriptions back into the canonical output lines."""
    return "\n".join(
        f"frames {d.frame_id_start}-{d.frame_id_end}: {d.text}" for d in descriptions
    )


@dataclass(frozen=True)
class TokenBudget:
    """Visual-token accounting for the slow/fast two-stream input."""

    n_slow_frames: int
    slow_per_frame: int
    n_fast_frames: int
    downsample_ratio: int
    slow_total: int
    fast_total: int
    id_text_overhead: int
    grand_total: int

    @property
    def fast_per_frame(self) -> int:
        return self.slow_per_frame // (self.downsample_ratio**2)

    def exceeds_limit(self, limit: int = CONTEXT_TOKEN_LIMIT) -> bool:
        return self.grand_total > limit


def token_budget(
    n_slow: int = 5,
    slow_per_frame: int = 256,
    n_fast: int = 0,
    ratio: int = 4,
    per_frame_id_overhead: int = 0,
) -> TokenBudget:
    """Compute totals for the two token streams plus interleaved-ID overhead.

    The squared downsampling ratio must divide the per-frame slow token
    count, and the fast stream is capped at 128 frames.
    """
    if min(n_slow, slow_per_frame, n_fast, per_frame_id_overhead) < 0 or ratio < 1:
        raise InvalidConfig("token budget inputs must be nonnegative (ratio >= 1)")
    if slow_per_frame % (ratio**2) != 0:
        raise InvalidConfig(f"{ratio}^2 does not divide {slow_per_frame} tokens per frame")
    if n_fast > MAX_FAST_FRAMES:
        raise InvalidConfig(f"at most {MAX_FAST_FRAMES} fast frames, got {n_fast}")
    slow_total = n_slow * slow_per_frame
    fast_total = n_fast * (slow_per_frame // ratio**2)
    id_overhead = n_fast * per_frame_id_overhead
    return TokenBudget(
        n_slow_frames=n_slow,
        slow_per_frame=slow_per_frame,
        n_fast_frames=n_fast,
        downsample_ratio=ratio,
        slow_total=slow_total,
        fast_total=fast_total,
        id_text_overhead=id_overhead,
        grand_total=slow_total + fast_total + id_overhead,
    )
