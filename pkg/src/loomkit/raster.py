"""Minimal raster support: 8-bit RGB buffers, a bitmap digit font, HSV means.

Images are numpy uint8 arrays of shape (height, width, 3). Rendering is
fully deterministic; the digit font is a built-in 3x5 bitmap scaled by
integer factors.
"""

from __future__ import annotations

import io
from pathlib import Path
from typing import Tuple

import numpy as np

from .errors import InvalidInput

# 3x5 digit glyphs, rows top to bottom
_DIGIT_ROWS = {
    "0": ("111", "101", "101", "101", "111"),
    "1": ("010", "110", "010", "010", "111"),
    "2": ("111", "001", "111", "100", "111"),
    "3": ("111", "001", "111", "001", "111"),
    "4": ("101", "101", "111", "001", "001"),
    "5": ("111", "100", "111", "001", "111"),
    "6": ("111", "100", "111", "101", "111"),
    "7": ("111", "001", "010", "010", "010"),
    "8": ("111", "101", "111", "101", "111"),
    "9": ("111", "101", "111", "001", "111"),
}

GLYPH_HEIGHT = 5
GLYPH_WIDTH = 3


def as_image(array) -> np.ndarray:
    img = np.asarray(array)
    if img.ndim != 3 or img.shape[2] != 3 or img.dtype != np.uint8:
        raise InvalidInput(f"expected (H, W, 3) uint8 image, got {img.shape} {img.dtype}")
    if img.shape[0] < 1 or img.shape[1] < 1:
        raise InvalidInput("image must be nonempty")
    return img


def digits_bitmap(text: str, scale: int = 1) -> np.ndarray:
    """Render a digit string as a bool bitmap with 1-cell gaps, scaled."""
    if not text or any(ch not in _DIGIT_ROWS for ch in text):
        raise InvalidInput(f"not a digit string: {text!r}")
    height = GLYPH_HEIGHT
    width = len(text) * GLYPH_WIDTH + (len(text) - 1)
    bitmap = np.zeros((height, width), dtype=bool)
    x = 0
    for ch in text:
        glyph = _DIGIT_ROWS[ch]
        for row in range(GLYPH_HEIGHT):
            for col in range(GLYPH_WIDTH):
                if glyph[row][col] == "1":
                    bitmap[row, x + col] = True
        x += GLYPH_WIDTH + 1
    if scale > 1:
        bitmap = np.repeat(np.repeat(bitmap, scale, axis=0), scale, axis=1)
    return bitmap


def text_extent(text: str, scale: int = 1) -> Tuple[int, int]:
    """(height, width) of the rendered digit string."""
    width = len(text) * GLYPH_WIDTH + (len(text) - 1)
    return GLYPH_HEIGHT * scale, width * scale


def rgb_to_hsv_255(image: np.ndarray) -> np.ndarray:
    """Vectorized RGB -> HSV with every channel on a 0-255 scale."""
    img = as_image(image).astype(np.float64) / 255.0
    r, g, b = img[..., 0], img[..., 1], img[..., 2]
    maxc = np.max(img, axis=2)
    minc = np.min(img, axis=2)
    delta = maxc - minc
    h = np.zeros_like(maxc)
    nonzero = delta > 0
    rmax = nonzero & (maxc == r)
    gmax = nonzero & ~rmax & (maxc == g)
    bmax = nonzero & ~rmax & ~gmax
    h[rmax] = ((g - b)[rmax] / delta[rmax]) % 6
    h[gmax] = (b - r)[gmax] / delta[gmax] + 2
    h[bmax] = (r - g)[bmax] / delta[bmax] + 4
    h = h / 6.0
    s = np.where(maxc > 0, delta / np.where(maxc > 0, maxc, 1), 0.0)
    return np.stack([h * 255.0, s * 255.0, maxc * 255.0], axis=2)


def hsv_mean(image: np.ndarray) -> np.ndarray:
    """Per-channel mean of the HSV representation: a 3-vector in 0-255."""
    return rgb_to_hsv_255(image).reshape(-1, 3).mean(axis=0)


def to_png_bytes(image: np.ndarray) -> bytes:
    from PIL import Image

    buffer = io.BytesIO()
    Image.fromarray(as_image(image), mode="RGB").save(buffer, format="PNG")
    return buffer.getvalue()


def load_image(path) -> np.ndarray:
    from PIL import Image

    with Image.open(Path(path)) as img:
        return np.asarray(img.convert("RGB"), dtype=np.uint8)
