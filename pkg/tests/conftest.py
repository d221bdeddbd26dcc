import numpy as np
import pytest

from loomkit.core import FrameGeometry, Masklet, rle_encode


def grid_mask(rows):
    """Build a BinaryMask from an iterable of 0/1 rows."""
    return rle_encode(np.asarray(rows, dtype=np.uint8))


def random_bit_grid(rng, height, width, style=None):
    """Random masks with varied structure: noise, rectangles, blobs, empties."""
    style = style if style is not None else rng.integers(0, 4)
    grid = np.zeros((height, width), dtype=np.uint8)
    if style == 0:  # bernoulli noise
        p = rng.uniform(0.05, 0.6)
        grid = (rng.random((height, width)) < p).astype(np.uint8)
    elif style == 1:  # solid rectangle
        y1 = int(rng.integers(0, height))
        y2 = int(rng.integers(y1 + 1, height + 1))
        x1 = int(rng.integers(0, width))
        x2 = int(rng.integers(x1 + 1, width + 1))
        grid[y1:y2, x1:x2] = 1
    elif style == 2:  # round blob
        cy, cx = rng.uniform(0, height), rng.uniform(0, width)
        radius = rng.uniform(1, max(height, width) / 2)
        ys, xs = np.mgrid[0:height, 0:width]
        grid = (((ys - cy) ** 2 + (xs - cx) ** 2) <= radius**2).astype(np.uint8)
    # style 3: stays empty
    return grid


def masklet_from_grids(video_id, grids_by_frame):
    return Masklet(video_id, {f: rle_encode(g) for f, g in grids_by_frame.items()})


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


# ---------------------------------------------------------------------------
# Independent oracles (deliberately different computation paths from loomkit)
# ---------------------------------------------------------------------------


def region_j_oracle(pred_grid, gt_grid):
    """IoU by explicit coordinate-set counting."""
    pred = {(y, x) for y, x in zip(*np.nonzero(pred_grid))}
    gt = {(y, x) for y, x in zip(*np.nonzero(gt_grid))}
    if not pred and not gt:
        return 1.0
    return len(pred & gt) / len(pred | gt)


def boundary_set_oracle(grid):
    """Foreground pixels with a background or out-of-frame 4-neighbor,
    found by per-pixel set lookups."""
    height, width = grid.shape
    fg = {(y, x) for y, x in zip(*np.nonzero(grid))}
    boundary = set()
    for y, x in fg:
        for dy, dx in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            ny, nx = y + dy, x + dx
            if not (0 <= ny < height and 0 <= nx < width) or (ny, nx) not in fg:
                boundary.add((y, x))
                break
    return boundary


def contour_f_oracle(pred_grid, gt_grid, tolerance):
    """F-measure via exhaustive pairwise Chebyshev distances between the
    two boundary point sets."""
    pred_boundary = sorted(boundary_set_oracle(pred_grid))
    gt_boundary = sorted(boundary_set_oracle(gt_grid))
    if not pred_boundary and not gt_boundary:
        return 1.0
    if not pred_boundary or not gt_boundary:
        return 0.0
    pc = np.array(pred_boundary)
    gc = np.array(gt_boundary)
    dy = np.abs(pc[:, 0:1] - gc[:, 0].reshape(1, -1))
    dx = np.abs(pc[:, 1:2] - gc[:, 1].reshape(1, -1))
    chebyshev = np.maximum(dy, dx)
    precision = float(np.mean(chebyshev.min(axis=1) <= tolerance))
    recall = float(np.mean(chebyshev.min(axis=0) <= tolerance))
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def kts_scatter_oracle(x, start, end):
    """Within-segment scatter by the direct definition: sum of squared
    distances to the segment mean."""
    segment = x[start:end]
    mean = segment.mean(axis=0)
    return float(np.sum((segment - mean) ** 2))


def kts_exhaustive_oracle(x, num_changes):
    """Best objective over every placement of num_changes interior
    boundaries, by full enumeration."""
    from itertools import combinations

    n = x.shape[0]
    cache = {}

    def scatter(a, b):
        if (a, b) not in cache:
            cache[(a, b)] = kts_scatter_oracle(x, a, b)
        return cache[(a, b)]

    best = np.inf
    best_boundaries = None
    for cuts in combinations(range(1, n), num_changes):
        edges = (0,) + cuts + (n,)
        total = sum(scatter(a, b) for a, b in zip(edges[:-1], edges[1:]))
        if total < best:
            best = total
            best_boundaries = cuts
    return best, best_boundaries


def ring_and_rect_grids(canvas=32, top=5, left=5, height=20, width=18):
    """A solid rectangle and its one-pixel outline on one canvas.

    The pair has exactly J = perimeter/area and F = 1 (boundaries align
    pixel-for-pixel), which for the 20x18 default gives J = 72/360 = 0.2
    and a per-frame J&F of exactly 0.6.
    """
    gt = np.zeros((canvas, canvas), dtype=np.uint8)
    gt[top : top + height, left : left + width] = 1
    ring = gt.copy()
    ring[top + 1 : top + height - 1, left + 1 : left + width - 1] = 0
    return ring, gt
