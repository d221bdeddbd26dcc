import numpy as np
import pytest

from loomkit.core import FrameGeometry, Masklet, TemporalSegment, empty_mask, rle_encode
from loomkit.errors import (
    ClipGridMismatch,
    GeometryMismatch,
    InvalidInput,
    NoGroundTruthForeground,
)
from loomkit.metrics import (
    BiForeBreakdown,
    average_precision,
    bi_fore_jf,
    bi_fore_value,
    bucket_for_fraction,
    bucket_by_foreground_fraction,
    contour_f,
    default_contour_tolerance,
    dvc_temporal_f1,
    frame_score,
    jf_sequence,
    mean_iou,
    recall_at,
    region_j,
    t_iou,
    vhd_scores,
)

from conftest import (
    contour_f_oracle,
    grid_mask,
    masklet_from_grids,
    random_bit_grid,
    region_j_oracle,
    ring_and_rect_grids,
)


class TestRegionJ:
    def test_identical_nonempty(self):
        mask = grid_mask([[1, 1], [0, 0]])
        assert region_j(mask, mask) == 1.0

    def test_disjoint(self):
        a = grid_mask([[1, 0], [0, 0]])
        b = grid_mask([[0, 0], [0, 1]])
        assert region_j(a, b) == 0.0

    def test_overlapping_squares(self):
        # two 10x10 squares overlapping on a 5x10 strip: 50 / 150
        canvas_a = np.zeros((10, 15), dtype=np.uint8)
        canvas_a[:, :10] = 1
        canvas_b = np.zeros((10, 15), dtype=np.uint8)
        canvas_b[:, 5:] = 1
        assert region_j(rle_encode(canvas_a), rle_encode(canvas_b)) == pytest.approx(1 / 3)

    def test_both_empty(self):
        geometry = FrameGeometry(3, 3)
        assert region_j(empty_mask(geometry), empty_mask(geometry)) == 1.0

    def test_geometry_mismatch(self):
        with pytest.raises(GeometryMismatch):
            region_j(empty_mask(FrameGeometry(2, 2)), empty_mask(FrameGeometry(3, 3)))

    def test_matches_oracle_on_random_masks(self, rng):
        for _ in range(100):
            h = int(rng.integers(2, 65))
            w = int(rng.integers(2, 65))
            a = random_bit_grid(rng, h, w)
            b = random_bit_grid(rng, h, w)
            got = region_j(rle_encode(a), rle_encode(b))
            assert got == pytest.approx(region_j_oracle(a, b), abs=0)


class TestContourF:
    def test_identical(self):
        mask = grid_mask([[0, 1, 1], [0, 1, 1], [0, 0, 0]])
        assert contour_f(mask, mask, 1) == 1.0

    def test_one_empty(self):
        geometry = FrameGeometry(3, 3)
        nonempty = grid_mask([[1, 0, 0], [0, 0, 0], [0, 0, 0]])
        assert contour_f(empty_mask(geometry), nonempty, 1) == 0.0
        assert contour_f(nonempty, empty_mask(geometry), 1) == 0.0

    def test_both_empty(self):
        geometry = FrameGeometry(3, 3)
        assert contour_f(empty_mask(geometry), empty_mask(geometry), 1) == 1.0

    def test_unit_square_shifts(self):
        base = np.zeros((12, 12), dtype=np.uint8)
        base[3, 3] = 1
        shifted1 = np.zeros((12, 12), dtype=np.uint8)
        shifted1[3, 4] = 1
        shifted5 = np.zeros((12, 12), dtype=np.uint8)
        shifted5[3, 8] = 1
        assert contour_f(rle_encode(base), rle_encode(shifted1), 1) == 1.0
        got = contour_f(rle_encode(base), rle_encode(shifted5), 1)
        assert got == pytest.approx(contour_f_oracle(base, shifted5, 1), abs=1e-12)
        assert got == 0.0

    def test_default_tolerance(self):
        assert default_contour_tolerance(FrameGeometry(64, 64)) == 1
        assert default_contour_tolerance(FrameGeometry(480, 854)) == 8

    def test_matches_oracle_on_random_masks(self, rng):
        for _ in range(100):
            h = int(rng.integers(2, 65))
            w = int(rng.integers(2, 65))
            a = random_bit_grid(rng, h, w)
            b = random_bit_grid(rng, h, w)
            tolerance = int(rng.integers(1, 4))
            got = contour_f(rle_encode(a), rle_encode(b), tolerance)
            want = contour_f_oracle(a, b, tolerance)
            assert got == pytest.approx(want, abs=1e-12)


class TestJfSequence:
    def test_perfect_prediction(self):
        masklet = masklet_from_grids("v", {i: np.eye(8, dtype=np.uint8) for i in range(5)})
        assert jf_sequence(masklet, masklet, range(5)).jf == 1.0

    def test_all_empty_scores_one(self):
        geometry = FrameGeometry(4, 4)
        pred = Masklet("v", {})
        gt = Masklet("v", {0: empty_mask(geometry)})
        assert jf_sequence(pred, gt, range(10)).jf == 1.0

    def test_background_inflation_arithmetic(self):
        # 10 frames: 5 with per-frame J&F exactly 0.6, 5 empty-empty
        ring, rect = ring_and_rect_grids()
        pred = masklet_from_grids("v", {i: ring for i in range(5)})
        gt = masklet_from_grids("v", {i: rect for i in range(5)})
        score = jf_sequence(pred, gt, range(10))
        assert score.jf == pytest.approx(0.8, abs=1e-12)

    def test_empty_frame_set_rejected(self):
        with pytest.raises(InvalidInput):
            jf_sequence(Masklet("v", {}), Masklet("v", {}), [])

    def test_frame_score_conventions(self):
        geometry = FrameGeometry(2, 2)
        assert frame_score(None, None).jf == 1.0
        assert frame_score(empty_mask(geometry), None).jf == 1.0
        full = grid_mask([[1, 1], [1, 1]])
        assert frame_score(None, full).jf == 0.0
        assert frame_score(full, empty_mask(geometry)).jf == 0.0


class TestBiFore:
    def test_table_component_quadruples(self):
        # published component tables, in percent
        assert bi_fore_value(47.0, 48.9, 25.4, 26.6) == pytest.approx(33.7, abs=0.05)
        assert bi_fore_value(58.1, 60.5, 41.1, 42.8) == pytest.approx(49.1, abs=0.05)

    def test_equal_components_identity(self, rng):
        for _ in range(100):
            x = float(rng.random())
            assert bi_fore_value(x, x, x, x) == pytest.approx(x, abs=1e-12)

    def test_harmonic_mean_identity(self, rng):
        for _ in range(1000):
            j_p, f_p, j_g, f_g = rng.random(4)
            breakdown = BiForeBreakdown(j_p, f_p, j_g, f_g)
            hm_parts = (breakdown.jf_p, breakdown.jf_g)
            if sum(hm_parts) == 0:
                expected = 0.0
            else:
                expected = 2 * hm_parts[0] * hm_parts[1] / (hm_parts[0] + hm_parts[1])
            assert breakdown.value == pytest.approx(expected, abs=1e-12)
            assert breakdown.value <= max(hm_parts) + 1e-12
            assert breakdown.value >= 0

    def test_spans_drive_components(self):
        ring, rect = ring_and_rect_grids()
        # gt foreground on frames 10..19, prediction on 15..24
        gt = masklet_from_grids("v", {i: rect for i in range(10, 20)})
        pred = masklet_from_grids("v", {i: ring for i in range(15, 25)})
        breakdown = bi_fore_jf(pred, gt)
        # over loc(pred) = 15..24: frames 15..19 score (0.2, 1.0), 20..24 (0, 0)
        assert breakdown.j_p == pytest.approx(0.1, abs=1e-12)
        assert breakdown.f_p == pytest.approx(0.5, abs=1e-12)
        # over loc(gt) = 10..19: frames 10..14 missing pred -> (0,0)
        assert breakdown.j_g == pytest.approx(0.1, abs=1e-12)
        assert breakdown.f_g == pytest.approx(0.5, abs=1e-12)

    def test_no_prediction_foreground(self):
        ring, rect = ring_and_rect_grids()
        gt = masklet_from_grids("v", {5: rect})
        pred = Masklet("v", {})
        breakdown = bi_fore_jf(pred, gt)
        assert (breakdown.j_p, breakdown.f_p) == (0.0, 0.0)
        assert breakdown.value == 0.0

    def test_no_gt_foreground_rejected(self):
        pred = masklet_from_grids("v", {0: np.ones((4, 4), dtype=np.uint8)})
        with pytest.raises(NoGroundTruthForeground):
            bi_fore_jf(pred, Masklet("v", {}))

    def test_inflation_immunity(self):
        # standard J&F inflates as the foreground span shrinks; bi-fore stays q
        ring, rect = ring_and_rect_grids()
        for n_foreground in (5, 20, 60):
            pred = masklet_from_grids("v", {i: ring for i in range(n_foreground)})
            gt = masklet_from_grids("v", {i: rect for i in range(n_foreground)})
            whole = jf_sequence(pred, gt, range(100)).jf
            expected = (n_foreground * 0.6 + (100 - n_foreground)) / 100
            assert whole == pytest.approx(expected, abs=1e-12)
            assert bi_fore_jf(pred, gt).value == pytest.approx(0.6, abs=1e-9)


class TestTemporal:
    def test_t_iou_basics(self):
        a = TemporalSegment(0, 10)
        assert t_iou(a, a) == 1.0
        assert t_iou(a, TemporalSegment(5, 15)) == pytest.approx(5 / 15)
        assert t_iou(TemporalSegment(0, 1), TemporalSegment(2, 3)) == 0.0

    def test_t_iou_symmetry(self, rng):
        for _ in range(50):
            a = TemporalSegment(*np.sort(rng.uniform(0, 100, 2)) + [0, 1e-6])
            b = TemporalSegment(*np.sort(rng.uniform(0, 100, 2)) + [0, 1e-6])
            assert t_iou(a, b) == pytest.approx(t_iou(b, a), abs=1e-15)

    def test_recall_at(self):
        gts = {"a": TemporalSegment(0, 10), "b": TemporalSegment(0, 10)}
        preds = {"a": TemporalSegment(0, 6), "b": TemporalSegment(0, 4)}
        # tIoU 0.6 and 0.4
        assert recall_at(preds, gts, 0.5) == 0.5
        assert recall_at({}, gts, 0.5) == 0.0
        assert recall_at({q: g for q, g in gts.items()}, gts, 0.5) == 1.0
        with pytest.raises(InvalidInput):
            recall_at({}, {}, 0.5)

    def test_recall_monotone_in_threshold(self, rng):
        gts, preds = {}, {}
        for i in range(30):
            qid = f"q{i}"
            gts[qid] = TemporalSegment(0, 10)
            start = float(rng.uniform(0, 9))
            preds[qid] = TemporalSegment(start, start + float(rng.uniform(0.5, 10)))
        values = [recall_at(preds, gts, thr) for thr in (0.1, 0.3, 0.5, 0.7, 0.9)]
        assert all(a >= b for a, b in zip(values[:-1], values[1:]))

    def test_mean_iou(self):
        gts = {"a": TemporalSegment(0, 10), "b": TemporalSegment(0, 10)}
        preds = {"a": TemporalSegment(0, 6), "b": TemporalSegment(0, 4)}
        assert mean_iou(preds, gts) == pytest.approx(0.5)
        assert mean_iou({}, gts) == 0.0
        assert mean_iou(gts, gts) == 1.0


class TestVhd:
    def test_hit_at_one_perfect(self):
        saliency = {"q": [0.9, 0.1, 0.5]}
        highlights = {"q": [1, 0, 1]}
        labels = {"q": [4, 0, 2]}
        scores = vhd_scores(saliency, highlights, labels)
        assert scores["HIT@1"] == 1.0

    def test_ap_by_hand(self):
        # ranking [+, -, +] by score: AP = (1/1 + 2/3) / 2
        assert average_precision([0.9, 0.8, 0.7], [1, 0, 1]) == pytest.approx(5 / 6)

    def test_tie_broken_by_clip_index(self):
        saliency = {"q": [0.5, 0.5, 0.5]}
        highlights = {"q": [0, 1, 0]}
        labels = {"q": [1, 3, 3]}
        scores = vhd_scores(saliency, highlights, labels)
        # top clip under the tie rule is clip 0, whose label 1 < max 3
        assert scores["HIT@1"] == 0.0

    def test_grid_mismatch(self):
        with pytest.raises(ClipGridMismatch):
            vhd_scores({"q": [0.5]}, {"q": [1, 0]}, {"q": [1, 0]})

    def test_map_averages_queries(self):
        saliency = {"a": [0.9, 0.8, 0.7], "b": [0.1, 0.9, 0.2]}
        highlights = {"a": [1, 0, 1], "b": [0, 1, 0]}
        labels = {"a": [2, 0, 1], "b": [0, 4, 0]}
        scores = vhd_scores(saliency, highlights, labels)
        assert scores["mAP"] == pytest.approx((5 / 6 + 1.0) / 2)


class TestDvcF1:
    def test_perfect(self):
        segments = [TemporalSegment(0, 5), TemporalSegment(5, 9)]
        assert dvc_temporal_f1(segments, segments) == 1.0

    def test_no_predictions(self):
        assert dvc_temporal_f1([], [TemporalSegment(0, 5)]) == 0.0

    def test_partial(self):
        gts = [TemporalSegment(0, 5), TemporalSegment(5, 9)]
        preds = [TemporalSegment(0, 5)]
        # P=1, R=0.5 -> F1=2/3 at every threshold
        assert dvc_temporal_f1(preds, gts) == pytest.approx(2 / 3)

    def test_greedy_one_to_one(self):
        gts = [TemporalSegment(0, 10)]
        preds = [TemporalSegment(0, 10), TemporalSegment(0, 9)]
        # only one prediction can match the single gt
        assert dvc_temporal_f1(preds, gts, thresholds=(0.5,)) == pytest.approx(2 / 3)


class TestBuckets:
    def test_boundary_rules(self):
        assert bucket_for_fraction(0.2) == "0-20%"
        assert bucket_for_fraction(0.209) == "20-60%"
        assert bucket_for_fraction(0.6) == "20-60%"
        assert bucket_for_fraction(1.0) == "60-100%"

    def test_grouping(self):
        geometry_grid = np.ones((2, 2), dtype=np.uint8)
        short = masklet_from_grids("v", {0: geometry_grid})
        long = masklet_from_grids("v", {i: geometry_grid for i in range(0, 100)})
        groups = bucket_by_foreground_fraction(
            [("short", short, 100), ("long", long, 100)]
        )
        assert groups["0-20%"] == ["short"]
        assert groups["60-100%"] == ["long"]
