import numpy as np
import pytest

from loomkit.clients import (
    DetectionBox,
    FlakyTransportClient,
    MockCaptioner,
    MockDetector,
    MockTracker,
    image_ref,
)
from loomkit.core import (
    FrameGeometry,
    Masklet,
    Shot,
    ShotOrigin,
    Tracklet,
    VideoMeta,
    VideoRecord,
    full_mask,
)
from loomkit.errors import (
    InvalidInput,
    NoPerson,
    PipelineStageError,
    UnknownTarget,
)
from loomkit.pipeline import (
    ReviewDecision,
    Verdict,
    annotate_dataset,
    annotate_video,
    apply_review_decisions,
    center_frame,
    complete_tracklet,
    coverage_of,
    longest_shot,
    merge_annotated_shots,
    pick_main_character,
)

GEOMETRY = FrameGeometry(32, 32)


def person(score, x1=4.0, y1=4.0, x2=20.0, y2=28.0, label="person"):
    return DetectionBox(x1, y1, x2, y2, score, label)


def make_video(video_id="v01", n_shots=4, shot_len=10, fps=10.0):
    frame_count = n_shots * shot_len
    meta = VideoMeta(video_id, fps, frame_count, frame_count / fps, GEOMETRY)
    shots = tuple(Shot(i * shot_len, (i + 1) * shot_len) for i in range(n_shots))
    return VideoRecord(meta, shots)


class TestSelection:
    def test_center_frame(self):
        assert center_frame(Shot(0, 1)) == 0
        assert center_frame(Shot(0, 10)) == 4
        assert center_frame(Shot(6, 9)) == 7

    def test_longest_shot(self):
        assert longest_shot([Shot(0, 5)]) == 0
        assert longest_shot([Shot(0, 5), Shot(5, 14), Shot(14, 23)]) == 1
        assert longest_shot([Shot(0, 3), Shot(3, 11), Shot(11, 13)]) == 1

    def test_longest_shot_empty(self):
        with pytest.raises(InvalidInput):
            longest_shot([])

    def test_pick_main_character(self):
        dog = DetectionBox(0, 0, 5, 5, 0.99, "dog")
        low = person(0.7)
        high = person(0.92)
        assert pick_main_character([low, high, dog]) == high

    def test_pick_no_person(self):
        with pytest.raises(NoPerson):
            pick_main_character([])
        with pytest.raises(NoPerson):
            pick_main_character([DetectionBox(0, 0, 5, 5, 0.99, "dog")])

    def test_score_floor(self):
        with pytest.raises(NoPerson):
            pick_main_character([person(0.2)])


class TestCompletion:
    def _initial(self, video_id="v01", frames=range(0, 20)):
        return Masklet(video_id, {f: full_mask(GEOMETRY) for f in frames})

    def test_already_covered_unchanged(self):
        video = make_video(n_shots=2)
        initial = self._initial(frames=range(0, 20))
        tracklet = complete_tracklet(
            video.shots, initial, "desc", MockDetector(), MockTracker({"v01": GEOMETRY})
        )
        assert tracklet.masklet == initial
        assert tracklet.covered_shots == frozenset({0, 1})

    def test_uncovered_shot_filled_by_mocks(self):
        video = make_video(n_shots=3)
        initial = self._initial(frames=range(0, 20))
        detector = MockDetector({image_ref("v01", 24): [person(0.9)]})
        tracker = MockTracker({"v01": GEOMETRY})
        tracklet = complete_tracklet(video.shots, initial, "desc", detector, tracker)
        assert tracklet.covered_shots == frozenset({0, 1, 2})
        assert set(tracklet.masklet.frames) == set(range(0, 30))

    def test_detection_miss_leaves_shot_uncovered(self):
        video = make_video(n_shots=3)
        initial = self._initial(frames=range(0, 20))
        tracklet = complete_tracklet(
            video.shots, initial, "desc", MockDetector(), MockTracker({"v01": GEOMETRY})
        )
        assert tracklet.covered_shots == frozenset({0, 1})

    def test_existing_masks_never_replaced(self):
        video = make_video(n_shots=2)
        special = Masklet(
            "v01", {5: full_mask(GEOMETRY)}
        )
        detector = MockDetector({image_ref("v01", 14): [person(0.9)]})
        tracker = MockTracker({"v01": GEOMETRY})
        tracklet = complete_tracklet(video.shots, special, "desc", detector, tracker)
        assert tracklet.masklet.frames[5] == full_mask(GEOMETRY)
        # coverage is monotone
        assert coverage_of(special, video.shots) <= tracklet.covered_shots

    def test_transport_failure_carries_shot_index(self):
        video = make_video(n_shots=3)
        initial = self._initial(frames=range(0, 20))
        flaky = FlakyTransportClient(MockDetector(), failures_remaining=99)
        with pytest.raises(PipelineStageError) as excinfo:
            complete_tracklet(
                video.shots, initial, "desc", flaky, MockTracker({"v01": GEOMETRY})
            )
        assert excinfo.value.shot_index == 2


class TestMergeShots:
    def test_no_coverage(self):
        shots = make_video(n_shots=4).shots
        assert merge_annotated_shots(shots, set()) == list(shots)

    def test_pattern_collapse(self):
        shots = make_video(n_shots=4).shots
        merged = merge_annotated_shots(shots, {0, 1, 3})
        assert merged == [Shot(0, 20, ShotOrigin.merged), shots[2], shots[3]]

    def test_all_covered(self):
        shots = make_video(n_shots=4).shots
        merged = merge_annotated_shots(shots, {0, 1, 2, 3})
        assert merged == [Shot(0, 40, ShotOrigin.merged)]

    def test_frame_coverage_and_order_preserved(self, rng):
        for _ in range(30):
            n = int(rng.integers(1, 9))
            shots = make_video(n_shots=n).shots
            covered = {int(i) for i in rng.choice(n, size=rng.integers(0, n + 1), replace=False)}
            merged = merge_annotated_shots(shots, covered)
            assert merged[0].start_frame == 0
            assert merged[-1].end_frame == shots[-1].end_frame
            for left, right in zip(merged[:-1], merged[1:]):
                assert left.end_frame == right.start_frame


def decision(video_id, round_number, verdict, shot_index=None, ts="2026-01-01T00:00:00+00:00"):
    return ReviewDecision(video_id, round_number, Verdict(verdict), "alice", ts, shot_index)


def covered_video(video_id="v01", n_shots=3):
    video = make_video(video_id, n_shots=n_shots)
    masklet = Masklet(video_id, {f: full_mask(GEOMETRY) for f in range(video.meta.frame_count)})
    tracklet = Tracklet("c0", "person in red", masklet, frozenset(range(n_shots)))
    return VideoRecord(video.meta, video.shots, (tracklet,))


class TestReviewDecisions:
    def test_verdict_legality(self):
        with pytest.raises(InvalidInput):
            decision("v", 1, "incorrect")
        with pytest.raises(InvalidInput):
            decision("v", 2, "missing_found")
        with pytest.raises(InvalidInput):
            decision("v", 2, "redundant")  # needs shot_index
        decision("v", 2, "redundant", shot_index=1)

    def test_empty_decision_list(self):
        dataset = {"v01": covered_video()}
        assert apply_review_decisions(dataset, []) == dataset

    def test_missing_found_discards(self):
        dataset = {"v01": covered_video(), "v02": covered_video("v02")}
        result = apply_review_decisions(dataset, [decision("v01", 1, "missing_found")])
        assert set(result) == {"v02"}

    def test_incorrect_discards(self):
        dataset = {"v01": covered_video()}
        result = apply_review_decisions(dataset, [decision("v01", 2, "incorrect")])
        assert result == {}

    def test_redundant_strips_shot(self):
        dataset = {"v01": covered_video(n_shots=3)}
        result = apply_review_decisions(dataset, [decision("v01", 2, "redundant", 1)])
        record = result["v01"]
        tracklet = record.tracklets[0]
        assert tracklet.covered_shots == frozenset({0, 2})
        shot = record.shots[1]
        assert all(not shot.contains(f) for f in tracklet.masklet.frames)

    def test_keep_is_noop(self):
        dataset = {"v01": covered_video()}
        assert apply_review_decisions(dataset, [decision("v01", 1, "keep")]) == dataset

    def test_idempotent_replay(self):
        dataset = {
            "v01": covered_video("v01"),
            "v02": covered_video("v02"),
            "v03": covered_video("v03"),
        }
        log = [
            decision("v01", 1, "missing_found"),
            decision("v02", 2, "redundant", 0),
            decision("v03", 2, "keep"),
        ]
        once = apply_review_decisions(dataset, log)
        twice = apply_review_decisions(dataset, log + log)
        assert once == twice

    def test_unknown_video(self):
        with pytest.raises(UnknownTarget):
            apply_review_decisions({"v01": covered_video()}, [decision("zz", 1, "keep")])

    def test_unknown_shot(self):
        with pytest.raises(UnknownTarget):
            apply_review_decisions(
                {"v01": covered_video(n_shots=2)}, [decision("v01", 2, "redundant", 7)]
            )


class TestAnnotateVideo:
    def _clients(self, video_id="v01", barriers=(20, 30)):
        detector = MockDetector(
            {
                image_ref(video_id, 4): [person(0.95), person(0.5, x1=1, y1=1, x2=3, y2=3)],
                image_ref(video_id, 24): [person(0.8)],
            }
        )
        tracker = MockTracker({video_id: GEOMETRY}, barriers={video_id: list(barriers)})
        return detector, tracker, MockCaptioner()

    def test_end_to_end_with_mocks(self):
        video = make_video(n_shots=4)  # shots of 10 frames, longest tie -> shot 0
        detector, tracker, captioner = self._clients()
        annotated = annotate_video(video, detector, tracker, captioner)
        # initial track from frame 4 stops at barrier 20 -> shots 0,1 covered;
        # re-detection at frame 24 fills shot 2; shot 3 stays uncovered
        assert annotated is not None
        assert len(annotated.shots) == 2
        assert annotated.shots[0] == Shot(0, 30, ShotOrigin.merged)
        tracklet = annotated.tracklets[0]
        assert tracklet.covered_shots == frozenset({0})
        assert tracklet.appearance_description.startswith("person")

    def test_no_person_skips_video(self):
        video = make_video()
        annotated = annotate_video(
            video, MockDetector(), MockTracker({"v01": GEOMETRY}), MockCaptioner()
        )
        assert annotated is None

    def test_deterministic_across_worker_counts(self):
        videos = {}
        for i in range(4):
            videos[f"v{i:02d}"] = make_video(f"v{i:02d}", n_shots=3)
        outputs = []
        for workers in (1, 4):
            detector = MockDetector(
                {image_ref(vid, 14): [person(0.9)] for vid in videos}
            )
            tracker = MockTracker({vid: GEOMETRY for vid in videos})
            outputs.append(
                annotate_dataset(videos, detector, tracker, MockCaptioner(), max_in_flight=workers)
            )
        assert outputs[0] == outputs[1]
        assert list(outputs[0]) == sorted(outputs[0])
