"""Tracklet pipeline: main-character selection, cross-shot completion in a
grounding-tracking loop, adjacent-shot merging, and review-decision replay.

Videos are independent; within a video the shot completion loop is
sequential because tracker calls may share per-video state.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Mapping, Optional, Sequence, Set

from .clients import DetectionBox, image_ref
from .core import Masklet, Shot, ShotOrigin, Tracklet, VideoRecord
from .errors import (
    ClientTransportError,
    InvalidInput,
    InvalidRound,
    NoPerson,
    PipelineStageError,
    UnknownTarget,
)

logger = logging.getLogger(__name__)

DEFAULT_SCORE_FLOOR = 0.35
PERSON_CATEGORY = "person"


def center_frame(shot: Shot) -> int:
    """Middle frame of a half-open shot: floor((start + end - 1) / 2)."""
    return (shot.start_frame + shot.end_frame - 1) // 2


def longest_shot(shots: Sequence[Shot]) -> int:
    """Index of the longest shot; ties go to the smallest index."""
    if not shots:
        raise InvalidInput("empty shot list")
    return max(range(len(shots)), key=lambda i: (shots[i].length, -i))


def select_best_box(
    detections: Sequence[DetectionBox],
    category: str = PERSON_CATEGORY,
    score_floor: float = DEFAULT_SCORE_FLOOR,
) -> Optional[DetectionBox]:
    """Highest-scoring box of the category at or above the floor, else None."""
    best = None
    for box in detections:
        if box.label != category or box.score < score_floor:
            continue
        if best is None or box.score > best.score:
            best = box
    return best


def pick_main_character(
    detections: Sequence[DetectionBox],
    category: str = PERSON_CATEGORY,
    score_floor: float = DEFAULT_SCORE_FLOOR,
) -> DetectionBox:
    """Pick the main character's box; no usable detection means skip the video."""
    best = select_best_box(detections, category, score_floor)
    if best is None:
        raise NoPerson(f"no {category!r} detection at or above {score_floor}")
    return best


def coverage_of(masklet: Masklet, shots: Sequence[Shot]) -> Set[int]:
    """Indices of shots holding at least one nonempty mask frame."""
    nonempty = masklet.nonempty_frames()
    return {
        index
        for index, shot in enumerate(shots)
        if any(shot.contains(frame) for frame in nonempty)
    }


def complete_tracklet(
    shots: Sequence[Shot],
    initial_masklet: Masklet,
    description: str,
    detector_client,
    tracker_client,
    character_id: str = "main",
    category: str = PERSON_CATEGORY,
    score_floor: float = DEFAULT_SCORE_FLOOR,
) -> Tracklet:
    """Fill shots the initial tracklet missed by re-detecting and re-tracking.

    For each uncovered shot the detector is queried on the shot's center
    frame with the appearance description; a usable box seeds the tracker
    there. Shots where detection finds nothing stay uncovered. Existing
    masks are never replaced, so coverage only grows.
    """
    video_id = initial_masklet.video_id
    frames = dict(initial_masklet.frames)
    covered = coverage_of(initial_masklet, shots)
    for index, shot in enumerate(shots):
        if index in covered:
            continue
        center = center_frame(shot)
        try:
            detections = detector_client.detect(image_ref(video_id, center), description)
        except ClientTransportError as err:
            raise PipelineStageError(f"detection failed: {err}", index) from err
        box = select_best_box(detections, category, score_floor)
        if box is None:
            continue
        try:
            masks = tracker_client.track(video_id, shot, box, center)
        except ClientTransportError as err:
            raise PipelineStageError(f"tracking failed: {err}", index) from err
        got_foreground = False
        for frame, mask in masks.items():
            if not shot.contains(frame) or frame in frames:
                continue
            frames[frame] = mask
            got_foreground = got_foreground or not mask.is_empty
        if got_foreground:
            covered.add(index)
    return Tracklet(character_id, description, Masklet(video_id, frames), frozenset(covered))


def merge_annotated_shots(shots: Sequence[Shot], covered_shots) -> List[Shot]:
    """Collapse maximal runs of adjacent covered shots into single shots.

    Uncovered shots and single covered shots pass through unchanged; only
    multi-shot runs become new shots with origin=merged.
    """
    covered = set(covered_shots)
    merged: List[Shot] = []
    index = 0
    while index < len(shots):
        if index not in covered:
            merged.append(shots[index])
            index += 1
            continue
        run_end = index
        while run_end + 1 < len(shots) and run_end + 1 in covered:
            run_end += 1
        if run_end == index:
            merged.append(shots[index])
        else:
            merged.append(
                Shot(shots[index].start_frame, shots[run_end].end_frame, ShotOrigin.merged)
            )
        index = run_end + 1
    return merged


class Verdict(str, Enum):
    keep = "keep"
    missing_found = "missing_found"
    incorrect = "incorrect"
    redundant = "redundant"


_ROUND_VERDICTS = {
    1: {Verdict.keep, Verdict.missing_found},
    2: {Verdict.keep, Verdict.incorrect, Verdict.redundant},
}


@dataclass(frozen=True)
class ReviewDecision:
    """One manual-verification judgment, appended to the decision log."""

    video_id: str
    round: int
    verdict: Verdict
    reviewer: str
    timestamp: str
    shot_index: Optional[int] = None

    def __post_init__(self):
        if self.round not in (1, 2):
            raise InvalidRound(f"round must be 1 or 2, got {self.round}")
        object.__setattr__(self, "verdict", Verdict(self.verdict))
        if self.verdict not in _ROUND_VERDICTS[self.round]:
            raise InvalidInput(f"verdict {self.verdict.value!r} is not legal in round {self.round}")
        if self.verdict is Verdict.redundant and self.shot_index is None:
            raise InvalidInput("redundant verdicts must name a shot_index")


def decision_to_json(decision: ReviewDecision) -> dict:
    return {
        "schema_version": 1,
        "video_id": decision.video_id,
        "round": decision.round,
        "verdict": decision.verdict.value,
        "reviewer": decision.reviewer,
        "timestamp": decision.timestamp,
        "shot_index": decision.shot_index,
    }


def decision_from_json(obj: dict) -> ReviewDecision:
    return ReviewDecision(
        video_id=obj["video_id"],
        round=int(obj["round"]),
        verdict=Verdict(obj["verdict"]),
        reviewer=obj.get("reviewer", ""),
        timestamp=obj.get("timestamp", ""),
        shot_index=obj.get("shot_index"),
    )


def _strip_shot(record: VideoRecord, shot_index: int) -> VideoRecord:
    shot = record.shots[shot_index]
    tracklets = []
    for tracklet in record.tracklets:
        frames = {
            frame: mask
            for frame, mask in tracklet.masklet.frames.items()
            if not shot.contains(frame)
        }
        tracklets.append(
            Tracklet(
                tracklet.character_id,
                tracklet.appearance_description,
                Masklet(tracklet.masklet.video_id, frames),
                tracklet.covered_shots - {shot_index},
            )
        )
    return VideoRecord(record.meta, record.shots, tuple(tracklets), record.actions)


def apply_review_decisions(
    dataset: Mapping[str, VideoRecord],
    decisions: Sequence[ReviewDecision],
) -> Dict[str, VideoRecord]:
    """Replay review decisions over a dataset, in order.

    missing_found (round 1) and incorrect (round 2) discard the whole video;
    redundant strips the named shot's masks and coverage; keep changes
    nothing. Replay is idempotent: repeated decisions are no-ops, so
    applying a log with duplicates equals applying it deduplicated. A
    decision naming a video that was never in the dataset, or a shot index
    outside the video, is an error.
    """
    known = set(dataset)
    current: Dict[str, VideoRecord] = dict(dataset)
    for decision in decisions:
        if decision.video_id not in known:
            raise UnknownTarget(f"unknown video {decision.video_id!r}")
        if decision.video_id not in current:
            continue  # discarded earlier in this log
        if decision.verdict in (Verdict.missing_found, Verdict.incorrect):
            del current[decision.video_id]
        elif decision.verdict is Verdict.redundant:
            record = current[decision.video_id]
            if not 0 <= decision.shot_index < len(record.shots):
                raise UnknownTarget(
                    f"video {decision.video_id!r} has no shot {decision.shot_index}"
                )
            current[decision.video_id] = _strip_shot(record, decision.shot_index)
    return current


def annotate_video(
    record: VideoRecord,
    detector_client,
    tracker_client,
    captioner_client,
    category: str = PERSON_CATEGORY,
    score_floor: float = DEFAULT_SCORE_FLOOR,
) -> Optional[VideoRecord]:
    """Run spatial mask annotation and shot merging for one video.

    Returns the annotated record, or None when no main character is found
    (the video is skipped). The initial tracklet is produced by seeding the
    tracker at the center frame of the longest shot and propagating over the
    whole video; completion then fills the shots that stayed uncovered.
    """
    if not record.shots:
        raise InvalidInput(f"video {record.meta.video_id} has no shots")
    video_id = record.meta.video_id
    anchor_index = longest_shot(record.shots)
    anchor_frame = center_frame(record.shots[anchor_index])
    try:
        detections = detector_client.detect(image_ref(video_id, anchor_frame), category)
    except ClientTransportError as err:
        raise PipelineStageError(f"initial detection failed: {err}", anchor_index) from err
    try:
        main_box = pick_main_character(detections, category, score_floor)
    except NoPerson:
        logger.info("skipping %s: no main character detected", video_id)
        return None
    try:
        description = captioner_client.caption(image_ref(video_id, anchor_frame), main_box)
        full_span = Shot(0, record.meta.frame_count)
        initial_frames = tracker_client.track(video_id, full_span, main_box, anchor_frame)
    except ClientTransportError as err:
        raise PipelineStageError(f"initial tracking failed: {err}", anchor_index) from err

    initial = Masklet(video_id, initial_frames)
    tracklet = complete_tracklet(
        record.shots,
        initial,
        description,
        detector_client,
        tracker_client,
        category=category,
        score_floor=score_floor,
    )
    merged = merge_annotated_shots(record.shots, tracklet.covered_shots)
    covered_old = [record.shots[i] for i in sorted(tracklet.covered_shots)]
    new_covered = frozenset(
        index
        for index, shot in enumerate(merged)
        if any(
            old.start_frame < shot.end_frame and shot.start_frame < old.end_frame
            for old in covered_old
        )
    )
    final = Tracklet(
        tracklet.character_id, tracklet.appearance_description, tracklet.masklet, new_covered
    )
    return VideoRecord(record.meta, tuple(merged), (final,), record.actions)


def annotate_dataset(
    dataset: Mapping[str, VideoRecord],
    detector_client,
    tracker_client,
    captioner_client,
    max_in_flight: int = 4,
    **kwargs,
) -> Dict[str, VideoRecord]:
    """Annotate all videos, at most ``max_in_flight`` concurrently.

    Output ordering and content are deterministic regardless of worker
    count; videos with no detectable main character are dropped.
    """
    if max_in_flight < 1:
        raise InvalidInput(f"max_in_flight must be >= 1, got {max_in_flight}")

    def work(item):
        video_id, record = item
        return video_id, annotate_video(
            record, detector_client, tracker_client, captioner_client, **kwargs
        )

    results: Dict[str, VideoRecord] = {}
    with ThreadPoolExecutor(max_workers=max_in_flight) as pool:
        for video_id, annotated in pool.map(work, sorted(dataset.items())):
            if annotated is not None:
                results[video_id] = annotated
    return dict(sorted(results.items()))
