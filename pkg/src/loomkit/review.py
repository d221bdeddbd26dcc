"""HTTP service backing the two-round manual verification workflow.

Round 1 screens videos for unlabeled main characters (keep / missing_found,
per video); round 2 screens tracked shots (keep / incorrect per video,
redundant per shot). Decisions append to a JSONL log; the served dataset
state is always the replay of that log over the original dataset, so a
crash-restart with the same files reproduces the state exactly.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Protocol

import numpy as np
from fastapi import FastAPI, HTTPException, Request, Response
from fastapi.middleware.cors import CORSMiddleware

from .core import FrameGeometry, VideoRecord
from .errors import Conflict, InvalidInput, InvalidRound, UnknownTarget
from .pipeline import (
    ReviewDecision,
    Verdict,
    apply_review_decisions,
    center_frame,
    decision_from_json,
    decision_to_json,
    longest_shot,
)
from .prompts import overlay_instance_id
from .raster import to_png_bytes


class FrameSource(Protocol):
    def get_frame(self, video_id: str, frame_index: int) -> np.ndarray: ...


@dataclass
class SyntheticFrameSource:
    """Procedural frames for fixtures and tests: a deterministic gradient
    pattern derived from the video id and frame index."""

    geometries: Mapping[str, FrameGeometry]

    def get_frame(self, video_id: str, frame_index: int) -> np.ndarray:
        if video_id not in self.geometries:
            raise UnknownTarget(f"unknown video {video_id!r}")
        geometry = self.geometries[video_id]
        seed = int.from_bytes(hashlib.sha1(video_id.encode()).digest()[:2], "big")
        ys = np.arange(geometry.height, dtype=np.uint16).reshape(-1, 1)
        xs = np.arange(geometry.width, dtype=np.uint16).reshape(1, -1)
        r = (ys * 3 + frame_index + seed) % 256
        g = (xs * 5 + 2 * frame_index) % 256
        b = ((ys + xs) * 2 + seed) % 256
        return np.stack(
            [np.broadcast_to(c, (geometry.height, geometry.width)) for c in (r, g, b)], axis=2
        ).astype(np.uint8)


@dataclass
class DirectoryFrameSource:
    """Frames stored as ``<root>/<video_id>/<frame_index>.png``."""

    root: Path

    def get_frame(self, video_id: str, frame_index: int) -> np.ndarray:
        from .raster import load_image

        path = Path(self.root) / video_id / f"{frame_index}.png"
        if not path.exists():
            raise UnknownTarget(f"no frame image at {path}")
        return load_image(path)


class DecisionLog:
    """Append-only JSONL decision log; every write is flushed and fsynced."""

    def __init__(self, path):
        self.path = Path(path)

    def read_all(self) -> List[ReviewDecision]:
        if not self.path.exists():
            return []
        decisions = []
        with self.path.open("r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    decisions.append(decision_from_json(json.loads(line)))
        return decisions

    def append(self, decision: ReviewDecision) -> None:
        with self.path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(decision_to_json(decision)) + "\n")
            fh.flush()
            os.fsync(fh.fileno())


@dataclass
class ReviewState:
    """In-memory review session: original dataset + decision log replay.

    All mutation funnels through :meth:`submit`, which serializes writers
    with a lock; readers see the latest replayed dataset.
    """

    original: Dict[str, VideoRecord]
    log: DecisionLog
    decisions: List[ReviewDecision] = field(default_factory=list)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def __post_init__(self):
        self.decisions = self.log.read_all()
        self.current = apply_review_decisions(self.original, self.decisions)

    def _round_decided(self, video_id: str, round_number: int) -> bool:
        # keep / missing_found / incorrect settle a video for their round;
        # redundant is per-shot and leaves the video pending
        for decision in self.decisions:
            if (
                decision.video_id == video_id
                and decision.round == round_number
                and decision.verdict is not Verdict.redundant
            ):
                return True
        return False

    def _shot_stripped(self, video_id: str, shot_index: int) -> bool:
        return any(
            d.video_id == video_id and d.verdict is Verdict.redundant and d.shot_index == shot_index
            for d in self.decisions
        )

    def queue(self, round_number: int) -> List[str]:
        """Pending video ids for a round, lowest id first.

        Round 2 only offers videos that survived round 1 so far (not
        discarded); an explicit round-1 keep is not required.
        """
        if round_number not in (1, 2):
            raise InvalidRound(f"round must be 1 or 2, got {round_number}")
        return [
            video_id
            for video_id in sorted(self.current)
            if not self._round_decided(video_id, round_number)
        ]

    def next_task(self, round_number: int, reviewer: str = "") -> Optional[dict]:
        pending = self.queue(round_number)
        if not pending:
            return None
        video_id = pending[0]
        record = self.current[video_id]
        covered = set()
        for tracklet in record.tracklets:
            covered |= tracklet.covered_shots
        anchor = longest_shot(record.shots)
        reference_frame = center_frame(record.shots[anchor])
        if round_number == 1:
            candidates = [i for i in range(len(record.shots)) if i not in covered]
        else:
            candidates = sorted(covered)
        return {
            "schema_version": 1,
            "video_id": video_id,
            "round": round_number,
            "reference_frame": f"/frames/{video_id}/{reference_frame}?overlay=1",
            "candidate_frames": [
                {
                    "shot_index": i,
                    "frame_index": center_frame(record.shots[i]),
                    "image_ref": (
                        f"/frames/{video_id}/{center_frame(record.shots[i])}"
                        f"?overlay={1 if round_number == 2 else 0}"
                    ),
                }
                for i in candidates
            ],
        }

    def submit(self, decision: ReviewDecision) -> None:
        """Validate, log, and materialize one decision.

        Raises UnknownTarget for videos never in the dataset (or bad shot
        indices) and Conflict for targets that are already decided or no
        longer pending.
        """
        with self._lock:
            if decision.video_id not in self.original:
                raise UnknownTarget(f"unknown video {decision.video_id!r}")
            if decision.video_id not in self.current:
                raise Conflict(f"video {decision.video_id!r} was already discarded")
            record = self.current[decision.video_id]
            if decision.verdict is Verdict.redundant:
                if not 0 <= decision.shot_index < len(record.shots):
                    raise UnknownTarget(
                        f"video {decision.video_id!r} has no shot {decision.shot_index}"
                    )
                if self._shot_stripped(decision.video_id, decision.shot_index):
                    raise Conflict(
                        f"shot {decision.shot_index} of {decision.video_id!r} already stripped"
                    )
            elif self._round_decided(decision.video_id, decision.round):
                raise Conflict(
                    f"video {decision.video_id!r} already decided in round {decision.round}"
                )
            self.log.append(decision)
            self.decisions.append(decision)
            self.current = apply_review_decisions(self.original, self.decisions)

    def progress(self) -> dict:
        round1_pending = len(self.queue(1))
        round2_pending = len(self.queue(2))
        stripped = sum(
            1 for d in self.decisions if d.verdict is Verdict.redundant
        )
        return {
            "schema_version": 1,
            "videos_total": len(self.original),
            "videos_remaining": len(self.current),
            "decisions_logged": len(self.decisions),
            "round1": {"pending": round1_pending, "decided": len(self.current) - round1_pending},
            "round2": {"pending": round2_pending, "decided": len(self.current) - round2_pending},
            "stripped_shots": stripped,
        }


def utc_timestamp() -> str:
    return datetime.now(tz=timezone.utc).isoformat()


def create_review_app(
    dataset: Mapping[str, VideoRecord],
    log_path,
    frame_source: Optional[FrameSource] = None,
    auth_token: Optional[str] = None,
):
    """Build the FastAPI app serving tasks, frames, decisions, and progress."""
    state = ReviewState(original=dict(dataset), log=DecisionLog(log_path))
    if frame_source is None:
        frame_source = SyntheticFrameSource(
            {vid: record.meta.geometry for vid, record in dataset.items()}
        )
    overlay_cache: Dict[str, bytes] = {}

    app = FastAPI(title="loomkit review service")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    app.state.review = state

    def check_auth(request: Request):
        if auth_token is None:
            return
        header = request.headers.get("Authorization", "")
        if header != f"Bearer {auth_token}":
            raise HTTPException(status_code=401, detail="missing or bad token")

    @app.get("/rounds/{round_number}/next")
    def next_task(round_number: int, request: Request, reviewer: str = ""):
        check_auth(request)
        try:
            task = state.next_task(round_number, reviewer)
        except InvalidRound as err:
            raise HTTPException(status_code=400, detail=str(err))
        return {"schema_version": 1, "task": task}

    @app.get("/frames/{video_id}/{frame_index}")
    def get_frame(video_id: str, frame_index: int, request: Request, overlay: int = 0):
        check_auth(request)
        if video_id not in state.current:
            raise HTTPException(status_code=404, detail=f"unknown video {video_id!r}")
        record = state.current[video_id]
        if not 0 <= frame_index < record.meta.frame_count:
            raise HTTPException(status_code=404, detail=f"frame {frame_index} out of range")
        try:
            image = frame_source.get_frame(video_id, frame_index)
        except UnknownTarget as err:
            raise HTTPException(status_code=404, detail=str(err))
        cache_key = ""
        if overlay:
            mask = None
            instance = 0
            for index, tracklet in enumerate(record.tracklets):
                mask = tracklet.masklet.frames.get(frame_index)
                if mask is not None:
                    instance = index + 1
                    break
            if mask is not None and not mask.is_empty:
                digest = hashlib.sha1(
                    image.tobytes() + repr(mask.rle).encode() + bytes([instance])
                ).hexdigest()
                cache_key = digest
                if digest in overlay_cache:
                    return Response(content=overlay_cache[digest], media_type="image/png")
                image = overlay_instance_id(image, mask, instance)
        png = to_png_bytes(image)
        if cache_key:
            overlay_cache[cache_key] = png
        return Response(content=png, media_type="image/png")

    @app.post("/decisions")
    def post_decision(payload: dict, request: Request):
        check_auth(request)
        try:
            if not payload.get("timestamp"):
                payload = {**payload, "timestamp": utc_timestamp()}
            decision = decision_from_json(payload)
            state.submit(decision)
        except Conflict as err:
            raise HTTPException(status_code=409, detail=str(err))
        except UnknownTarget as err:
            raise HTTPException(status_code=404, detail=str(err))
        except (InvalidRound, InvalidInput, KeyError, TypeError, ValueError) as err:
            raise HTTPException(status_code=422, detail=str(err))
        return {"schema_version": 1, "status": "accepted"}

    @app.get("/progress")
    def progress(request: Request):
        check_auth(request)
        return state.progress()

    return app
