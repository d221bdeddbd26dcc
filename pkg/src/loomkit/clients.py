"""External model clients: detector, tracker, captioner.

The real models sit behind an HTTP+JSON wire protocol (POST /detect, /track,
/caption, all versioned); in-repo mocks implement the same call interface so
the whole pipeline runs end to end without GPUs. The mock detector answers
from a fixture table and the mock tracker rasterizes its seed box as the
mask on every frame of the shot.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Protocol, Sequence

import numpy as np

from .core import SCHEMA_VERSION, BinaryMask, FrameGeometry, Shot, rle_encode
from .dataset_io import mask_from_json, mask_to_json
from .errors import ClientTransportError, InvalidInput


@dataclass(frozen=True)
class DetectionBox:
    """Axis-aligned detection in pixel coordinates with a confidence score."""

    x1: float
    y1: float
    x2: float
    y2: float
    score: float
    label: str

    def __post_init__(self):
        if not (self.x1 < self.x2 and self.y1 < self.y2):
            raise InvalidInput(f"degenerate box ({self.x1},{self.y1},{self.x2},{self.y2})")
        if not 0 <= self.score <= 1:
            raise InvalidInput(f"score must be in [0,1], got {self.score}")


def box_to_json(box: DetectionBox) -> dict:
    return {
        "x1": box.x1,
        "y1": box.y1,
        "x2": box.x2,
        "y2": box.y2,
        "score": box.score,
        "label": box.label,
    }


def box_from_json(obj: dict) -> DetectionBox:
    return DetectionBox(
        float(obj["x1"]), float(obj["y1"]), float(obj["x2"]), float(obj["y2"]),
        float(obj["score"]), str(obj["label"]),
    )


@dataclass(frozen=True)
class ModelClientConfig:
    endpoint: str
    timeout_s: float = 30.0
    retry_count: int = 2
    auth_token: Optional[str] = None

    def __post_init__(self):
        if self.timeout_s <= 0:
            raise InvalidInput(f"timeout_s must be positive, got {self.timeout_s}")
        if self.retry_count < 0:
            raise InvalidInput(f"retry_count must be >= 0, got {self.retry_count}")


class DetectorClient(Protocol):
    def detect(self, image_ref: str, text_query: str) -> List[DetectionBox]: ...


class TrackerClient(Protocol):
    def track(
        self, video_ref: str, shot: Shot, seed: object, seed_frame: int
    ) -> Dict[int, BinaryMask]: ...


class CaptionerClient(Protocol):
    def caption(self, image_ref: str, box: DetectionBox) -> str: ...


class HttpModelClient:
    """Blocking HTTP client for the model wire protocol, with retries.

    Transport failures are retried up to ``retry_count`` times before
    :class:`ClientTransportError` is raised; HTTP error statuses are not
    retried. A custom transport can be injected for in-process testing.
    """

    def __init__(self, config: ModelClientConfig, transport=None):
        import httpx

        self.config = config
        headers = {}
        if config.auth_token:
            headers["Authorization"] = f"Bearer {config.auth_token}"
        self._client = httpx.Client(
            base_url=config.endpoint,
            timeout=config.timeout_s,
            headers=headers,
            transport=transport,
        )

    def close(self):
        self._client.close()

    def _post(self, path: str, payload: dict) -> dict:
        import httpx

        payload = {"schema_version": SCHEMA_VERSION, **payload}
        last_error: Optional[Exception] = None
        for _ in range(self.config.retry_count + 1):
            try:
                response = self._client.post(path, json=payload)
                response.raise_for_status()
                return response.json()
            except httpx.TransportError as err:
                last_error = err
                continue
            except httpx.HTTPStatusError as err:
                raise ClientTransportError(f"{path} returned {err.response.status_code}") from err
        raise ClientTransportError(
            f"{path} failed after {self.config.retry_count + 1} attempts: {last_error}"
        ) from last_error

    def detect(self, image_ref: str, text_query: str) -> List[DetectionBox]:
        body = self._post("/detect", {"image_ref": image_ref, "text_query": text_query})
        return [box_from_json(b) for b in body.get("detections", [])]

    def track(self, video_ref: str, shot: Shot, seed, seed_frame: int) -> Dict[int, BinaryMask]:
        if isinstance(seed, DetectionBox):
            seed_json = {"kind": "box", "box": box_to_json(seed)}
        elif isinstance(seed, BinaryMask):
            seed_json = {"kind": "mask", "mask": mask_to_json(seed)}
        else:
            raise InvalidInput(f"seed must be a box or a mask, got {type(seed)!r}")
        body = self._post(
            "/track",
            {
                "video_ref": video_ref,
                "shot": {"start_frame": shot.start_frame, "end_frame": shot.end_frame},
                "seed": seed_json,
                "seed_frame": seed_frame,
            },
        )
        return {int(k): mask_from_json(v) for k, v in body.get("masks", {}).items()}

    def caption(self, image_ref: str, box: DetectionBox) -> str:
        body = self._post("/caption", {"image_ref": image_ref, "box": box_to_json(box)})
        return body["text"]


def image_ref(video_id: str, frame_index: int) -> str:
    """Opaque image reference understood by the bundled mocks and server."""
    return f"{video_id}#{frame_index}"


@dataclass
class MockDetector:
    """Answers detection queries from a fixture table keyed by image_ref."""

    fixtures: Mapping[str, Sequence[DetectionBox]] = field(default_factory=dict)
    calls: List[dict] = field(default_factory=list)

    def detect(self, image_ref: str, text_query: str) -> List[DetectionBox]:
        self.calls.append({"image_ref": image_ref, "text_query": text_query})
        return list(self.fixtures.get(image_ref, ()))


def rasterize_box(box: DetectionBox, geometry: FrameGeometry) -> BinaryMask:
    """Fill the box's pixel footprint, clipped to the frame."""
    grid = np.zeros((geometry.height, geometry.width), dtype=np.uint8)
    y1 = max(0, int(np.floor(box.y1)))
    y2 = min(geometry.height, int(np.ceil(box.y2)))
    x1 = max(0, int(np.floor(box.x1)))
    x2 = min(geometry.width, int(np.ceil(box.x2)))
    if y1 < y2 and x1 < x2:
        grid[y1:y2, x1:x2] = 1
    return rle_encode(grid)


@dataclass
class MockTracker:
    """Propagates the seed as a constant mask bidirectionally from the seed
    frame, within the requested shot.

    Optional per-video ``barriers`` emulate transitions a tracker cannot
    bridge: a barrier at frame b is a wall between b-1 and b, so propagation
    never crosses it. Without barriers, every frame of the shot gets the
    rasterized seed.
    """

    geometries: Mapping[str, FrameGeometry]
    barriers: Mapping[str, Sequence[int]] = field(default_factory=dict)
    calls: List[dict] = field(default_factory=list)

    def track(self, video_ref: str, shot: Shot, seed, seed_frame: int) -> Dict[int, BinaryMask]:
        self.calls.append({"video_ref": video_ref, "shot": shot, "seed_frame": seed_frame})
        if video_ref not in self.geometries:
            raise InvalidInput(f"unknown video {video_ref!r}")
        geometry = self.geometries[video_ref]
        if isinstance(seed, DetectionBox):
            mask = rasterize_box(seed, geometry)
        elif isinstance(seed, BinaryMask):
            mask = seed
        else:
            raise InvalidInput(f"seed must be a box or a mask, got {type(seed)!r}")
        lo, hi = shot.start_frame, shot.end_frame
        for barrier in self.barriers.get(video_ref, ()):
            if barrier <= seed_frame:
                lo = max(lo, barrier)
            else:
                hi = min(hi, barrier)
        return {frame: mask for frame in range(lo, hi)}


@dataclass
class MockCaptioner:
    """Deterministic appearance descriptions derived from the box geometry."""

    def caption(self, image_ref: str, box: DetectionBox) -> str:
        return (
            f"{box.label} occupying region "
            f"({int(box.x1)},{int(box.y1)})-({int(box.x2)},{int(box.y2)})"
        )


@dataclass
class FlakyTransportClient:
    """Test double that fails with transport errors a fixed number of times."""

    inner: object
    failures_remaining: int

    def _maybe_fail(self):
        if self.failures_remaining > 0:
            self.failures_remaining -= 1
            raise ClientTransportError("injected transport failure")

    def detect(self, image_ref, text_query):
        self._maybe_fail()
        return self.inner.detect(image_ref, text_query)

    def track(self, video_ref, shot, seed, seed_frame):
        self._maybe_fail()
        return self.inner.track(video_ref, shot, seed, seed_frame)

    def caption(self, image_ref, box):
        self._maybe_fail()
        return self.inner.caption(image_ref, box)


def create_mock_model_app(
    detector: MockDetector,
    tracker: MockTracker,
    captioner: Optional[MockCaptioner] = None,
):
    """FastAPI app speaking the model wire protocol, backed by the mocks.

    Lets the HTTP client be exercised against the real request/response
    shapes without any network or GPU.
    """
    from fastapi import FastAPI

    app = FastAPI()
    captioner = captioner or MockCaptioner()

    @app.post("/detect")
    def detect(payload: dict):
        boxes = detector.detect(payload["image_ref"], payload["text_query"])
        return {"schema_version": SCHEMA_VERSION, "detections": [box_to_json(b) for b in boxes]}

    @app.post("/track")
    def track(payload: dict):
        shot = Shot(payload["shot"]["start_frame"], payload["shot"]["end_frame"])
        seed_json = payload["seed"]
        if seed_json["kind"] == "box":
            seed = box_from_json(seed_json["box"])
        else:
            seed = mask_from_json(seed_json["mask"])
        masks = tracker.track(payload["video_ref"], shot, seed, payload["seed_frame"])
        return {
            "schema_version": SCHEMA_VERSION,
            "masks": {str(k): mask_to_json(m) for k, m in masks.items()},
        }

    @app.post("/caption")
    def caption(payload: dict):
        text = captioner.caption(payload["image_ref"], box_from_json(payload["box"]))
        return {"schema_version": SCHEMA_VERSION, "text": text}

    return app


class RetryingClient:
    """Wrap any client with simple retry-on-transport-error semantics."""

    def __init__(self, inner, retry_count: int = 2, backoff_s: float = 0.0):
        self.inner = inner
        self.retry_count = retry_count
        self.backoff_s = backoff_s

    def _call(self, name, *args):
        last_error = None
        for attempt in range(self.retry_count + 1):
            try:
                return getattr(self.inner, name)(*args)
            except ClientTransportError as err:
                last_error = err
                if self.backoff_s and attempt < self.retry_count:
                    time.sleep(self.backoff_s)
        raise ClientTransportError(
            f"{name} failed after {self.retry_count + 1} attempts"
        ) from last_error

    def detect(self, image_ref, text_query):
        return self._call("detect", image_ref, text_query)

    def track(self, video_ref, shot, seed, seed_frame):
        return self._call("track", video_ref, shot, seed, seed_frame)

    def caption(self, image_ref, box):
        return self._call("caption", image_ref, box)
