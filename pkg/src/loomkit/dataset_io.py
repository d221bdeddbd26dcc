"""JSON (de)serialization for the versioned dataset format.

A video document carries VideoMeta, shots, tracklets, and optional action
annotations. A dataset file is either one video document or a
``{"schema_version": 1, "videos": [...]}`` collection. Masks serialize as
``{"size": [H, W], "counts": [...]}`` with the canonical RLE.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Dict, Union

from .core import (
    SCHEMA_VERSION,
    ActionAnnotation,
    BinaryMask,
    FrameGeometry,
    Masklet,
    Shot,
    TemporalSegment,
    Tracklet,
    VideoMeta,
    VideoRecord,
)
from .errors import InvalidInput

Dataset = Dict[str, VideoRecord]


def mask_to_json(mask: BinaryMask) -> dict:
    return {"size": [mask.geometry.height, mask.geometry.width], "counts": list(mask.rle)}


def mask_from_json(obj: dict) -> BinaryMask:
    height, width = obj["size"]
    return BinaryMask(FrameGeometry(int(height), int(width)), tuple(obj["counts"]))


def masklet_to_json(masklet: Masklet) -> dict:
    return {"frames": {str(k): mask_to_json(m) for k, m in masklet.frames.items()}}


def masklet_from_json(obj: dict, video_id: str) -> Masklet:
    frames = {int(k): mask_from_json(m) for k, m in obj.get("frames", {}).items()}
    return Masklet(video_id, frames)


def video_to_json(record: VideoRecord) -> dict:
    meta = record.meta
    return {
        "schema_version": SCHEMA_VERSION,
        "video_id": meta.video_id,
        "fps": meta.fps,
        "frame_count": meta.frame_count,
        "duration_s": meta.duration_s,
        "height": meta.geometry.height,
        "width": meta.geometry.width,
        "shots": [
            {"start_frame": s.start_frame, "end_frame": s.end_frame, "origin": s.origin.value}
            for s in record.shots
        ],
        "tracklets": [
            {
                "character_id": t.character_id,
                "appearance_description": t.appearance_description,
                "covered_shots": sorted(t.covered_shots),
                "masklet": masklet_to_json(t.masklet),
            }
            for t in record.tracklets
        ],
        "actions": [
            {"start_s": a.segment.start_s, "end_s": a.segment.end_s, "text": a.text}
            for a in record.actions
        ],
    }


def video_from_json(obj: dict) -> VideoRecord:
    version = obj.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise InvalidInput(f"unsupported schema_version {version}")
    video_id = obj["video_id"]
    meta = VideoMeta(
        video_id=video_id,
        fps=float(obj["fps"]),
        frame_count=int(obj["frame_count"]),
        duration_s=float(obj["duration_s"]),
        geometry=FrameGeometry(int(obj["height"]), int(obj["width"])),
    )
    shots = tuple(
        Shot(int(s["start_frame"]), int(s["end_frame"]), s.get("origin", "fused"))
        for s in obj.get("shots", [])
    )
    tracklets = tuple(
        Tracklet(
            character_id=t["character_id"],
            appearance_description=t.get("appearance_description", ""),
            masklet=masklet_from_json(t.get("masklet", {}), video_id),
            covered_shots=frozenset(t.get("covered_shots", [])),
        )
        for t in obj.get("tracklets", [])
    )
    actions = tuple(
        ActionAnnotation(TemporalSegment(float(a["start_s"]), float(a["end_s"])), a["text"])
        for a in obj.get("actions", [])
    )
    return VideoRecord(meta, shots, tracklets, actions)


def dataset_to_json(dataset: Dataset) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "videos": [video_to_json(v) for v in dataset.values()],
    }


def dataset_from_json(obj: dict) -> Dataset:
    version = obj.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise InvalidInput(f"unsupported schema_version {version}")
    if "videos" in obj:
        records = [video_from_json(v) for v in obj["videos"]]
    else:
        records = [video_from_json(obj)]
    dataset: Dataset = {}
    for record in records:
        if record.meta.video_id in dataset:
            raise InvalidInput(f"duplicate video_id {record.meta.video_id}")
        dataset[record.meta.video_id] = record
    return dataset


def load_dataset(path: Union[str, Path]) -> Dataset:
    with open(path, "r", encoding="utf-8") as fh:
        return dataset_from_json(json.load(fh))


def save_dataset(dataset: Dataset, path: Union[str, Path]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(dataset_to_json(dataset), fh, indent=2, sort_keys=True)
        fh.write("\n")
