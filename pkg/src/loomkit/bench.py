"""Benchmark harness: load QA items and predictions, score each question
type, and emit report tables plus dataset statistics.

When questions score R1@0.5 and mean tIoU; Where questions score J&F over
the annotated frame set; Combined questions score tIoU between the
predicted and ground-truth masklet spans plus the bidirectional-foreground
J&F. Missing predictions score 0 so denominators stay fixed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .core import Masklet, TemporalSegment, VideoMeta, VideoRecord, loc, span_to_segment
from .dataset_io import masklet_from_json, masklet_to_json
from .errors import InvalidInput, MalformedBenchmark
from .metrics import (
    FOREGROUND_BUCKETS,
    BiForeBreakdown,
    bi_fore_jf,
    bucket_for_fraction,
    foreground_fraction,
    jf_sequence,
    mean_iou,
    recall_at,
    t_iou,
)

BENCH_SCHEMA_VERSION = 1
QUESTION_TYPES = ("When", "Where", "Combined")


@dataclass(frozen=True, eq=False)
class QAItem:
    qid: str
    qtype: str
    question: str
    video_id: str
    gt_segment: Optional[TemporalSegment] = None
    gt_masklet: Optional[Masklet] = None
    category: Optional[str] = None

    def __post_init__(self):
        if self.qtype not in QUESTION_TYPES:
            raise MalformedBenchmark(f"item {self.qid}: unknown qtype {self.qtype!r}")
        if self.qtype in ("When", "Combined") and self.gt_segment is None:
            raise MalformedBenchmark(f"item {self.qid}: {self.qtype} needs gt_segment")
        if self.qtype in ("Where", "Combined") and self.gt_masklet is None:
            raise MalformedBenchmark(f"item {self.qid}: {self.qtype} needs gt_masklet")
        if self.gt_masklet is not None and not self.gt_masklet.nonempty_frames():
            raise MalformedBenchmark(f"item {self.qid}: ground-truth masklet has no foreground")


@dataclass
class Benchmark:
    items: List[QAItem]
    videos: Dict[str, VideoMeta] = field(default_factory=dict)


@dataclass
class Prediction:
    qid: str
    segment: Optional[TemporalSegment] = None
    masklet: Optional[Masklet] = None
    clip_scores: Optional[List[float]] = None


def _segment_from_json(value) -> TemporalSegment:
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise MalformedBenchmark(f"segment must be [start, end], got {value!r}")
    return TemporalSegment(float(value[0]), float(value[1]))


def benchmark_from_json(obj: dict) -> Benchmark:
    version = obj.get("schema_version", BENCH_SCHEMA_VERSION)
    if version != BENCH_SCHEMA_VERSION:
        raise MalformedBenchmark(f"unsupported schema_version {version}")
    videos: Dict[str, VideoMeta] = {}
    for video_id, meta in obj.get("videos", {}).items():
        from .core import FrameGeometry

        videos[video_id] = VideoMeta(
            video_id=video_id,
            fps=float(meta["fps"]),
            frame_count=int(meta["frame_count"]),
            duration_s=float(meta.get("duration_s", meta["frame_count"] / meta["fps"])),
            geometry=FrameGeometry(int(meta["height"]), int(meta["width"])),
        )
    items: List[QAItem] = []
    seen = set()
    for index, raw in enumerate(obj.get("items", []), start=1):
        try:
            qid = raw["qid"]
            if qid in seen:
                raise MalformedBenchmark(f"duplicate qid {qid!r}", line=index)
            seen.add(qid)
            item = QAItem(
                qid=qid,
                qtype=raw["qtype"],
                question=raw.get("question", ""),
                video_id=raw["video_id"],
                gt_segment=_segment_from_json(raw["gt_segment"]) if raw.get("gt_segment") else None,
                gt_masklet=(
                    masklet_from_json(raw["gt_masklet"], raw["video_id"])
                    if raw.get("gt_masklet")
                    else None
                ),
                category=raw.get("category"),
            )
        except MalformedBenchmark:
            raise
        except (KeyError, TypeError, ValueError) as err:
            raise MalformedBenchmark(str(err), line=index) from err
        if item.qtype == "Combined" and item.video_id not in videos:
            raise MalformedBenchmark(
                f"Combined item {item.qid} needs video meta for {item.video_id!r}", line=index
            )
        items.append(item)
    return Benchmark(items=items, videos=videos)


def load_benchmark(path: Union[str, Path]) -> Benchmark:
    with open(path, "r", encoding="utf-8") as fh:
        content = fh.read()
    if not content.strip():
        return Benchmark(items=[])
    return benchmark_from_json(json.loads(content))


def benchmark_to_json(bench: Benchmark) -> dict:
    return {
        "schema_version": BENCH_SCHEMA_VERSION,
        "videos": {
            vid: {
                "fps": m.fps,
                "frame_count": m.frame_count,
                "duration_s": m.duration_s,
                "height": m.geometry.height,
                "width": m.geometry.width,
            }
            for vid, m in bench.videos.items()
        },
        "items": [
            {
                "qid": item.qid,
                "qtype": item.qtype,
                "question": item.question,
                "video_id": item.video_id,
                "category": item.category,
                "gt_segment": (
                    [item.gt_segment.start_s, item.gt_segment.end_s] if item.gt_segment else None
                ),
                "gt_masklet": masklet_to_json(item.gt_masklet) if item.gt_masklet else None,
            }
            for item in bench.items
        ],
    }


def load_predictions(path: Union[str, Path]) -> Dict[str, Prediction]:
    """Read a JSONL prediction file: one record per query."""
    predictions: Dict[str, Prediction] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                raw = json.loads(line)
                qid = raw["qid"]
                prediction = Prediction(
                    qid=qid,
                    segment=_segment_from_json(raw["segment"]) if raw.get("segment") else None,
                    masklet=(
                        masklet_from_json(raw["masklet"], raw.get("video_id", qid))
                        if raw.get("masklet")
                        else None
                    ),
                    clip_scores=(
                        [float(s) for s in raw["clip_scores"]]
                        if raw.get("clip_scores") is not None
                        else None
                    ),
                )
            except MalformedBenchmark as err:
                raise MalformedBenchmark(str(err), line=line_no) from err
            except (KeyError, TypeError, ValueError) as err:
                raise MalformedBenchmark(str(err), line=line_no) from err
            if qid in predictions:
                raise MalformedBenchmark(f"duplicate prediction for qid {qid!r}", line=line_no)
            predictions[qid] = prediction
    return predictions


@dataclass
class CombinedItemScore:
    tiou: float
    j_p: float
    f_p: float
    j_g: float
    f_g: float
    fraction: float
    category: Optional[str]


@dataclass
class BenchmarkReport:
    """Aggregates per question type, plus optional bucket/category slices.

    All score fields are fractions in [0, 1]; rendering converts to percent.
    """

    counts: Dict[str, int]
    predicted: int
    when_r1_05: Optional[float] = None
    when_mean_tiou: Optional[float] = None
    where_j: Optional[float] = None
    where_f: Optional[float] = None
    combined_mean_tiou: Optional[float] = None
    combined_components: Optional[BiForeBreakdown] = None
    buckets: Optional[Dict[str, Dict[str, float]]] = None
    categories: Optional[Dict[str, Dict[str, float]]] = None
    warnings: List[str] = field(default_factory=list)

    @property
    def where_jf(self) -> Optional[float]:
        if self.where_j is None:
            return None
        return (self.where_j + self.where_f) / 2

    @property
    def combined_bi_fore(self) -> Optional[float]:
        if self.combined_components is None:
            return None
        return self.combined_components.value


def _percent(value: Optional[float]) -> Optional[float]:
    return None if value is None else round(100.0 * value, 1)


def report_to_json(report: BenchmarkReport) -> dict:
    out: dict = {
        "schema_version": BENCH_SCHEMA_VERSION,
        "counts": dict(report.counts),
        "predicted": report.predicted,
        "warnings": list(report.warnings),
    }
    if report.counts.get("When"):
        out["when"] = {
            "r1@0.5": _percent(report.when_r1_05),
            "mean_tiou": _percent(report.when_mean_tiou),
        }
    if report.counts.get("Where"):
        out["where"] = {"jf": _percent(report.where_jf)}
    if report.counts.get("Combined"):
        c = report.combined_components
        out["combined"] = {
            "mean_tiou": _percent(report.combined_mean_tiou),
            "bi_fore_jf": _percent(report.combined_bi_fore),
            "components": {
                "j_p": _percent(c.j_p),
                "f_p": _percent(c.f_p),
                "jf_p": _percent(c.jf_p),
                "j_g": _percent(c.j_g),
                "f_g": _percent(c.f_g),
                "jf_g": _percent(c.jf_g),
            },
        }
    if report.buckets is not None:
        out["buckets"] = {
            name: {k: _percent(v) if k != "count" else v for k, v in stats.items()}
            for name, stats in report.buckets.items()
        }
    if report.categories is not None:
        out["categories"] = {
            name: {k: _percent(v) if k != "count" else v for k, v in stats.items()}
            for name, stats in report.categories.items()
        }
    return out


def render_report_table(report: BenchmarkReport) -> str:
    """Human-readable aligned table, values in percent with one decimal."""
    rows: List[Tuple[str, str]] = []

    def fmt(value: Optional[float]) -> str:
        return "-" if value is None else f"{100.0 * value:5.1f}"

    rows.append(("items", str(sum(report.counts.values()))))
    rows.append(("predicted", str(report.predicted)))
    if report.counts.get("When"):
        rows.append((f"When ({report.counts['When']}) R1@0.5", fmt(report.when_r1_05)))
        rows.append(("When tIoU", fmt(report.when_mean_tiou)))
    if report.counts.get("Where"):
        rows.append((f"Where ({report.counts['Where']}) J&F", fmt(report.where_jf)))
    if report.counts.get("Combined"):
        rows.append((f"Combined ({report.counts['Combined']}) tIoU", fmt(report.combined_mean_tiou)))
        rows.append(("Combined J&F bi-fore", fmt(report.combined_bi_fore)))
    width = max(len(label) for label, _ in rows)
    lines = [f"{label.ljust(width)}  {value}" for label, value in rows]
    if report.buckets:
        lines.append("")
        lines.append("Combined by foreground fraction:")
        for name in FOREGROUND_BUCKETS:
            stats = report.buckets.get(name)
            if stats is None:
                continue
            lines.append(
                f"  {name:>8}  n={stats['count']:<4}  "
                f"tIoU={fmt(stats.get('mean_tiou'))}  bi-fore={fmt(stats.get('bi_fore_jf'))}"
            )
    return "\n".join(lines)


def _combined_aggregate(scores: Sequence[CombinedItemScore]) -> Tuple[float, BiForeBreakdown]:
    mean_tiou_value = float(np.mean([s.tiou for s in scores]))
    components = BiForeBreakdown(
        j_p=float(np.mean([s.j_p for s in scores])),
        f_p=float(np.mean([s.f_p for s in scores])),
        j_g=float(np.mean([s.j_g for s in scores])),
        f_g=float(np.mean([s.f_g for s in scores])),
    )
    return mean_tiou_value, components


def evaluate(
    bench: Benchmark,
    predictions: Mapping[str, Prediction],
    with_buckets: bool = False,
    group_by_category: bool = False,
) -> BenchmarkReport:
    """Score every item and aggregate per question type.

    The Combined bi-fore aggregate applies the combining formula to the
    across-item means of the four components, mirroring how the component
    table is reported. Predictions for unknown qids produce warnings, never
    failures.
    """
    items = sorted(bench.items, key=lambda item: item.qid)
    counts = {qtype: 0 for qtype in QUESTION_TYPES}
    warnings = [
        f"prediction for unknown qid {qid!r}"
        for qid in sorted(set(predictions) - {item.qid for item in items})
    ]
    predicted = 0

    when_preds: Dict[str, Optional[TemporalSegment]] = {}
    when_gts: Dict[str, TemporalSegment] = {}
    where_scores: List[Tuple[float, float]] = []
    combined_scores: List[CombinedItemScore] = []

    for item in items:
        counts[item.qtype] += 1
        prediction = predictions.get(item.qid)
        if prediction is not None:
            predicted += 1
        if item.qtype == "When":
            when_gts[item.qid] = item.gt_segment
            when_preds[item.qid] = prediction.segment if prediction else None
        elif item.qtype == "Where":
            frame_set = sorted(item.gt_masklet.frames)
            if prediction is None or prediction.masklet is None:
                where_scores.append((0.0, 0.0))
            else:
                score = jf_sequence(prediction.masklet, item.gt_masklet, frame_set)
                where_scores.append((score.j, score.f))
        else:  # Combined
            meta = bench.videos[item.video_id]
            fraction = foreground_fraction(item.gt_masklet, meta.frame_count)
            if prediction is None or prediction.masklet is None:
                combined_scores.append(
                    CombinedItemScore(0.0, 0.0, 0.0, 0.0, 0.0, fraction, item.category)
                )
                continue
            breakdown = bi_fore_jf(prediction.masklet, item.gt_masklet)
            pred_span = loc(prediction.masklet)
            if pred_span is None:
                tiou = 0.0
            else:
                pred_segment = span_to_segment(pred_span, meta.fps)
                gt_segment = span_to_segment(loc(item.gt_masklet), meta.fps)
                tiou = t_iou(pred_segment, gt_segment)
            combined_scores.append(
                CombinedItemScore(
                    tiou=tiou,
                    j_p=breakdown.j_p,
                    f_p=breakdown.f_p,
                    j_g=breakdown.j_g,
                    f_g=breakdown.f_g,
                    fraction=fraction,
                    category=item.category,
                )
            )

    report = BenchmarkReport(counts=counts, predicted=predicted, warnings=warnings)
    if when_gts:
        report.when_r1_05 = recall_at(when_preds, when_gts, 0.5)
        report.when_mean_tiou = mean_iou(when_preds, when_gts)
    if where_scores:
        report.where_j = float(np.mean([j for j, _ in where_scores]))
        report.where_f = float(np.mean([f for _, f in where_scores]))
    if combined_scores:
        report.combined_mean_tiou, report.combined_components = _combined_aggregate(
            combined_scores
        )

    if with_buckets and combined_scores:
        report.buckets = {}
        for name in FOREGROUND_BUCKETS:
            group = [s for s in combined_scores if bucket_for_fraction(s.fraction) == name]
            if not group:
                report.buckets[name] = {"count": 0}
                continue
            tiou_mean, components = _combined_aggregate(group)
            report.buckets[name] = {
                "count": len(group),
                "mean_tiou": tiou_mean,
                "bi_fore_jf": components.value,
            }
    if group_by_category and combined_scores:
        report.categories = {}
        for name in sorted({s.category or "uncategorized" for s in combined_scores}):
            group = [s for s in combined_scores if (s.category or "uncategorized") == name]
            tiou_mean, components = _combined_aggregate(group)
            report.categories[name] = {
                "count": len(group),
                "mean_tiou": tiou_mean,
                "bi_fore_jf": components.value,
            }
    return report


SHOT_LENGTH_BINS_S = (0, 5, 10, 15, 20, 25, 30)
CENTER_BINS = 10


@dataclass
class DatasetStats:
    video_count: int
    annotated_shot_count: int
    mean_shots_per_video: float
    mean_shot_length_s: float
    mean_video_duration_s: float
    mean_description_words: float
    shot_length_histogram: Dict[str, int]
    shot_center_histogram: List[int]


def dataset_stats(dataset: Mapping[str, VideoRecord]) -> DatasetStats:
    """Descriptive statistics over a dataset's annotated shots.

    A shot counts as annotated when a tracklet covers it; videos without
    tracklets contribute all their shots (raw partitions). Summation runs
    in sorted video-id order so totals are exactly reproducible.
    """
    if not dataset:
        raise InvalidInput("empty dataset")
    video_count = len(dataset)
    shot_count = 0
    length_total = 0.0
    duration_total = 0.0
    word_counts: List[int] = []
    length_hist = {f"{lo}-{lo + 5}s": 0 for lo in SHOT_LENGTH_BINS_S[:-1]}
    length_hist[f">={SHOT_LENGTH_BINS_S[-1]}s"] = 0
    center_hist = [0] * CENTER_BINS

    for video_id in sorted(dataset):
        record = dataset[video_id]
        fps = record.meta.fps
        duration_total += record.meta.duration_s
        if record.tracklets:
            covered = set()
            for tracklet in record.tracklets:
                covered |= tracklet.covered_shots
            shots = [record.shots[i] for i in sorted(covered)]
        else:
            shots = list(record.shots)
        shot_count += len(shots)
        for shot in shots:
            length_s = shot.length_s(fps)
            length_total += length_s
            for lo in reversed(SHOT_LENGTH_BINS_S):
                if length_s >= lo:
                    key = f">={lo}s" if lo == SHOT_LENGTH_BINS_S[-1] else f"{lo}-{lo + 5}s"
                    length_hist[key] += 1
                    break
            center = (shot.start_frame + shot.end_frame) / 2 / fps
            normalized = min(center / record.meta.duration_s, 1.0 - 1e-12)
            center_hist[int(normalized * CENTER_BINS)] += 1
        for action in record.actions:
            word_counts.append(len(action.text.split()))
        for tracklet in record.tracklets:
            if not record.actions and tracklet.appearance_description:
                word_counts.append(len(tracklet.appearance_description.split()))

    return DatasetStats(
        video_count=video_count,
        annotated_shot_count=shot_count,
        mean_shots_per_video=shot_count / video_count,
        mean_shot_length_s=length_total / shot_count if shot_count else 0.0,
        mean_video_duration_s=duration_total / video_count,
        mean_description_words=float(np.mean(word_counts)) if word_counts else 0.0,
        shot_length_histogram=length_hist,
        shot_center_histogram=center_hist,
    )


def stats_to_json(stats: DatasetStats) -> dict:
    return {
        "schema_version": BENCH_SCHEMA_VERSION,
        "video_count": stats.video_count,
        "annotated_shot_count": stats.annotated_shot_count,
        "mean_shots_per_video": round(stats.mean_shots_per_video, 2),
        "mean_shot_length_s": round(stats.mean_shot_length_s, 2),
        "mean_video_duration_s": round(stats.mean_video_duration_s, 2),
        "mean_description_words": round(stats.mean_description_words, 2),
        "shot_length_histogram": stats.shot_length_histogram,
        "shot_center_histogram": stats.shot_center_histogram,
    }
