"""Command-line interface.

Subcommands: partition, annotate, prompts, parse-actions, eval, stats,
serve-review. Exit code is nonzero on malformed inputs only, never on low
scores.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import bench as bench_mod
from . import dataset_io, pipeline, prompts, shots
from .errors import LoomkitError


def _emit(payload: dict, out_path):
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if out_path:
        Path(out_path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _load_feature_series(path: str, fps: float) -> shots.FrameFeatureSeries:
    p = Path(path)
    if p.is_dir():
        from .raster import hsv_mean, load_image

        frame_files = sorted(p.glob("*.png")) + sorted(p.glob("*.jpg"))
        if not frame_files:
            raise LoomkitError(f"no .png/.jpg frames found in {p}")
        features = np.stack([hsv_mean(load_image(f)) for f in frame_files])
        return shots.FrameFeatureSeries(features, fps, "hsv_mean")
    if p.suffix == ".csv":
        features = np.loadtxt(p, delimiter=",", ndmin=2)
        return shots.FrameFeatureSeries(features, fps, "external")
    if p.suffix == ".json":
        obj = json.loads(p.read_text(encoding="utf-8"))
        return shots.FrameFeatureSeries(
            np.asarray(obj["features"], dtype=float), float(obj.get("fps", fps)), "external"
        )
    raise LoomkitError(f"cannot read features from {path!r} (need a dir, .csv, or .json)")


def cmd_partition(args) -> int:
    series = _load_feature_series(args.input, args.fps)
    result = shots.partition_video(
        series,
        threshold=args.threshold,
        max_change_points=args.max_cp,
        penalty_weight=args.penalty,
        min_gap_frames=args.min_gap_frames,
        min_shot_s=args.min_shot_s,
        max_shots=args.max_shots,
    )
    _emit(
        {
            "schema_version": 1,
            "fps": series.sample_fps,
            "frame_count": series.n_frames,
            "discard_video": result.discard_video,
            "content_cuts": list(result.content_cuts),
            "kts_cuts": list(result.kts_result.boundaries) if result.kts_result else [],
            "shots": [
                {"start_frame": s.start_frame, "end_frame": s.end_frame, "origin": s.origin.value}
                for s in result.shots
            ],
        },
        args.out,
    )
    return 0


def cmd_annotate(args) -> int:
    dataset = dataset_io.load_dataset(args.dataset)
    if args.mock:
        from .clients import MockCaptioner, MockDetector, MockTracker

        fixtures = {}
        if args.mock_fixtures:
            from .clients import box_from_json

            raw = json.loads(Path(args.mock_fixtures).read_text(encoding="utf-8"))
            fixtures = {
                ref: [box_from_json(b) for b in boxes]
                for ref, boxes in raw.get("detections", {}).items()
            }
        geometries = {vid: rec.meta.geometry for vid, rec in dataset.items()}
        detector = MockDetector(fixtures)
        tracker = MockTracker(geometries)
        captioner = MockCaptioner()
    else:
        from .clients import HttpModelClient, ModelClientConfig

        detector = HttpModelClient(ModelClientConfig(args.detector, auth_token=args.token))
        tracker = HttpModelClient(ModelClientConfig(args.tracker, auth_token=args.token))
        captioner = HttpModelClient(ModelClientConfig(args.captioner, auth_token=args.token))
    annotated = pipeline.annotate_dataset(
        dataset, detector, tracker, captioner, max_in_flight=args.max_in_flight
    )
    _emit(dataset_io.dataset_to_json(annotated), args.out)
    return 0


def cmd_prompts(args) -> int:
    shot_obj = json.loads(Path(args.shot).read_text(encoding="utf-8"))
    context = shot_obj.get("context") or (
        f"shot {shot_obj.get('shot_index', 0)} of video {shot_obj.get('video_id', '?')}, "
        f"{shot_obj.get('start_s', 0.0):.1f}s-{shot_obj.get('end_s', 0.0):.1f}s"
    )
    sys.stdout.write(prompts.build_action_prompt(context, args.frames))
    return 0


def cmd_parse_actions(args) -> int:
    text = sys.stdin.read()
    descriptions = prompts.parse_action_output(text, args.max_id, args.sample_fps)
    _emit(
        {
            "schema_version": 1,
            "actions": [
                {
                    "frame_id_start": d.frame_id_start,
                    "frame_id_end": d.frame_id_end,
                    "text": d.text,
                    "start_s": d.segment.start_s,
                    "end_s": d.segment.end_s,
                }
                for d in descriptions
            ],
        },
        args.out,
    )
    return 0


def cmd_eval(args) -> int:
    benchmark = bench_mod.load_benchmark(args.bench)
    predictions = bench_mod.load_predictions(args.pred)
    report = bench_mod.evaluate(
        benchmark,
        predictions,
        with_buckets=args.buckets,
        group_by_category=args.group_by == "category",
    )
    sys.stdout.write(bench_mod.render_report_table(report) + "\n")
    if args.out:
        _emit(bench_mod.report_to_json(report), args.out)
    return 0


def cmd_stats(args) -> int:
    dataset = dataset_io.load_dataset(args.dataset)
    stats = bench_mod.dataset_stats(dataset)
    _emit(bench_mod.stats_to_json(stats), args.out)
    return 0


def cmd_serve_review(args) -> int:
    import uvicorn

    from .review import DirectoryFrameSource, create_review_app

    dataset = dataset_io.load_dataset(args.dataset)
    frame_source = DirectoryFrameSource(Path(args.frames_dir)) if args.frames_dir else None
    app = create_review_app(dataset, args.log, frame_source, auth_token=args.token)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="loomkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("partition", help="detect shot boundaries in a feature series")
    p.add_argument("input", help="frames directory, features .csv, or features .json")
    p.add_argument("--fps", type=float, default=2.0, help="sample rate of the feature series")
    p.add_argument("--threshold", type=float, default=27.0)
    p.add_argument("--max-cp", type=int, default=24, dest="max_cp")
    p.add_argument("--penalty", type=float, default=1.0)
    p.add_argument("--min-gap-frames", type=int, default=0, dest="min_gap_frames")
    p.add_argument("--min-shot-s", type=float, default=1.0, dest="min_shot_s")
    p.add_argument("--max-shots", type=int, default=10, dest="max_shots")
    p.add_argument("--out")
    p.set_defaults(func=cmd_partition)

    p = sub.add_parser("annotate", help="run the mask annotation pipeline over a dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--detector", default="http://localhost:8001")
    p.add_argument("--tracker", default="http://localhost:8002")
    p.add_argument("--captioner", default="http://localhost:8003")
    p.add_argument("--token")
    p.add_argument("--mock", action="store_true", help="swap all clients for bundled fixtures")
    p.add_argument("--mock-fixtures", dest="mock_fixtures", help="JSON detection fixture table")
    p.add_argument("--max-in-flight", type=int, default=4, dest="max_in_flight")
    p.add_argument("--out")
    p.set_defaults(func=cmd_annotate)

    p = sub.add_parser("prompts", help="print the action-annotation prompt for a shot")
    p.add_argument("--shot", required=True, help="shot context JSON file")
    p.add_argument("--frames", type=int, required=True, help="number of sampled frames")
    p.set_defaults(func=cmd_prompts)

    p = sub.add_parser("parse-actions", help="parse model output lines from stdin")
    p.add_argument("--max-id", type=int, required=True, dest="max_id")
    p.add_argument("--sample-fps", type=float, default=2.0, dest="sample_fps")
    p.add_argument("--out")
    p.set_defaults(func=cmd_parse_actions)

    p = sub.add_parser("eval", help="score predictions against a benchmark")
    p.add_argument("--bench", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--buckets", action="store_true")
    p.add_argument("--group-by", dest="group_by", choices=["category"])
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("stats", help="dataset statistics")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("serve-review", help="start the manual verification service")
    p.add_argument("--dataset", required=True)
    p.add_argument("--log", required=True)
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--frames-dir", dest="frames_dir")
    p.add_argument("--token")
    p.set_defaults(func=cmd_serve_review)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except LoomkitError as err:
        sys.stderr.write(f"error: {err}\n")
        return 2
    except FileNotFoundError as err:
        sys.stderr.write(f"error: {err}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
