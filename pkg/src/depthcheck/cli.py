"""Command-line front end.

Every subcommand is a thin wrapper over the library: simulate builds a
labeled corpus, extract prints per-frame features, train fits the
two-stage detector, detect judges one clip (locally or against a running
service), eval cross-validates on a corpus, parse-stream recovers frame
types and sizes from a raw Annex-B bitstream, bench times feature
extraction, and serve starts the HTTP service.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .config import ForestConfig, GbmConfig, RunConfig, SvmConfig, provenance
from .detector import DetectorBundle, detect, feature_names
from .errors import ConfigError, DepthcheckError, DomainError
from .evaluate import CvReport
from .features import frame_feature_names, frame_feature_vector
from .frames import VideoSequence
from .hevc import parse_stream
from .ingest import RawLayout, read_frame_metadata, read_raw_planar, read_y4m, write_frame_metadata
from .pipeline import (
    benchmark_extraction,
    cross_validate_detector,
    load_corpus,
    train_detector,
)
from .simulate import CompressionProfile, RefillMethod, SceneSpec, build_corpus

SCENE_KINDS = ("gradient", "vignette", "texture")


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="JSON settings file")
    parser.add_argument("--radius", type=int, help="window half-size")
    parser.add_argument("--bins", type=int, help="cloud histogram bins")
    parser.add_argument("--threshold", type=float, help="decision threshold")
    parser.add_argument("--seed", type=int, help="training seed")
    parser.add_argument("--threads", type=int, help="worker cap, 0 = all cores")
    parser.add_argument("--trees", type=int, help="forest size")
    parser.add_argument("--rounds", type=int, help="boosting rounds")
    parser.add_argument(
        "--size-per-pixel", action="store_true", default=None,
        help="normalize compressed sizes by luma pixel count",
    )


def _build_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    updates = {}
    for key in ("radius", "bins", "threshold", "seed", "threads"):
        value = getattr(args, key, None)
        if value is not None:
            updates[key] = value
    if getattr(args, "size_per_pixel", None):
        updates["size_per_pixel"] = True
    if updates or getattr(args, "trees", None) or getattr(args, "rounds", None):
        doc = cfg.to_dict()
        doc.update(updates)
        if getattr(args, "trees", None):
            doc["forest"]["trees"] = args.trees
        if getattr(args, "rounds", None):
            doc["gbm"]["rounds"] = args.rounds
        cfg = RunConfig.from_dict(doc)
    return cfg


def _read_video(args: argparse.Namespace) -> VideoSequence:
    data = Path(args.input).read_bytes()
    if getattr(args, "raw", None):
        parts = args.raw.lower().split("x")
        if len(parts) != 3:
            raise ConfigError("--raw expects WIDTHxHEIGHTxDEPTH")
        layout = RawLayout(
            width=int(parts[0]),
            height=int(parts[1]),
            bit_depth=int(parts[2]),
            subsampling=args.subsampling,
        )
        return read_raw_planar(data, layout)
    return read_y4m(data)


def _attach_meta(video: VideoSequence, args: argparse.Namespace) -> VideoSequence:
    if getattr(args, "meta", None):
        return video.with_metadata(read_frame_metadata(Path(args.meta).read_text()))
    if getattr(args, "stream", None):
        return video.with_metadata(parse_stream(Path(args.stream).read_bytes()))
    return video


def _cmd_simulate(args: argparse.Namespace) -> int:
    cfg = _build_config(args)
    scenes = []
    for i in range(args.scenes):
        scenes.append(
            SceneSpec(
                kind=SCENE_KINDS[i % len(SCENE_KINDS)],
                width=args.width,
                height=args.height,
                bit_depth=args.bit_depth,
                frame_count=args.frames,
                grain=args.grain,
                seed=args.corpus_seed + i,
            )
        )
    methods = [RefillMethod.parse(spec) for spec in args.methods.split(",") if spec]
    profile = None
    if not args.no_compress:
        q = [int(v) for v in args.quantize.split(",")]
        if len(q) != 3:
            raise ConfigError("--quantize expects QI,QP,QB")
        profile = CompressionProfile(q_i=q[0], q_p=q[1], q_b=q[2], gop=args.gop)
    entries = build_corpus(args.out, scenes, methods, profile=profile, config=cfg)
    print(f"wrote {len(entries)} clips to {args.out}")
    return 0


def _cmd_extract(args: argparse.Namespace) -> int:
    cfg = _build_config(args)
    video = _read_video(args)
    names = frame_feature_names(video.plane_count)
    rows = ["frame," + ",".join(names)]
    for fi, frame in enumerate(video.frames):
        try:
            vec = frame_feature_vector(frame, cfg.radius, cfg.bins)
            rows.append(f"{fi}," + ",".join(f"{v:.12g}" for v in vec))
        except DepthcheckError:
            rows.append(f"{fi}," + ",".join("nan" for _ in names))
    text = "\n".join(rows) + "\n"
    if args.dump_cloud:
        _dump_cloud(video, cfg, args.dump_cloud)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def _dump_cloud(video: VideoSequence, cfg: RunConfig, path: Path) -> None:
    """Write the first frame's luma point cloud as x,y rows for plotting."""
    from .features import build_point_cloud, split_bits, window_stats

    maps = window_stats(split_bits(video.frames[0].planes[0]), cfg.radius)
    cloud = build_point_cloud(maps)
    lines = ["x,y"]
    lines += [f"{x:.12g},{y:.12g}" for x, y in zip(cloud.x, cloud.y)]
    Path(path).write_text("\n".join(lines) + "\n")


def _cmd_train(args: argparse.Namespace) -> int:
    cfg = _build_config(args)
    records = load_corpus(args.manifest, cfg)
    frame_records = None
    if args.frames_manifest:
        frame_records = load_corpus(args.frames_manifest, cfg)
    bundle = train_detector(
        records,
        cfg,
        use_ensemble=not args.no_frame_ensemble,
        frame_records=frame_records,
    )
    Path(args.out).write_bytes(bundle.save())
    print(f"trained on {len(records)} clips, wrote {args.out}")
    return 0


def _cmd_detect(args: argparse.Namespace) -> int:
    if args.server:
        return _detect_remote(args)
    bundle = DetectorBundle.load(Path(args.bundle).read_bytes())
    video = _attach_meta(_read_video(args), args)
    verdict = detect(video, bundle, threshold=args.threshold)
    if args.json:
        doc = {
            "probability": verdict.probability,
            "decision": verdict.decision,
            "threshold": verdict.threshold,
            "features": verdict.features,
        }
        print(json.dumps(doc, sort_keys=True))
        return 0
    record = {
        "decision": verdict.decision,
        "probability": verdict.probability,
        "threshold": verdict.threshold,
    }
    print(json.dumps(record, sort_keys=True))
    print(_diagnostic_table(verdict, video.plane_count))
    return 0


def _diagnostic_table(verdict, plane_count: int) -> str:
    """Human-readable breakdown of the per-video feature vector."""
    from .frames import FRAME_TYPES, plane_names

    f = verdict.features
    word = "synthesized" if verdict.decision else "native"
    lines = [f"verdict: {word} (p={verdict.probability:.4f}, threshold {verdict.threshold:.2f})"]
    lines.append(
        "avg size      "
        + "  ".join(f"{t.value} {f['avg_size_' + t.value]:>10.1f}" for t in FRAME_TYPES)
    )
    head = f"{'ch':<3}{'type':<5}{'mean':>9}{'std':>9}{'prob':>9}{'sw(m)':>9}{'sw(s)':>9}{'sw(p)':>9}{'there':>7}"
    lines.append(head)
    for ch in plane_names(plane_count):
        for t in FRAME_TYPES:
            b = f"{ch}_{t.value}"
            lines.append(
                f"{ch:<3}{t.value:<5}"
                f"{f[b + '_mean']:>9.4f}{f[b + '_std']:>9.4f}{f[b + '_prob']:>9.4f}"
                f"{f[b + '_sw_mean']:>9.4f}{f[b + '_sw_std']:>9.4f}{f[b + '_sw_prob']:>9.4f}"
                f"{f[b + '_present']:>7.0f}"
            )
    lines.append(f"{'ch':<3}{'pair':<5}{'t(mean)':>10}{'t(std)':>10}{'t(prob)':>10}")
    for ch in plane_names(plane_count):
        for a, b in (("I", "P"), ("I", "B"), ("P", "B")):
            base = f"{ch}_{a}{b}"
            lines.append(
                f"{ch:<3}{a}/{b:<3}"
                f"{f[base + '_t_mean']:>10.4f}{f[base + '_t_std']:>10.4f}{f[base + '_t_prob']:>10.4f}"
            )
    return "\n".join(lines)


def _detect_remote(args: argparse.Namespace) -> int:
    import base64

    import httpx

    body = {"video_b64": base64.b64encode(Path(args.input).read_bytes()).decode()}
    if args.meta:
        body["meta_csv"] = Path(args.meta).read_text()
    if args.stream:
        body["stream_b64"] = base64.b64encode(Path(args.stream).read_bytes()).decode()
    if args.threshold is not None:
        body["threshold"] = args.threshold
    reply = httpx.post(args.server.rstrip("/") + "/detect", json=body, timeout=600.0)
    if reply.status_code != 200:
        print(f"server error {reply.status_code}: {reply.text}", file=sys.stderr)
        return 1
    doc = reply.json()
    if args.json:
        print(json.dumps(doc, sort_keys=True))
    else:
        word = "synthesized" if doc["decision"] else "native"
        print(f"{doc['probability']:.6f} {word}")
    return 0


def _report_doc(report: CvReport) -> dict:
    return {
        "folds": dict(zip(report.fold_groups, report.fold_scores)),
        "mean": report.mean_score,
        "std": report.score_std,
    }


def _print_report(report: CvReport) -> None:
    print("group,f1")
    for g, s in zip(report.fold_groups, report.fold_scores):
        print(f"{g},{s:.6f}")
    print(
        f"mean {report.mean_score:.4f} +/- {report.score_std:.4f}"
        " (population std over folds)"
    )


def _grid_values(spec: str) -> tuple[str, list]:
    key, _, raw = spec.partition("=")
    if not key or not raw:
        raise ConfigError("--grid expects KEY=V1,V2,... (dotted keys reach subsections)")
    values = []
    for item in raw.split(","):
        try:
            values.append(json.loads(item))
        except json.JSONDecodeError:
            values.append(item)
    return key, values


def _override(doc: dict, dotted: str, value) -> dict:
    doc = json.loads(json.dumps(doc))
    node = doc
    *front, last = dotted.split(".")
    for part in front:
        if part not in node or not isinstance(node[part], dict):
            raise ConfigError(f"--grid key {dotted!r} does not name a setting")
        node = node[part]
    if last not in node:
        raise ConfigError(f"--grid key {dotted!r} does not name a setting")
    node[last] = value
    return doc


def _cmd_eval(args: argparse.Namespace) -> int:
    cfg = _build_config(args)
    if args.grid:
        key, values = _grid_values(args.grid)
        results = {}
        for value in values:
            sub = RunConfig.from_dict(_override(cfg.to_dict(), key, value))
            records = load_corpus(args.manifest, sub)
            frame_records = None
            if args.frames_manifest:
                frame_records = load_corpus(args.frames_manifest, sub)
            report = cross_validate_detector(
                records,
                sub,
                use_ensemble=not args.no_frame_ensemble,
                frame_records=frame_records,
            )
            results[str(value)] = report
            if not args.json:
                print(
                    f"{key}={value}: {report.mean_score:.4f} +/- {report.score_std:.4f}"
                )
        if args.json:
            print(
                json.dumps(
                    {k: _report_doc(r) for k, r in results.items()}, sort_keys=True
                )
            )
        return 0
    records = load_corpus(args.manifest, cfg)
    frame_records = None
    if args.frames_manifest:
        frame_records = load_corpus(args.frames_manifest, cfg)
    report = cross_validate_detector(
        records,
        cfg,
        use_ensemble=not args.no_frame_ensemble,
        frame_records=frame_records,
    )
    if args.json:
        print(json.dumps(_report_doc(report), sort_keys=True))
    else:
        _print_report(report)
    return 0


def _cmd_parse_stream(args: argparse.Namespace) -> int:
    records = parse_stream(Path(args.input).read_bytes())
    text = write_frame_metadata(records)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_bench(args: argparse.Namespace) -> int:
    cfg = _build_config(args)
    report = benchmark_extraction(
        width=args.width,
        height=args.height,
        bit_depth=args.bit_depth,
        frames=args.frames,
        plane_count=args.planes,
        config=cfg,
        seed=args.bench_seed,
    )
    if args.json:
        print(
            json.dumps(
                {
                    "frames": report.frames,
                    "seconds": report.seconds,
                    "fps": report.fps,
                    "width": report.width,
                    "height": report.height,
                    "bit_depth": report.bit_depth,
                },
                sort_keys=True,
            )
        )
    else:
        print(report.summary())
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    bundle = None
    if args.bundle:
        bundle = DetectorBundle.load(Path(args.bundle).read_bytes())
    uvicorn.run(create_app(bundle=bundle), host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="depthcheck",
        description="Detect synthesized low bits in high-bit-depth video.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="render a labeled corpus of clips")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--scenes", type=int, default=6)
    p.add_argument("--width", type=int, default=64)
    p.add_argument("--height", type=int, default=64)
    p.add_argument("--bit-depth", type=int, default=10)
    p.add_argument("--frames", type=int, default=10)
    p.add_argument("--grain", type=float, default=0.9)
    p.add_argument("--corpus-seed", type=int, default=0)
    p.add_argument(
        "--methods", default="zeros,noise,replicate,dither,smooth",
        help="comma list of refill specs, e.g. noise:seed=3",
    )
    p.add_argument("--quantize", default="0,1,2", help="QI,QP,QB step exponents")
    p.add_argument("--gop", default="IBBP")
    p.add_argument("--no-compress", action="store_true")
    _add_config_flags(p)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("extract", help="per-frame cloud features as CSV")
    p.add_argument("input", type=Path)
    p.add_argument("--raw", help="WIDTHxHEIGHTxDEPTH for headerless planar input")
    p.add_argument("--subsampling", default="420", choices=("420", "422", "444", "mono"))
    p.add_argument("--out", type=Path)
    p.add_argument(
        "--dump-cloud", type=Path,
        help="also write the first frame's luma point cloud as x,y rows",
    )
    _add_config_flags(p)
    p.set_defaults(func=_cmd_extract)

    p = sub.add_parser("train", help="fit the two-stage detector on a corpus")
    p.add_argument("manifest", type=Path)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--no-frame-ensemble", action="store_true")
    p.add_argument(
        "--frames-manifest",
        type=Path,
        help="separate corpus for the frame ensemble (e.g. uncompressed refills)",
    )
    _add_config_flags(p)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("detect", help="judge one clip with a trained bundle")
    p.add_argument("input", type=Path)
    p.add_argument("--bundle", type=Path)
    p.add_argument("--raw", help="WIDTHxHEIGHTxDEPTH for headerless planar input")
    p.add_argument("--subsampling", default="420", choices=("420", "422", "444", "mono"))
    p.add_argument("--meta", type=Path, help="frame type/size CSV sidecar")
    p.add_argument("--stream", type=Path, help="Annex-B bitstream to derive types from")
    p.add_argument("--threshold", type=float)
    p.add_argument("--json", action="store_true")
    p.add_argument("--server", help="base URL of a running service to query instead")
    p.set_defaults(func=_cmd_detect)

    p = sub.add_parser("eval", help="grouped cross-validation on a corpus")
    p.add_argument("manifest", type=Path)
    p.add_argument("--no-frame-ensemble", action="store_true")
    p.add_argument(
        "--frames-manifest",
        type=Path,
        help="separate corpus for the frame ensemble (e.g. uncompressed refills)",
    )
    p.add_argument("--json", action="store_true")
    p.add_argument(
        "--grid",
        help="KEY=V1,V2,... rerun validation per value (e.g. radius=1,2 or forest.trees=100,300)",
    )
    _add_config_flags(p)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("parse-stream", help="frame types and sizes from Annex-B")
    p.add_argument("input", type=Path)
    p.add_argument("--out", type=Path)
    p.set_defaults(func=_cmd_parse_stream)

    p = sub.add_parser("bench", help="time per-frame feature extraction")
    p.add_argument("--width", type=int, default=1920)
    p.add_argument("--height", type=int, default=1080)
    p.add_argument("--bit-depth", type=int, default=10)
    p.add_argument("--frames", type=int, default=8)
    p.add_argument("--planes", type=int, default=3)
    p.add_argument("--bench-seed", type=int, default=0)
    p.add_argument("--json", action="store_true")
    _add_config_flags(p)
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--bundle", type=Path, help="bundle to preload")
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    """Dispatch one invocation. Exit 0 on success, 1 on usage, 2 on bad data."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "detect" and not args.server and not args.bundle:
            parser.error("detect needs --bundle (or --server)")
    except SystemExit as exc:
        # argparse exits 2 on usage problems and 0 for --help
        return 1 if exc.code else 0
    try:
        return args.func(args)
    except DepthcheckError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
