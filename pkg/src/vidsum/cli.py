"""Command line front end: ``vidsum summarize | eval | report``.

Flags win over ``VIDSUM_*`` environment variables, which win over defaults.
Exit codes: 0 ok, 2 bad flags or empty run, 3 unreadable or too-short source,
4 model or feature fixture problem, 130 interrupted.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
import tempfile
from contextlib import contextmanager
from pathlib import Path

from .errors import EmptySource, ModelError, SourceError, TooFewFrames, TooFewSamples
from .bench import eval_rows
from .ingest import Frame, FrameStream, SourceKind, SourceSpec, open_source
from .render import plan_layout, render_storyboard, save_png
from .report import RunReport, format_table
from .summarize import Method, SummarizerConfig, make_backend, summarize

log = logging.getLogger("vidsum")

EXIT_OK, EXIT_USAGE, EXIT_SOURCE, EXIT_MODEL, EXIT_INTERRUPTED = 0, 2, 3, 4, 130
RAW_SUFFIXES = (".rgb", ".raw")


class UsageError(Exception):
    pass


def _env(name: str, default=None):
    return os.environ.get(f"VIDSUM_{name}", default)


def _size(text: str) -> tuple[int, int]:
    try:
        w, h = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected WIDTHxHEIGHT, got {text!r}") from None
    if w < 1 or h < 1:
        raise argparse.ArgumentTypeError("sizes must be positive")
    return w, h


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma separated list of integers: {text!r}") from None


def _method_list(text: str) -> list[Method]:
    try:
        return [Method(v.strip()) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _add_source_flags(p: argparse.ArgumentParser, required: bool = True) -> None:
    p.add_argument("--input", required=required and _env("INPUT") is None, default=_env("INPUT"),
                   help="video file, image directory, raw rgb24 file, or '-' for raw stdin")
    p.add_argument("--input-kind", choices=["auto", "video", "directory", "raw"], default="auto")
    p.add_argument("--fps", type=float, default=float(_env("FPS", 1.0)), help="sampling rate")
    p.add_argument("--native-fps", type=float,
                   default=float(_env("NATIVE_FPS")) if _env("NATIVE_FPS") else None,
                   help="source frame rate; required for raw input, probed for video")
    p.add_argument("--raw-size", type=_size, default=_size(_env("RAW_SIZE")) if _env("RAW_SIZE") else None,
                   help="WIDTHxHEIGHT of raw rgb24 frames")


def _add_feature_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", default=_env("MODEL"), help="ONNX model file")
    p.add_argument("--model-sha256", default=_env("MODEL_SHA256"))
    p.add_argument("--mock-features", default=_env("MOCK_FEATURES"),
                   help="CSV fixture of per-frame descriptors, used instead of a model")
    p.add_argument("--lambda", dest="lam", type=float, default=float(_env("LAMBDA", 0.0)),
                   help="time smoothing weight in [0, 1]")
    p.add_argument("--seed", type=int, default=None, help="shuffle tie-breaking in clustering")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vidsum", description="Summarize videos into storyboards.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    s = sub.add_parser("summarize", help="write a storyboard collage and JSON sidecar")
    _add_source_flags(s)
    _add_feature_flags(s)
    s.add_argument("--output", required=True, help="collage PNG path; the sidecar gets a .json suffix")
    s.add_argument("--method", type=Method, choices=list(Method), default=Method(_env("METHOD", "inception")),
                   metavar="{time,inception,uid,scda}")
    s.add_argument("--nframes", type=int, default=int(_env("NFRAMES", 16)), help="storyboard size")
    s.add_argument("--tile-size", type=_size, default=_size(_env("TILE_SIZE", "320x180")))
    s.add_argument("--report", help="write a RunReport JSON here")

    e = sub.add_parser("eval", help="FID of storyboards against all frames")
    _add_source_flags(e)
    _add_feature_flags(e)
    e.add_argument("--methods", type=_method_list, default=_method_list(_env("METHODS", "time,inception")))
    e.add_argument("--sizes", type=_int_list, default=_int_list(_env("SIZES", "4,8,16")))
    e.add_argument("--out", help="CSV path (default: stdout)")

    r = sub.add_parser("report", help="per-stage timing table")
    r.add_argument("reports", nargs="*", help="RunReport JSON files to tabulate")
    _add_source_flags(r, required=False)
    _add_feature_flags(r)
    r.add_argument("--method", type=Method, choices=list(Method), default=Method(_env("METHOD", "time")),
                   metavar="{time,inception,uid,scda}")
    r.add_argument("--nframes", type=int, default=int(_env("NFRAMES", 16)))
    r.add_argument("--tile-size", type=_size, default=_size(_env("TILE_SIZE", "320x180")))
    return parser


def source_from_args(args) -> FrameStream:
    path = args.input
    kind = args.input_kind
    if kind == "auto":
        if path == "-" or str(path).lower().endswith(RAW_SUFFIXES):
            kind = "raw"
        elif os.path.isdir(path):
            kind = "directory"
        else:
            kind = "video"
    try:
        if kind == "raw":
            if args.raw_size is None or args.native_fps is None:
                raise UsageError("raw input needs --raw-size and --native-fps")
            w, h = args.raw_size
            spec = SourceSpec(SourceKind.RAW_PIPE, path, args.fps, args.native_fps, height=h, width=w)
        elif kind == "directory":
            spec = SourceSpec(SourceKind.FRAME_DIRECTORY, path, args.fps, args.native_fps or args.fps)
        else:
            spec = SourceSpec(SourceKind.VIDEO_FILE, path, args.fps, args.native_fps)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    stream = open_source(spec)
    if path == "-":
        # stdin is single-pass; keep the frames for the key-frame lookup
        stream = FrameStream.from_frames(list(stream), stream.native_fps)
    return stream


def _config(args, method: Method, n_clusters: int) -> SummarizerConfig:
    try:
        return SummarizerConfig(method=method, n_clusters=n_clusters, lam=args.lam,
                                sample_fps=args.fps, model_path=args.model,
                                mock_features=args.mock_features,
                                model_sha256=args.model_sha256, seed=args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def collect_frames(stream, indices) -> list[Frame]:
    wanted = set(indices)
    found = {}
    for frame in stream:
        if frame.index in wanted:
            found[frame.index] = frame
            if len(found) == len(wanted):
                break
    return [found[i] for i in sorted(wanted)]


@contextmanager
def atomic_outputs(paths):
    """Yield temp paths next to ``paths``; move them into place only on success."""
    temps = []
    try:
        for p in paths:
            p = Path(p)
            p.parent.mkdir(parents=True, exist_ok=True)
            fd, tmp = tempfile.mkstemp(prefix=f".{p.name}.", dir=p.parent)
            os.close(fd)
            temps.append(tmp)
        yield temps
        for tmp, p in zip(temps, paths):
            os.replace(tmp, p)
        temps = []
    finally:
        for tmp in temps:
            if os.path.exists(tmp):
                os.remove(tmp)


def sidecar_path(output) -> Path:
    return Path(output).with_suffix(".json")


def run_pipeline(args, method: Method, output: str | None) -> RunReport:
    """Summarize (and optionally render) one input, returning the timing report."""
    stream = source_from_args(args)
    cfg = _config(args, method, args.nframes)
    backend = make_backend(cfg) if method is not Method.TIME else None
    report = RunReport(method.value)
    sb = summarize(stream, cfg, backend, report)
    with report.stage("render"):
        key_frames = collect_frames(stream, sb.key_frames)
        layout = plan_layout(sb.n_clusters, *args.tile_size)
        image = render_storyboard(key_frames, sb.labels, sb.key_frames, layout)
    if output is not None:
        targets = [Path(output), sidecar_path(output)]
        if getattr(args, "report", None):
            targets.append(Path(args.report))
        with atomic_outputs(targets) as tmp:
            save_png(image, tmp[0])
            Path(tmp[1]).write_text(sb.to_json())
            if len(tmp) > 2:
                report.save(tmp[2])
    return report


def cmd_summarize(args) -> int:
    if sidecar_path(args.output) == Path(args.output):
        raise UsageError("--output must not end in .json")
    report = run_pipeline(args, args.method, args.output)
    log.info("wrote %s (%d frames, %.2fs)", args.output, report.n_frames, report.total)
    return EXIT_OK


def write_eval_csv(rows, fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["method", "storyboard_size", "fid"])
    for method, size, value in rows:
        writer.writerow([method, size, f"{value:.10g}"])


def cmd_eval(args) -> int:
    if not args.methods or not args.sizes:
        raise UsageError("--methods and --sizes must not be empty")
    if min(args.sizes) < 2:
        raise UsageError("storyboard sizes must be >= 2 to fit a covariance")
    cfg = _config(args, Method.INCEPTION, max(args.sizes))
    backend = make_backend(cfg)
    rows = eval_rows(source_from_args(args), args.methods, args.sizes, backend, args.lam, args.seed)
    if args.out:
        with atomic_outputs([args.out]) as (tmp,):
            with open(tmp, "w", newline="") as fh:
                write_eval_csv(rows, fh)
    else:
        write_eval_csv(rows, sys.stdout)
    return EXIT_OK


def cmd_report(args) -> int:
    reports = []
    try:
        reports = [RunReport.load(p) for p in args.reports]
    except (OSError, ValueError, KeyError) as exc:
        raise UsageError(f"cannot read report: {exc}") from exc
    if args.input is not None:
        try:
            reports.append(run_pipeline(args, args.method, None))
        except (EmptySource, TooFewFrames) as exc:
            raise UsageError(f"empty run: {exc}") from exc
    if not reports:
        raise UsageError("nothing to report: pass report files or --input")
    if any(r.n_frames == 0 for r in reports):
        raise UsageError("empty run: a report covers zero frames")
    print(format_table(reports))
    return EXIT_OK


COMMANDS = {"summarize": cmd_summarize, "eval": cmd_eval, "report": cmd_report}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits 2 on bad flags
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"vidsum: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SourceError, TooFewFrames) as exc:
        print(f"vidsum: source error: {exc}", file=sys.stderr)
        return EXIT_SOURCE
    except ModelError as exc:
        print(f"vidsum: model error: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except TooFewSamples as exc:
        print(f"vidsum: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except KeyboardInterrupt:
        print("vidsum: interrupted", file=sys.stderr)
        return EXIT_INTERRUPTED


if __name__ == "__main__":
    sys.exit(main())
