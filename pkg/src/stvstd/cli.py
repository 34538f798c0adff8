"""Command-line front end: ``stvstd synth|cluster|eval|attrs``.

Exit codes: 0 success, 1 internal error, 2 input or usage error.
Machine-readable results go to stdout; logs and summaries go to stderr.
Log level comes from the ``STVSTD_LOG`` environment variable.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import fields
from pathlib import Path
from typing import Callable, Iterable, Sequence

from . import __version__
from .attributes import annotate_video, attribute_rows
from .clustering import cluster_video
from .errors import InputError, StvstdError
from .evaluation import ic15_frame_eval, stdm
from .formats import (
    dumps,
    load_detections,
    load_ground_truth,
    serialize_detections,
    serialize_ground_truth,
    serialize_tracks,
)
from .model import NOISE_RULES, SPATIAL_MODES, ClusterConfig, MatchConfig
from .synth import ScenarioParams, generate

log = logging.getLogger("stvstd")

EXIT_OK, EXIT_INTERNAL, EXIT_INPUT = 0, 1, 2


class UsageError(InputError):
    pass


def _setup_logging() -> None:
    level = os.environ.get("STVSTD_LOG", "WARNING").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )


def _unit(name: str, lo_open: bool) -> Callable[[str], float]:
    def conv(s: str) -> float:
        try:
            v = float(s)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{name}: not a number: {s!r}") from None
        ok = (0.0 < v < 1.0) if lo_open else (0.0 <= v <= 1.0)
        if not ok:
            raise argparse.ArgumentTypeError(f"{name} out of range: {v}")
        return v

    return conv


def _positive_int(s: str) -> int:
    try:
        v = int(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {s!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1: {v}")
    return v


def _json_files(path: Path) -> list[Path]:
    if path.is_dir():
        files = sorted(p for p in path.glob("*.json") if p.is_file())
        if not files:
            raise InputError(f"no .json files in {path}")
        return files
    if not path.exists():
        raise InputError(f"no such file: {path}")
    return [path]


def _pmap(fn: Callable, items: Sequence, jobs: int) -> list:
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(jobs, len(items))) as pool:
        return list(pool.map(fn, items))


# -- synth ------------------------------------------------------------------


def cmd_synth(args: argparse.Namespace) -> int:
    out = Path(args.out)
    base = dict(
        n_tracks=args.n_tracks, frame_count=args.frame_count,
        arena_width=args.arena[0], arena_height=args.arena[1],
        box_min=args.box_size[0], box_max=args.box_size[1], max_angle=args.max_angle,
        min_lifetime=args.min_lifetime, motion_sigma=args.motion_sigma,
        jitter_sigma=args.jitter, dropout=args.dropout, fp_rate=args.fp_rate,
        dup_prob=args.dup_prob,
        true_conf_min=args.true_conf[0], true_conf_max=args.true_conf[1],
        false_conf_min=args.false_conf[0], false_conf_max=args.false_conf[1],
    )
    try:
        params = [
            ScenarioParams(
                seed=args.seed + i,
                video_id=args.video_id if args.videos == 1 else f"{args.video_id}_{i:03d}",
                **base,
            )
            for i in range(args.videos)
        ]
    except ValueError as e:
        raise UsageError(str(e)) from None

    (out / "gt").mkdir(parents=True, exist_ok=True)
    (out / "detections").mkdir(parents=True, exist_ok=True)
    for p in params:
        gt, dets = generate(p)
        (out / "gt" / f"{p.video_id}.json").write_bytes(serialize_ground_truth(gt))
        (out / "detections" / f"{p.video_id}.json").write_bytes(serialize_detections(dets))
    sidecar = {"videos": [p.to_dict() for p in params]}
    (out / "params.json").write_text(dumps(sidecar), encoding="utf-8")
    print(f"synth: wrote {len(params)} video(s) to {out}", file=sys.stderr)
    return EXIT_OK


# -- cluster ----------------------------------------------------------------


def _cluster_one(job: tuple[Path, ClusterConfig]) -> tuple[str, bytes, int, int]:
    path, cfg = job
    dets = load_detections(path)
    tracks, noise = cluster_video(dets, cfg)
    return dets.video_id, serialize_tracks(tracks, dets.video_id), len(tracks), len(noise)


def cmd_cluster(args: argparse.Namespace) -> int:
    try:
        cfg = ClusterConfig(args.eps, args.tau_d, args.tau_l, args.tau_c, args.noise_rule)
    except ValueError as e:
        raise UsageError(str(e)) from None
    src, dst = Path(args.input), Path(args.output)
    files = _json_files(src)
    results = _pmap(_cluster_one, [(f, cfg) for f in files], args.jobs)
    if src.is_dir():
        dst.mkdir(parents=True, exist_ok=True)
        for f, (_, data, _, _) in zip(files, results):
            (dst / f.name).write_bytes(data)
    else:
        if dst.parent != Path(""):
            dst.parent.mkdir(parents=True, exist_ok=True)
        dst.write_bytes(results[0][1])
    for vid, _, n_tracks, n_noise in results:
        print(f"cluster: {vid}: {n_tracks} tracks, {n_noise} noise points", file=sys.stderr)
    return EXIT_OK


# -- eval -------------------------------------------------------------------


def _load_videos(path: Path, jobs: int):
    return _pmap(load_ground_truth, _json_files(path), jobs)


def _round_floats(obj, digits: int = 4):
    if isinstance(obj, float):
        return round(obj, digits)
    if isinstance(obj, dict):
        return {k: _round_floats(v, digits) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_round_floats(v, digits) for v in obj]
    return obj


def cmd_eval(args: argparse.Namespace) -> int:
    gt = _load_videos(Path(args.gt), args.jobs)
    pred = _load_videos(Path(args.pred), args.jobs)
    if args.protocol == "ic15":
        if args.theta_r is not None or args.alpha is not None or args.spatial is not None:
            raise UsageError("--theta-r, --alpha and --spatial apply to the stdm protocol only")
        theta = 0.5 if args.theta_l is None else args.theta_l
        doc = ic15_frame_eval(gt, pred, theta).to_dict(theta)
    else:
        cfg = MatchConfig(
            0.5 if args.theta_l is None else args.theta_l,
            0.5 if args.theta_r is None else args.theta_r,
            0.5 if args.alpha is None else args.alpha,
            args.spatial or "mean",
        )
        doc = stdm(gt, pred, cfg).to_dict()
    sys.stdout.write(dumps(_round_floats(doc), digits=4))
    return EXIT_OK


# -- attrs ------------------------------------------------------------------


def cmd_attrs(args: argparse.Namespace) -> int:
    src = Path(args.gt)
    gt = load_ground_truth(src)
    if args.csv:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["track_id", "frame", "density", "scale", "lifecycle"])
        w.writerows(attribute_rows(gt))
        Path(args.csv).write_text(buf.getvalue(), encoding="utf-8")
        print(f"attrs: wrote {buf.getvalue().count(chr(10)) - 1} rows to {args.csv}", file=sys.stderr)
    else:
        dst = Path(args.output) if args.output else src
        dst.write_bytes(serialize_ground_truth(annotate_video(gt)))
        print(f"attrs: annotated {len(gt.tracks)} tracks into {dst}", file=sys.stderr)
    return EXIT_OK


# -- parser -----------------------------------------------------------------


def _pair(conv):
    return {"nargs": 2, "type": conv}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="stvstd", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    d = ScenarioParams()
    sp = sub.add_parser("synth", help="generate a synthetic ground-truth/detections pair")
    sp.add_argument("out", help="output directory")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--videos", type=_positive_int, default=1)
    sp.add_argument("--video-id", default=d.video_id)
    sp.add_argument("--n-tracks", type=int, default=d.n_tracks)
    sp.add_argument("--frame-count", type=_positive_int, default=d.frame_count)
    sp.add_argument("--arena", **_pair(float), default=[d.arena_width, d.arena_height], metavar=("W", "H"))
    sp.add_argument("--box-size", **_pair(float), default=[d.box_min, d.box_max], metavar=("MIN", "MAX"))
    sp.add_argument("--max-angle", type=float, default=d.max_angle)
    sp.add_argument("--min-lifetime", type=_positive_int, default=d.min_lifetime)
    sp.add_argument("--motion-sigma", type=float, default=d.motion_sigma)
    sp.add_argument("--jitter", type=float, default=d.jitter_sigma)
    sp.add_argument("--dropout", type=_unit("dropout", False), default=d.dropout)
    sp.add_argument("--fp-rate", type=float, default=d.fp_rate)
    sp.add_argument("--dup-prob", type=_unit("dup-prob", False), default=d.dup_prob)
    sp.add_argument("--true-conf", **_pair(float), default=[d.true_conf_min, d.true_conf_max], metavar=("MIN", "MAX"))
    sp.add_argument("--false-conf", **_pair(float), default=[d.false_conf_min, d.false_conf_max], metavar=("MIN", "MAX"))
    sp.set_defaults(func=cmd_synth)

    c = ClusterConfig()
    cp = sub.add_parser("cluster", help="group per-frame detections into tracks")
    cp.add_argument("input", help="detections file or directory")
    cp.add_argument("output", help="tracks file or directory")
    cp.add_argument("--eps", type=_positive_int, default=c.eps, help="look-back window in frames")
    cp.add_argument("--tau-d", type=_unit("tau-d", False), default=c.tau_d)
    cp.add_argument("--tau-l", type=_positive_int, default=c.tau_l)
    cp.add_argument("--tau-c", type=_unit("tau-c", False), default=c.tau_c)
    cp.add_argument("--noise-rule", choices=NOISE_RULES, default=c.noise_rule)
    cp.add_argument("--jobs", type=_positive_int, default=1)
    cp.set_defaults(func=cmd_cluster)

    ep = sub.add_parser("eval", help="score tracks against ground truth")
    ep.add_argument("gt", help="ground-truth file or directory")
    ep.add_argument("pred", help="predicted tracks file or directory")
    ep.add_argument("--protocol", choices=("stdm", "ic15"), default="stdm")
    ep.add_argument("--theta-l", type=_unit("theta-l", True), default=None)
    ep.add_argument("--theta-r", type=_unit("theta-r", True), default=None)
    ep.add_argument("--alpha", type=_unit("alpha", True), default=None)
    ep.add_argument("--spatial", choices=SPATIAL_MODES, default=None)
    ep.add_argument("--jobs", type=_positive_int, default=1)
    ep.set_defaults(func=cmd_eval)

    tp = sub.add_parser("attrs", help="label density, scale and lifecycle")
    tp.add_argument("gt", help="ground-truth file")
    tp.add_argument("output", nargs="?", help="annotated output (default: in place)")
    tp.add_argument("--csv", help="write a CSV summary here instead of annotating")
    tp.set_defaults(func=cmd_attrs)
    return ap


def main(argv: Iterable[str] | None = None) -> int:
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(None if argv is None else list(argv))
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.func(args)
    except (StvstdError, ValueError) as e:
        print(f"stvstd {args.command}: error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as e:
        print(f"stvstd {args.command}: error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except Exception:
        log.exception("internal error")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
