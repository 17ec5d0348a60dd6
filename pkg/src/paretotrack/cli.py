"""Command line entry point.

Subcommands: track, evaluate, profile-latency, search, assoc-debug, bev.
Every flag can also come from a plain key=value config file (--config or the
PARETOTRACK_CONFIG environment variable); keys mirror the long flag names and
explicit flags win.  Output files are written atomically (temp file + rename)
and identical inputs plus seed produce byte-identical outputs.
"""

from __future__ import annotations

import argparse
import io
import os
import sys
import tempfile
from typing import IO, Sequence

import numpy as np

from . import nas
from .assoc import AssociationProblem, solve_exact
from .geometry import Box3D, PointCloud, bev_to_pgm, crop_points, rasterize_bev
from .kitti_io import parse_sequence, write_tracking_results
from .latency import (
    CANDIDATE_OPS,
    LatencyEntry,
    LatencyTable,
    ScriptedClock,
    nominal_cost_ms,
    profile_op,
)
from .metrics import clear_mot, format_report_kv, format_report_table
from .scoring import BaselineScorer, ScorerConfig, ScoreSet
from .tracker import TrackerConfig, run_sequence

CONFIG_ENV_VAR = "PARETOTRACK_CONFIG"


class CliError(Exception):
    """Fatal runtime problem reported with exit status 1."""


def _atomic_write(path: str, content: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(content)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _load_config(path: str) -> dict[str, str]:
    values: dict[str, str] = {}
    try:
        with open(path) as handle:
            for lineno, raw in enumerate(handle, start=1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                key, sep, value = line.partition("=")
                if not sep:
                    raise CliError(f"{path}:{lineno}: expected key=value, got {line!r}")
                values[key.strip()] = value.strip()
    except OSError as exc:
        raise CliError(f"cannot read config {path}: {exc}") from None
    return values


def _merge_config(args: argparse.Namespace, parser_keys: dict[str, type]) -> None:
    """Fill flags the user did not pass from the config file, if any."""
    path = args.config or os.environ.get(CONFIG_ENV_VAR)
    if not path:
        return
    values = _load_config(path)
    unknown = set(values) - set(parser_keys)
    if unknown:
        raise CliError(
            f"unknown config keys: {', '.join(sorted(unknown))} "
            f"(known: {', '.join(sorted(parser_keys))})"
        )
    for key, text in values.items():
        attr = key.replace("-", "_")
        if getattr(args, attr, None) is None:
            conv = parser_keys[key]
            try:
                setattr(args, attr, conv(text))
            except ValueError:
                raise CliError(f"config key {key}: cannot parse {text!r}") from None


def _defaults(args: argparse.Namespace, **defaults) -> None:
    for attr, value in defaults.items():
        if getattr(args, attr, None) is None:
            setattr(args, attr, value)


def _parse_lambdas(text: str) -> list[float]:
    try:
        values = [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise CliError(f"cannot parse lambda list {text!r}") from None
    if not values:
        raise CliError("lambda list is empty")
    return values


def _read_lines(path: str) -> list[str]:
    try:
        with open(path) as handle:
            return handle.readlines()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}") from None


# ---------------------------------------------------------------- track

_TRACK_KEYS = {
    "dets": str, "out": str, "t-birth": int, "t-death": int,
    "w-iou": float, "w-app": float, "w-det": float, "terminal-score": float,
    "feature-dim": int,
}


def _cmd_track(args: argparse.Namespace) -> int:
    _merge_config(args, _TRACK_KEYS)
    _defaults(args, t_birth=3, t_death=5, w_iou=1.0, w_app=1.0, w_det=1.0,
              terminal_score=-0.2, feature_dim=32)
    if not args.dets or not args.out:
        raise CliError("track requires --dets and --out")
    seq = parse_sequence(_read_lines(args.dets))
    scorer = BaselineScorer(ScorerConfig(
        w_iou=args.w_iou, w_app=args.w_app, w_det=args.w_det,
        terminal_score=args.terminal_score, feature_dim=args.feature_dim,
    ))
    cfg = TrackerConfig(t_birth=args.t_birth, t_death=args.t_death)
    tracks = run_sequence(seq, scorer, cfg)
    buf = io.StringIO()
    write_tracking_results(tracks, buf)
    _atomic_write(args.out, buf.getvalue())
    print(f"tracked {len(tracks)} objects -> {args.out}")
    return 0


# ---------------------------------------------------------------- evaluate

_EVAL_KEYS = {"gt": str, "hyp": str, "iou": float}


def _frames_of(path: str):
    seq = parse_sequence(_read_lines(path))
    frames = {}
    for frame, dets in seq.frames.items():
        frames[frame] = [(d.source.track_id, d.box) for d in dets]
    return frames


def _cmd_evaluate(args: argparse.Namespace) -> int:
    _merge_config(args, _EVAL_KEYS)
    _defaults(args, iou=0.5)
    if not args.gt or not args.hyp:
        raise CliError("evaluate requires --gt and --hyp")
    report = clear_mot(_frames_of(args.gt), _frames_of(args.hyp), thresh=args.iou)
    sys.stdout.write(format_report_table(report))
    sys.stdout.write(format_report_kv(report))
    return 0


# ---------------------------------------------------------------- profile-latency

_PROFILE_KEYS = {
    "out": str, "clock": str, "warmup": int, "reps": int,
    "channels": int, "resolution": int,
}


def _busy_workload(cost_ms: float):
    # calibration-free stand-in: loop length proportional to the nominal cost
    iters = max(1, int(cost_ms * 2000))

    def work():
        acc = 0
        for i in range(iters):
            acc += i * i
        return acc

    return work


def _cmd_profile_latency(args: argparse.Namespace) -> int:
    _merge_config(args, _PROFILE_KEYS)
    _defaults(args, clock="synthetic", warmup=10, reps=100, channels=16,
              resolution=32)
    if not args.out:
        raise CliError("profile-latency requires --out")
    if args.clock not in ("synthetic", "real"):
        raise CliError("--clock must be 'synthetic' or 'real'")
    space = nas.init_search_space(nas.SpaceConfig(channels=args.channels,
                                                  resolution=args.resolution))
    table = LatencyTable()
    for kind in space.kinds():
        template = space.op_template(kind)
        for op in CANDIDATE_OPS:
            cfg = template.with_op(op)
            cost = nominal_cost_ms(cfg)
            if args.clock == "synthetic":
                entry = profile_op(cfg, lambda: None,
                                   clock=ScriptedClock([cost]),
                                   warmup=args.warmup, reps=args.reps)
            else:
                entry = profile_op(cfg, _busy_workload(cost),
                                   warmup=args.warmup, reps=args.reps)
            table.add(cfg, entry)
    buf = io.StringIO()
    table.write(buf)
    _atomic_write(args.out, buf.getvalue())
    print(f"profiled {len(table)} configurations -> {args.out}")
    return 0


# ---------------------------------------------------------------- search

_SEARCH_KEYS = {
    "lambdas": str, "out": str, "table": str, "plot-data": str,
    "normal-cells": int, "reduction-cells": int, "nodes": int,
    "branches": int, "channels": int, "resolution": int,
    "epochs": int, "theta-iters": int, "alpha-lr": float, "theta-lr": float,
    "stage2-iters": int, "eval-interval": int,
    "surrogate": str, "theta-dim": int,
}


def _synthetic_table(space) -> LatencyTable:
    table = LatencyTable()
    for kind in space.kinds():
        template = space.op_template(kind)
        for op in CANDIDATE_OPS:
            cfg = template.with_op(op)
            table.add(cfg, LatencyEntry(nominal_cost_ms(cfg), 0.0, 1))
    return table


def emit_plot_data(points: Sequence[nas.ParetoPoint], sink: IO[str]) -> None:
    """Two columns, reciprocal latency then loss, sorted by the first column."""
    sink.write("# 1/latency_ms track_loss\n")
    rows = []
    for p in points:
        if p.latency_ms == 0.0:
            raise ValueError("cannot take the reciprocal of a zero latency")
        rows.append((1.0 / p.latency_ms, p.track_loss))
    for x, y in sorted(rows):
        sink.write(f"{x!r} {y!r}\n")


def format_pareto_line(point: nas.ParetoPoint) -> str:
    return (
        f"lambda={point.lambda_used!r} latency_ms={point.latency_ms!r} "
        f"loss={point.track_loss!r} arch={nas.format_discrete_arch(point.arch)}"
    )


def _cmd_search(args: argparse.Namespace) -> int:
    _merge_config(args, _SEARCH_KEYS)
    _defaults(args, lambdas="0.01,0.1,1,10", normal_cells=1, reduction_cells=1,
              nodes=3, branches=2, channels=16, resolution=32,
              surrogate="op-cost", theta_dim=4)
    if not args.out:
        raise CliError("search requires --out")
    lambdas = _parse_lambdas(args.lambdas)
    space = nas.init_search_space(nas.SpaceConfig(
        normal_cells=args.normal_cells, reduction_cells=args.reduction_cells,
        nodes=args.nodes, branches=args.branches, channels=args.channels,
        resolution=args.resolution,
    ))
    if args.table:
        table = LatencyTable.read(_read_lines(args.table))
    else:
        table = _synthetic_table(space)
    if args.surrogate == "op-cost":
        evaluator = nas.OpCostSurrogate(space, theta_dim=args.theta_dim,
                                        seed=args.seed)
    elif args.surrogate == "quadratic":
        evaluator = nas.QuadraticSurrogate(space, theta_dim=args.theta_dim,
                                           seed=args.seed)
    else:
        raise CliError("--surrogate must be 'op-cost' or 'quadratic'")
    # Budget flags fall back to the library defaults when not given.
    b1 = {k: v for k, v in (("epochs", args.epochs),
                            ("theta_iters", args.theta_iters),
                            ("alpha_lr", args.alpha_lr),
                            ("theta_lr", args.theta_lr)) if v is not None}
    b2 = {k: v for k, v in (("iters", args.stage2_iters),
                            ("eval_interval", args.eval_interval),
                            ("theta_lr", args.theta_lr)) if v is not None}
    front = nas.pareto_sweep(
        space, evaluator, table, lambdas,
        stage1_budget=nas.Stage1Budget(**b1),
        stage2_budget=nas.Stage2Budget(**b2),
        seed=args.seed,
        jobs=args.jobs,
    )
    _atomic_write(args.out, "".join(format_pareto_line(p) + "\n" for p in front))
    if args.plot_data:
        buf = io.StringIO()
        emit_plot_data(front, buf)
        _atomic_write(args.plot_data, buf.getvalue())
    print(f"front of {len(front)} points -> {args.out}")
    return 0


# ---------------------------------------------------------------- assoc-debug

_ASSOC_KEYS = {"scores": str, "random": str}


def _read_scoreset(path: str) -> ScoreSet:
    lines = [l.strip() for l in _read_lines(path)]
    lines = [l for l in lines if l and not l.startswith("#")]
    if not lines or lines[0] != "scoreset v1":
        raise CliError(f"{path}: expected 'scoreset v1' header")
    kv = dict(tok.split("=", 1) for tok in lines[1].split())
    n, m = int(kv["n_prev"]), int(kv["n_curr"])
    def row(text): return [float(x) for x in text.split()] if text else []
    try:
        s_in = row(lines[2].partition(":")[2])
        s_out = row(lines[3].partition(":")[2])
        s_det_prev = row(lines[4].partition(":")[2])
        s_det_curr = row(lines[5].partition(":")[2])
        link_rows = [row(l) for l in lines[6:6 + n]]
    except (IndexError, ValueError) as exc:
        raise CliError(f"{path}: malformed score set ({exc})") from None
    link = np.array(link_rows, dtype=np.float64).reshape(n, m)
    return ScoreSet(s_in, s_out, s_det_prev, s_det_curr, link)


def _cmd_assoc_debug(args: argparse.Namespace) -> int:
    _merge_config(args, _ASSOC_KEYS)
    if bool(args.scores) == bool(args.random):
        raise CliError("assoc-debug requires exactly one of --scores or --random N,M")
    if args.random:
        try:
            n, m = (int(tok) for tok in args.random.split(","))
        except ValueError:
            raise CliError("--random expects 'N,M'") from None
        rng = np.random.default_rng(args.seed)
        scores = ScoreSet(
            rng.uniform(-2, 2, m), rng.uniform(-2, 2, n),
            rng.uniform(-2, 2, n), rng.uniform(-2, 2, m),
            rng.uniform(-2, 2, (n, m)),
        )
    else:
        scores = _read_scoreset(args.scores)
    sol = solve_exact(AssociationProblem(scores))
    out = sys.stdout
    out.write(f"n_prev={scores.n_prev} n_curr={scores.n_curr}\n")
    out.write("s_in: " + " ".join(repr(x) for x in scores.s_in) + "\n")
    out.write("s_out: " + " ".join(repr(x) for x in scores.s_out) + "\n")
    out.write("s_det_prev: " + " ".join(repr(x) for x in scores.s_det_prev) + "\n")
    out.write("s_det_curr: " + " ".join(repr(x) for x in scores.s_det_curr) + "\n")
    for i in range(scores.n_prev):
        out.write("s_link: " + " ".join(repr(x) for x in scores.s_link[i]) + "\n")
    out.write("f_in: " + " ".join(str(x) for x in sol.f_in) + "\n")
    out.write("f_out: " + " ".join(str(x) for x in sol.f_out) + "\n")
    out.write("f_det_prev: " + " ".join(str(x) for x in sol.f_det_prev) + "\n")
    out.write("f_det_curr: " + " ".join(str(x) for x in sol.f_det_curr) + "\n")
    for i in range(scores.n_prev):
        out.write("f_link: " + " ".join(str(x) for x in sol.f_link[i]) + "\n")
    out.write(f"objective={sol.objective!r}\n")
    return 0


# ---------------------------------------------------------------- bev

_BEV_KEYS = {"points": str, "box": str, "rows": int, "cols": int, "out": str}


def _cmd_bev(args: argparse.Namespace) -> int:
    _merge_config(args, _BEV_KEYS)
    _defaults(args, rows=256, cols=256)
    if not args.points or not args.box or not args.out:
        raise CliError("bev requires --points, --box and --out")
    try:
        vals = [float(tok) for tok in args.box.split(",")]
        cx, cy, cz, h, w, l, yaw = vals
    except ValueError:
        raise CliError("--box expects 'cx,cy,cz,height,width,length,yaw'") from None
    pts = []
    for lineno, raw in enumerate(_read_lines(args.points), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            x, y, z = (float(tok) for tok in line.split())
        except ValueError:
            raise CliError(f"{args.points}:{lineno}: expected 'x y z'") from None
        pts.append((x, y, z))
    box = Box3D(center=(cx, cy, cz), size=(h, w, l), yaw=yaw)
    cloud = crop_points(PointCloud(pts), box)
    image = rasterize_bev(cloud, box, resolution=(args.rows, args.cols))
    _atomic_write(args.out, bev_to_pgm(image))
    print(f"rasterized {len(cloud)} points -> {args.out}")
    return 0


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="paretotrack",
        description="Latency-aware multi-object tracking and architecture search.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="key=value config file (flags override)")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--jobs", type=int, default=1,
                       help="worker count; output is identical for any value")

    p = sub.add_parser("track", help="run the tracker over a detection file")
    common(p)
    p.add_argument("--dets")
    p.add_argument("--out")
    p.add_argument("--t-birth", type=int)
    p.add_argument("--t-death", type=int)
    p.add_argument("--w-iou", type=float)
    p.add_argument("--w-app", type=float)
    p.add_argument("--w-det", type=float)
    p.add_argument("--terminal-score", type=float)
    p.add_argument("--feature-dim", type=int)
    p.set_defaults(func=_cmd_track)

    p = sub.add_parser("evaluate", help="CLEAR-MOT evaluation of results vs ground truth")
    common(p)
    p.add_argument("--gt")
    p.add_argument("--hyp")
    p.add_argument("--iou", type=float)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("profile-latency", help="measure per-op latencies into a table")
    common(p)
    p.add_argument("--out")
    p.add_argument("--clock", choices=("synthetic", "real"))
    p.add_argument("--warmup", type=int)
    p.add_argument("--reps", type=int)
    p.add_argument("--channels", type=int)
    p.add_argument("--resolution", type=int)
    p.set_defaults(func=_cmd_profile_latency)

    p = sub.add_parser("search", help="two-stage Pareto sweep over lambda values")
    common(p)
    p.add_argument("--lambdas")
    p.add_argument("--out")
    p.add_argument("--table", help="latency table file; synthetic when omitted")
    p.add_argument("--plot-data", help="also write reciprocal-latency plot rows")
    p.add_argument("--normal-cells", type=int)
    p.add_argument("--reduction-cells", type=int)
    p.add_argument("--nodes", type=int)
    p.add_argument("--branches", type=int)
    p.add_argument("--channels", type=int)
    p.add_argument("--resolution", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--theta-iters", type=int)
    p.add_argument("--alpha-lr", type=float)
    p.add_argument("--theta-lr", type=float)
    p.add_argument("--stage2-iters", type=int)
    p.add_argument("--eval-interval", type=int)
    p.add_argument("--surrogate", choices=("op-cost", "quadratic"))
    p.add_argument("--theta-dim", type=int)
    p.set_defaults(func=_cmd_search)

    p = sub.add_parser("assoc-debug", help="dump one association problem and its solution")
    common(p)
    p.add_argument("--scores", help="score-set file ('scoreset v1' format)")
    p.add_argument("--random", help="generate a random N,M instance")
    p.set_defaults(func=_cmd_assoc_debug)

    p = sub.add_parser("bev", help="rasterize cropped points to a PGM image")
    common(p)
    p.add_argument("--points")
    p.add_argument("--box")
    p.add_argument("--rows", type=int)
    p.add_argument("--cols", type=int)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_bev)

    return parser


def execute(argv: Sequence[str]) -> int:
    parser = build_parser()
    args = parser.parse_args(list(argv))
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, LookupError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(execute(sys.argv[1:]))


if __name__ == "__main__":
    main()
