"""Command-line interface: steering, volume estimation and benchmark runs.

Problems come either from a fixture name (`fixture = arm6`) or from explicit
config keys.  Config files are plain `key = value...` text; see
`load_config` in the core module and the README for the full key list.
"""
from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from .core import RandomSource, State, load_config
from .informed import InformedProblem, estimate_volume_ratio
from .planner import CSpaceBoxes, PlanarArm, PlannerConfig, plan
from .samplers import SamplerConfig
from .bench import (ALL_SAMPLERS, BenchSpec, load_fixture, run_levelset_sweep,
                    run_planning_efficiency, run_sampling_efficiency,
                    emit_plot_script)
from . import mtdi


def _as_array(value, joints, key):
    arr = np.atleast_1d(np.asarray(value, dtype=float))
    if arr.size == 1:
        arr = np.full(joints, float(arr[0]))
    if arr.size != joints:
        raise SystemExit(f"config key {key}: expected {joints} values, got {arr.size}")
    return arr


def _problem_from_config(path):
    """Build (problem, world) from a config file or its `fixture` key."""
    limits, extras = load_config(path)
    if "fixture" in extras:
        return load_fixture(str(extras["fixture"]))
    joints = limits.joints
    required = ("x_s_q", "x_s_v", "x_g_q", "x_g_v")
    for key in required:
        if key not in extras:
            raise SystemExit(f"config {path} needs key '{key}' (or a 'fixture' key)")
    x_s = State(_as_array(extras["x_s_q"], joints, "x_s_q"),
                _as_array(extras["x_s_v"], joints, "x_s_v"))
    x_g = State(_as_array(extras["x_g_q"], joints, "x_g_q"),
                _as_array(extras["x_g_v"], joints, "x_g_v"))
    cost_model = str(extras.get("cost_model", "mtdi"))
    c_best = float(extras.get("c_best", math.inf))
    problem = InformedProblem(x_s, x_g, limits, cost_model, c_best)

    world_kind = str(extras.get("world", "none"))
    if world_kind == "none":
        world = CSpaceBoxes(())
    elif world_kind == "boxes":
        rows = extras.get("box", [])
        rows = rows if isinstance(rows, list) and rows and isinstance(rows[0], list) else [rows] if rows else []
        boxes = []
        for row in rows:
            vals = np.asarray(row, dtype=float)
            if vals.size != 2 * joints:
                raise SystemExit(f"box row needs {2 * joints} values (lo then hi per joint)")
            boxes.append((vals[:joints], vals[joints:]))
        world = CSpaceBoxes(tuple(boxes))
    elif world_kind == "arm":
        if "links" not in extras:
            raise SystemExit("world = arm requires a 'links' key")
        links = tuple(np.atleast_1d(np.asarray(extras["links"], dtype=float)))
        rows = extras.get("obstacle", [])
        rows = rows if isinstance(rows, list) and rows and isinstance(rows[0], list) else [rows] if rows else []
        circles = tuple((float(r[0]), float(r[1]), float(r[2])) for r in rows)
        world = PlanarArm(links, circles)
    else:
        raise SystemExit(f"unknown world kind {world_kind!r}")
    return problem, world


def _sampler_config(args, extras=None) -> SamplerConfig:
    extras = extras or {}
    kind = args.sampler or str(extras.get("sampler", "hnr"))
    return SamplerConfig(kind=kind.lower())


def cmd_steer(args):
    problem, _ = _problem_from_config(args.config)
    traj = mtdi.mtdi_steer(problem.x_s, problem.x_g, problem.limits)
    print(f"min time: {traj.duration:.9f} s")
    for i, (dt, acc) in enumerate(traj.profile.segments):
        acc_str = " ".join(f"{a:+.6f}" for a in acc)
        print(f"segment {i}: dt={dt:.9f}  accel=[{acc_str}]")
    return 0


def cmd_volume(args):
    problem, _ = _problem_from_config(args.config)
    if math.isinf(problem.c_best):
        print("c_best is inf; volume ratio is 1 by definition", file=sys.stderr)
    est = estimate_volume_ratio(problem, args.n, RandomSource(args.seed))
    print(f"volume ratio: {est.ratio:.6g} +- {est.stderr:.3g} "
          f"({est.accepted}/{est.total} accepted)")
    return 0


def cmd_plan(args):
    problem, world = _problem_from_config(args.config)
    cfg = PlannerConfig(
        max_iterations=args.iterations,
        max_wall_time=args.wall_time_s,
        sampler=_sampler_config(args),
    )
    result = plan(problem, world, cfg, RandomSource(args.seed))
    print(f"solved: {result.solved}")
    print(f"c_best: {result.c_best:.6g}")
    print(f"iterations: {result.iterations}  nodes: {result.nodes}  "
          f"samples: {result.samples_drawn}")
    print(f"sampler time: {result.sampler_time:.3f} s")
    for t, it, c in result.timeline:
        print(f"  improvement @ {t:.3f} s (iter {it}): {c:.6g}")
    return 0 if result.solved else 1


def _bench_spec(args, experiment) -> BenchSpec:
    samplers = tuple(s.lower() for s in (args.samplers.split(",") if args.samplers else ALL_SAMPLERS))
    seeds = tuple(range(args.trials))
    return BenchSpec(
        experiment=experiment,
        problems=tuple(args.problems.split(",")) if args.problems else (),
        samplers=samplers,
        samples_per_point=args.samples_per_point,
        seeds=seeds,
        seed=args.seed,
        wall_time_s=args.wall_time_s,
        cell_wall_time_s=args.cell_wall_time_s,
        out_dir=args.out,
        workers=args.workers,
    )


def cmd_sample_bench(args):
    spec = _bench_spec(args, "sampling_efficiency")
    sweep = run_levelset_sweep(spec)
    path = run_sampling_efficiency(spec)
    s1 = emit_plot_script([sweep], "levelset_sweep", f"{args.out}/plot_levelset_sweep.py")
    s2 = emit_plot_script([path], "sampling_efficiency", f"{args.out}/plot_sampling_efficiency.py")
    print(f"wrote {sweep}\nwrote {path}\nwrote {s1}\nwrote {s2}")
    return 0


def cmd_plan_bench(args):
    spec = _bench_spec(args, "planning_efficiency")
    path = run_planning_efficiency(spec)
    script = emit_plot_script([path], "planning_efficiency", f"{args.out}/plot_planning_efficiency.py")
    print(f"wrote {path}\nwrote {script}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="chainplan",
                                     description="MCMC-based informed sampling and planning")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default=".")
        p.add_argument("--trials", type=int, default=10)
        p.add_argument("--wall-time-s", dest="wall_time_s", type=float, default=60.0)
        p.add_argument("--cell-wall-time-s", dest="cell_wall_time_s", type=float, default=120.0)
        p.add_argument("--samplers", default=None, help="comma list, e.g. rs,hnr")
        p.add_argument("--problems", default=None, help="comma list of fixture names")
        p.add_argument("--samples-per-point", dest="samples_per_point", type=int, default=5000)
        p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("steer", help="print the min-time profile for a state pair")
    p.add_argument("config")
    p.set_defaults(func=cmd_steer)

    p = sub.add_parser("volume", help="estimate the informed-set volume ratio")
    p.add_argument("config")
    p.add_argument("--n", type=int, default=100000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_volume)

    p = sub.add_parser("plan", help="run the informed RRT* planner once")
    p.add_argument("config")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sampler", default=None)
    p.add_argument("--iterations", type=int, default=10 ** 9)
    p.add_argument("--wall-time-s", dest="wall_time_s", type=float, default=30.0)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("sample-bench", help="sampling-efficiency experiment (CSV + plots)")
    p.add_argument("config", nargs="?", default=None)
    add_common(p)
    p.set_defaults(func=cmd_sample_bench)

    p = sub.add_parser("plan-bench", help="planning-efficiency experiment (CSV + plots)")
    p.add_argument("config", nargs="?", default=None)
    add_common(p)
    p.set_defaults(func=cmd_plan_bench)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
