"""Benchmark harness: sampling-efficiency and planning-efficiency runs.

Reproduces the level-set volume sweep, the time-per-sample comparison and
the anytime planning comparison as CSV files plus standalone plot scripts.
Cells are independent (problem, sampler, seed) units, so the planning runs
fan out over a process pool and merge rows in deterministic order.
"""
from __future__ import annotations

import math
import multiprocessing
import platform
import time
import zlib
from dataclasses import dataclass, field, replace

import numpy as np

from .core import KinodynamicLimits, RandomSource, State
from .informed import InformedProblem, estimate_volume_ratio
from .samplers import (ChainState, SamplerConfig, WallClockExceeded,
                       hrs_sample, informed_sample, rejection_sample)
from .planner import CSpaceBoxes, PlanarArm, PlannerConfig, collision_free_state, plan
from . import mtdi

ALL_SAMPLERS = ("rs", "hrs", "mh", "hnr")


class NoSuchFixture(KeyError):
    pass


def _key(name: str) -> int:
    """Stable integer key for seed derivation (process-independent)."""
    return zlib.crc32(name.encode("utf-8"))


# ---------------------------------------------------------------------------
# fixtures
#
# The planning problems are planar-chain analogues with matched state-space
# dimensions (6/12/14-D) and the zero-vs-nonzero goal-velocity structure;
# every robot uses |a_max| = 1 rad/s^2.


def _arm_limits(joints: int, v_max: float = 1.0) -> KinodynamicLimits:
    return KinodynamicLimits(
        q_min=np.full(joints, -math.pi),
        q_max=np.full(joints, math.pi),
        v_max=np.full(joints, v_max),
        a_max=np.full(joints, 1.0),
    )


def fixture_euclid2d():
    """Euclidean uniformity fixture: 2-D state, PHS inside the box."""
    limits = KinodynamicLimits(q_min=[-1.0], q_max=[5.0], v_max=[2.0], a_max=[1.0])
    problem = InformedProblem(State([0.0], [0.0]), State([4.0], [0.0]),
                              limits, "euclidean", 5.0)
    return problem, None


def _synthetic_mtdi(joints: int):
    limits = _arm_limits(joints, v_max=2.0)
    span = 0.75 * math.pi
    q_s = np.array([-span * (1.0 - 0.08 * j) for j in range(joints)])
    q_g = np.array([span * (1.0 - 0.06 * j) for j in range(joints)])
    problem = InformedProblem(State(q_s, np.zeros(joints)), State(q_g, np.zeros(joints)),
                              limits, "mtdi", math.inf)
    return problem, None


def fixture_mtdi4d():
    return _synthetic_mtdi(2)


def fixture_mtdi12d():
    return _synthetic_mtdi(6)


def fixture_arm3():
    """Problem 1': 3-joint planar arm, rest-to-rest, two circular obstacles."""
    limits = _arm_limits(3)
    x_s = State([-1.2, 0.6, 0.4], [0.0, 0.0, 0.0])
    x_g = State([1.1, -0.5, -0.3], [0.0, 0.0, 0.0])
    problem = InformedProblem(x_s, x_g, limits, "mtdi", math.inf)
    world = PlanarArm(link_lengths=(1.0, 0.8, 0.6),
                      circles=((2.45, 0.0, 0.3), (1.7, 1.15, 0.22)))
    return problem, world


def fixture_arm6():
    """Problem 2': 6-joint chain hammering into a wall, nonzero goal velocity."""
    limits = _arm_limits(6)
    x_s = State([-1.4, 0.9, 0.7, 0.5, -0.4, 0.3], np.zeros(6))
    # goal: arm stretched toward the wall, tip moving at it
    x_g = State([0.12, -0.1, 0.08, -0.06, 0.05, -0.04],
                [0.55, 0.3, 0.2, 0.1, 0.05, 0.05])
    problem = InformedProblem(x_s, x_g, limits, "mtdi", math.inf)
    wall_x = 3.25
    circles = tuple((wall_x, y, 0.18) for y in np.linspace(-2.0, 2.0, 11))
    circles += ((2.65, -1.0, 0.28),)   # blocks the direct downward sweep
    world = PlanarArm(link_lengths=(0.5,) * 6, circles=circles)
    return problem, world


def fixture_arm7():
    """Problem 3': 7-joint chain sweep with a large mid-swing reconfiguration.

    The extended arm cannot pass the high obstacle, so the optimal motion
    curls in, swings past and re-extends; the fast lateral tip velocity at
    the goal leaves only a narrow arrival cone in velocity space.
    """
    limits = _arm_limits(7)
    x_s = State([0.15, 0.1, -0.1, 0.08, -0.06, 0.05, -0.04], np.zeros(7))
    x_g = State([2.2, -0.3, 0.25, -0.2, 0.15, -0.1, 0.1],
                [-0.81, -0.36, -0.27, -0.18, -0.144, -0.09, -0.072])
    problem = InformedProblem(x_s, x_g, limits, "mtdi", math.inf)
    world = PlanarArm(link_lengths=(0.45,) * 7,
                      circles=((1.2, 2.6, 0.7),))
    return problem, world


FIXTURES = {
    "euclid2d": fixture_euclid2d,
    "mtdi4d": fixture_mtdi4d,
    "mtdi12d": fixture_mtdi12d,
    "arm3": fixture_arm3,
    "arm6": fixture_arm6,
    "arm7": fixture_arm7,
}


def load_fixture(name: str):
    try:
        return FIXTURES[name]()
    except KeyError:
        raise NoSuchFixture(f"unknown fixture {name!r}; have {sorted(FIXTURES)}") from None


# ---------------------------------------------------------------------------
# bench spec and CSV plumbing


@dataclass(frozen=True)
class BenchSpec:
    experiment: str                       # levelset_sweep | sampling_efficiency | planning_efficiency
    problems: tuple = ()
    samplers: tuple = ALL_SAMPLERS
    samples_per_point: int = 5000
    volume_draws: int = 100000
    ladder: tuple = (2.0, 1.75, 1.5, 1.3, 1.15, 1.05)
    seeds: tuple = (0,)
    seed: int = 0
    wall_time_s: float = 60.0
    cell_wall_time_s: float = 120.0
    out_dir: str = "."
    workers: int = 1
    planner: PlannerConfig = field(default_factory=PlannerConfig)

    def __post_init__(self):
        if self.samples_per_point < 1:
            raise ValueError("samples_per_point must be >= 1")
        if len(self.seeds) < 1:
            raise ValueError("need at least one seed")


def _csv_header(lines: list[str], columns: list[str]) -> str:
    meta = "".join(f"# {ln}\n" for ln in lines)
    return meta + ",".join(columns) + "\n"


def _host_line() -> str:
    return f"host: {platform.machine()} {platform.system()} python{platform.python_version()}"


def _fmt(x) -> str:
    if isinstance(x, float):
        if math.isinf(x):
            return "inf"
        return repr(x)
    return str(x)


def write_csv(path, header_lines, columns, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(_csv_header(header_lines, columns))
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


# ---------------------------------------------------------------------------
# experiment: level-set volume sweep


def run_levelset_sweep(spec: BenchSpec, out_path=None) -> str:
    """Volume-ratio estimates along a geometric c_best ladder, per dimension."""
    problems = spec.problems or ("mtdi4d", "mtdi12d")
    out_path = out_path or f"{spec.out_dir}/levelset_sweep.csv"
    rows = []
    for name in problems:
        problem, _ = load_fixture(name)
        c_star = problem.direct_cost
        for factor in spec.ladder:
            for seed in spec.seeds:
                rand = RandomSource(spec.seed).derive(_key(name), int(factor * 1e6), seed)
                est = estimate_volume_ratio(problem.with_best(factor * c_star),
                                            spec.volume_draws, rand)
                rows.append((name, problem.limits.dim, _fmt(float(factor)), seed,
                             est.ratio, est.stderr, est.accepted, est.total))
    write_csv(out_path,
              ["chainplan levelset_sweep", _host_line(),
               f"volume_draws: {spec.volume_draws}", f"base_seed: {spec.seed}"],
              ["fixture", "dimension", "c_best_over_c_star", "seed",
               "volume_ratio", "stderr", "accepted", "total"],
              rows)
    return out_path


# ---------------------------------------------------------------------------
# experiment: sampling efficiency


def _time_sampler_cell(problem: InformedProblem, kind: str, n: int,
                       rand: RandomSource, deadline: float):
    """Wall time per accepted sample; RS also reports its acceptance rate."""
    cfg = SamplerConfig(kind=kind)
    chain = ChainState(cfg.pool_capacity)
    times = []
    attempts = 0
    status = "ok"
    try:
        for _ in range(n):
            t0 = time.perf_counter_ns()
            if kind == "rs":
                _, used = rejection_sample(problem, rand, deadline=deadline)
                attempts += used
            elif kind == "hrs":
                hrs_sample(problem, rand, deadline=deadline)
            else:
                informed_sample(chain, problem, cfg, rand, deadline=deadline)
            times.append(time.perf_counter_ns() - t0)
    except WallClockExceeded:
        status = "incomplete"
    return times, attempts, status


def run_sampling_efficiency(spec: BenchSpec, out_path=None) -> str:
    """Mean time per accepted informed sample across the c_best ladder.

    The volume-ratio column in every row of a (fixture, factor) cell comes
    from the rejection sampler's observed acceptance rate in that same cell.
    """
    problems = spec.problems or ("mtdi4d", "mtdi12d")
    out_path = out_path or f"{spec.out_dir}/sampling_efficiency.csv"
    rows = []
    for name in problems:
        base, _ = load_fixture(name)
        c_star = base.direct_cost
        for factor in spec.ladder:
            problem = base.with_best(factor * c_star)
            cell: dict[str, tuple] = {}
            ratio = math.nan
            for kind in spec.samplers:
                rand = RandomSource(spec.seed).derive(
                    _key(name), int(factor * 1e6), _key(kind))
                deadline = time.perf_counter() + spec.cell_wall_time_s
                times, attempts, status = _time_sampler_cell(
                    problem, kind, spec.samples_per_point, rand, deadline)
                cell[kind] = (times, status)
                if kind == "rs" and attempts:
                    ratio = len(times) / attempts
            for kind in spec.samplers:
                times, status = cell[kind]
                mean_ns = int(np.mean(times)) if times else -1
                std_ns = int(np.std(times)) if times else -1
                rows.append((name, base.limits.dim, _fmt(float(factor)), kind,
                             _fmt(ratio), mean_ns, std_ns, len(times), status))
    write_csv(out_path,
              ["chainplan sampling_efficiency", _host_line(),
               f"samples_per_point: {spec.samples_per_point}",
               f"cell_wall_time_s: {spec.cell_wall_time_s}",
               "volume_ratio column: rejection-sampler acceptance rate of the cell",
               f"base_seed: {spec.seed}"],
              ["fixture", "dimension", "c_best_over_c_star", "sampler",
               "volume_ratio", "mean_ns_per_sample", "std_ns", "samples", "status"],
              rows)
    return out_path


# ---------------------------------------------------------------------------
# experiment: planning efficiency


def _planning_cell(args):
    fixture, kind, seed, wall_time_s, base_seed, planner_cfg = args
    problem, world = load_fixture(fixture)
    cfg = replace(planner_cfg,
                  max_iterations=10 ** 9,
                  max_wall_time=wall_time_s,
                  sampler=replace(planner_cfg.sampler, kind=kind))
    rand = RandomSource(base_seed).derive(_key(fixture), _key(kind), seed)
    result = plan(problem, world, cfg, rand)
    events = [(t, c) for t, _, c in result.timeline]
    return fixture, kind, seed, result.solved, result.c_best, events, result.iterations


def run_planning_efficiency(spec: BenchSpec, out_path=None) -> str:
    """Anytime curves: c_best improvements against wall time, per cell.

    Ratios are normalized by the best cost any run found for the problem
    (recorded in the header); unsolved runs yield a single infinite-ratio row.
    """
    problems = spec.problems or ("arm3", "arm6", "arm7")
    out_path = out_path or f"{spec.out_dir}/planning_efficiency.csv"
    cells = [(f, k, s, spec.wall_time_s, spec.seed, spec.planner)
             for f in problems for k in spec.samplers for s in spec.seeds]
    if spec.workers > 1:
        with multiprocessing.Pool(spec.workers) as pool:
            outcomes = pool.map(_planning_cell, cells)
    else:
        outcomes = [_planning_cell(c) for c in cells]

    best_ref: dict[str, float] = {}
    for fixture, _, _, solved, c_best, _, _ in outcomes:
        if solved:
            best_ref[fixture] = min(best_ref.get(fixture, math.inf), c_best)

    rows = []
    for fixture, kind, seed, solved, c_best, events, iters in sorted(
            outcomes, key=lambda o: (o[0], o[1], o[2])):
        ref = best_ref.get(fixture, math.nan)
        if not solved:
            rows.append((fixture, kind, seed, _fmt(spec.wall_time_s), _fmt(math.inf),
                         _fmt(math.inf), iters))
            continue
        for t, c in events:
            rows.append((fixture, kind, seed, _fmt(t), _fmt(c), _fmt(c / ref), iters))
    write_csv(out_path,
              ["chainplan planning_efficiency", _host_line(),
               f"wall_time_s: {spec.wall_time_s}", f"base_seed: {spec.seed}",
               "normalization: c_star_ref = best cost found by any run of the problem",
               *(f"c_star_ref {f}: {_fmt(best_ref[f])}" for f in sorted(best_ref))],
              ["problem", "sampler", "seed", "wall_time_s", "c_best", "ratio_to_ref",
               "iterations"],
              rows)
    return out_path


# ---------------------------------------------------------------------------
# plot scripts


_PLOT_TEMPLATES = {
    "levelset_sweep": '''\
#!/usr/bin/env python3
"""Render the level-set sweep: volume ratio vs c_best/c*, one line per dimension."""
import csv
import math
from collections import defaultdict

import matplotlib.pyplot as plt

PATHS = @@PATHS@@

series = defaultdict(list)
for path in PATHS:
    with open(path) as fh:
        rows = [r for r in fh if not r.startswith("#")]
    for row in csv.DictReader(rows):
        key = f"{row['fixture']} ({row['dimension']}-D)"
        series[key].append((float(row["c_best_over_c_star"]), float(row["volume_ratio"])))

fig, ax = plt.subplots(figsize=(5, 4))
for key in sorted(series):
    pts = sorted(series[key])
    ax.plot([p[0] for p in pts], [max(p[1], 1e-12) for p in pts], marker="o", label=key)
ax.set_yscale("log")
ax.set_xlabel("c_best / c*")
ax.set_ylabel("informed-set volume ratio")
ax.legend()
fig.tight_layout()
fig.savefig("levelset_sweep.png", dpi=150)
print("wrote levelset_sweep.png")
''',
    "sampling_efficiency": '''\
#!/usr/bin/env python3
"""Render time per informed sample vs volume ratio, log-log, per dimension."""
import csv
from collections import defaultdict

import matplotlib.pyplot as plt

PATHS = @@PATHS@@

cells = defaultdict(list)
for path in PATHS:
    with open(path) as fh:
        rows = [r for r in fh if not r.startswith("#")]
    for row in csv.DictReader(rows):
        if row["status"] != "ok" or row["mean_ns_per_sample"] == "-1":
            continue
        cells[(row["dimension"], row["sampler"])].append(
            (float(row["volume_ratio"]), float(row["mean_ns_per_sample"])))

dims = sorted({d for d, _ in cells})
fig, axes = plt.subplots(1, max(len(dims), 1), figsize=(5 * max(len(dims), 1), 4))
if len(dims) <= 1:
    axes = [axes]
for ax, dim in zip(axes, dims):
    for sampler in sorted({s for d, s in cells if d == dim}):
        pts = sorted(cells[(dim, sampler)])
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=sampler)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("informed-set volume ratio")
    ax.set_ylabel("mean ns per sample")
    ax.set_title(f"{dim}-D state space")
    ax.legend()
fig.tight_layout()
fig.savefig("sampling_efficiency.png", dpi=150)
print("wrote sampling_efficiency.png")
''',
    "planning_efficiency": '''\
#!/usr/bin/env python3
"""Render anytime curves: best-cost ratio vs planning time, per problem."""
import csv
import math
from collections import defaultdict

import matplotlib.pyplot as plt

PATHS = @@PATHS@@

runs = defaultdict(list)
for path in PATHS:
    with open(path) as fh:
        rows = [r for r in fh if not r.startswith("#")]
    for row in csv.DictReader(rows):
        ratio = float(row["ratio_to_ref"])
        if math.isinf(ratio):
            continue
        runs[(row["problem"], row["sampler"], row["seed"])].append(
            (float(row["wall_time_s"]), ratio))

problems = sorted({p for p, _, _ in runs})
fig, axes = plt.subplots(1, max(len(problems), 1), figsize=(5 * max(len(problems), 1), 4))
if len(problems) <= 1:
    axes = [axes]
for ax, prob in zip(axes, problems):
    per_sampler = defaultdict(list)
    for (p, sampler, seed), events in runs.items():
        if p == prob:
            per_sampler[sampler].append(sorted(events))
    for sampler in sorted(per_sampler):
        for events in per_sampler[sampler]:
            ax.step([e[0] for e in events], [e[1] for e in events], where="post",
                    alpha=0.45, label=sampler)
    handles, labels = ax.get_legend_handles_labels()
    seen = dict(zip(labels, handles))
    ax.legend(seen.values(), seen.keys())
    ax.set_xlabel("planning time (s)")
    ax.set_ylabel("c_best / c*_ref")
    ax.set_title(prob)
fig.tight_layout()
fig.savefig("planning_efficiency.png", dpi=150)
print("wrote planning_efficiency.png")
''',
}


def emit_plot_script(csv_paths, experiment: str, out_path=None) -> str:
    """Write a standalone matplotlib script rendering the experiment CSVs.

    Output is a pure function of the inputs: identical CSV paths yield a
    byte-identical script.
    """
    if experiment not in _PLOT_TEMPLATES:
        raise ValueError(f"unknown experiment {experiment!r}")
    for p in csv_paths:
        with open(p, "r", encoding="utf-8"):
            pass
    out_path = out_path or f"plot_{experiment}.py"
    script = _PLOT_TEMPLATES[experiment].replace("@@PATHS@@", repr([str(p) for p in csv_paths]))
    with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(script)
    return out_path
