import math
import os
import subprocess
import sys

import numpy as np
import pytest

from chainplan.bench import (ALL_SAMPLERS, BenchSpec, NoSuchFixture,
                             emit_plot_script, load_fixture,
                             run_levelset_sweep, run_planning_efficiency,
                             run_sampling_efficiency)
from chainplan.planner import PlannerConfig, collision_free_state, collision_free_trajectory
from chainplan.samplers import SamplerConfig
from chainplan import cli, mtdi


def read_rows(path):
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    meta = [ln for ln in lines if ln.startswith("#")]
    body = [ln for ln in lines if not ln.startswith("#") and ln]
    header = body[0].split(",")
    rows = [dict(zip(header, ln.split(","))) for ln in body[1:]]
    return meta, header, rows


def test_fixture_registry_is_valid():
    for name in ("euclid2d", "mtdi4d", "mtdi12d", "arm3", "arm6", "arm7"):
        problem, world = load_fixture(name)
        assert problem.limits.contains(problem.x_s)
        assert problem.limits.contains(problem.x_g)
        if world is not None:
            assert collision_free_state(world, problem.x_s)
            assert collision_free_state(world, problem.x_g)
    with pytest.raises(NoSuchFixture):
        load_fixture("nope")


def test_planning_fixtures_block_the_direct_motion():
    for name in ("arm3", "arm6", "arm7"):
        problem, world = load_fixture(name)
        traj = mtdi.mtdi_steer(problem.x_s, problem.x_g, problem.limits)
        assert not collision_free_trajectory(world, traj, 0.01)


def test_levelset_sweep_rows_and_determinism(tmp_path):
    spec = BenchSpec(experiment="levelset_sweep", problems=("mtdi4d",),
                     volume_draws=4000, ladder=(2.0, 1.5, 1.1),
                     seeds=(0, 1), seed=7, out_dir=str(tmp_path))
    p1 = run_levelset_sweep(spec, out_path=str(tmp_path / "a.csv"))
    p2 = run_levelset_sweep(spec, out_path=str(tmp_path / "b.csv"))
    assert open(p1, "rb").read() == open(p2, "rb").read()
    meta, header, rows = read_rows(p1)
    assert header == ["fixture", "dimension", "c_best_over_c_star", "seed",
                      "volume_ratio", "stderr", "accepted", "total"]
    assert len(rows) == 3 * 2
    # larger bound, larger ratio (first rung vs last, per seed)
    for seed in ("0", "1"):
        by_factor = {r["c_best_over_c_star"]: float(r["volume_ratio"])
                     for r in rows if r["seed"] == seed}
        assert by_factor["2.0"] >= by_factor["1.1"]


def test_sampling_efficiency_cell_structure(tmp_path):
    spec = BenchSpec(experiment="sampling_efficiency", problems=("mtdi4d",),
                     samplers=("rs", "hnr"), samples_per_point=40,
                     ladder=(2.0,), seeds=(0,), seed=3,
                     cell_wall_time_s=60.0, out_dir=str(tmp_path))
    path = run_sampling_efficiency(spec)
    meta, header, rows = read_rows(path)
    assert header[:5] == ["fixture", "dimension", "c_best_over_c_star", "sampler",
                          "volume_ratio"]
    assert {r["sampler"] for r in rows} == {"rs", "hnr"}
    for r in rows:
        assert r["status"] == "ok"
        assert int(r["mean_ns_per_sample"]) > 0
        assert int(r["samples"]) == 40
        assert 0.0 < float(r["volume_ratio"]) <= 1.0


def test_sampling_efficiency_marks_starved_cells(tmp_path):
    spec = BenchSpec(experiment="sampling_efficiency", problems=("mtdi12d",),
                     samplers=("rs",), samples_per_point=500,
                     ladder=(1.02,), seeds=(0,), seed=3,
                     cell_wall_time_s=1.0, out_dir=str(tmp_path))
    path = run_sampling_efficiency(spec)
    _, _, rows = read_rows(path)
    assert rows[0]["status"] == "incomplete"


def test_planning_efficiency_rows(tmp_path):
    planner = PlannerConfig(collision_dt=0.02, sampler=SamplerConfig(kind="hnr"))
    spec = BenchSpec(experiment="planning_efficiency", problems=("arm3",),
                     samplers=("hnr", "rs"), seeds=(0, 1), seed=5,
                     wall_time_s=6.0, workers=1, out_dir=str(tmp_path),
                     planner=planner)
    path = run_planning_efficiency(spec)
    meta, header, rows = read_rows(path)
    assert header == ["problem", "sampler", "seed", "wall_time_s", "c_best",
                      "ratio_to_ref", "iterations"]
    assert any("c_star_ref arm3" in m for m in meta)
    # per-run ratio series are non-increasing and end >= 1
    for kind in ("hnr", "rs"):
        for seed in ("0", "1"):
            series = [float(r["ratio_to_ref"]) for r in rows
                      if r["sampler"] == kind and r["seed"] == seed]
            assert series, "every cell must emit rows"
            assert all(a >= b - 1e-12 for a, b in zip(series, series[1:]))
            assert series[-1] >= 1.0 - 1e-12


def test_planning_efficiency_parallel_merge_is_ordered(tmp_path):
    planner = PlannerConfig(collision_dt=0.02, sampler=SamplerConfig(kind="hnr"))
    spec = BenchSpec(experiment="planning_efficiency", problems=("arm3",),
                     samplers=("hnr",), seeds=(0, 1), seed=5,
                     wall_time_s=4.0, workers=2, out_dir=str(tmp_path),
                     planner=planner)
    path = run_planning_efficiency(spec)
    _, _, rows = read_rows(path)
    seeds = [r["seed"] for r in rows]
    assert seeds == sorted(seeds)


def test_mh_sample_time_stays_in_band():
    # MH cost per sample is one proposal plus one membership test, so its
    # mean time moves far less than 10x between easy and hard bound levels
    import time as _time
    from chainplan.core import RandomSource
    from chainplan.samplers import ChainState, informed_sample

    base, _ = load_fixture("mtdi12d")
    cfg = SamplerConfig(kind="mh")
    means = []
    for factor in (3.0, 1.5):
        p = base.with_best(factor * base.direct_cost)
        chain = ChainState(cfg.pool_capacity)
        rand = RandomSource(17).derive(int(factor * 10))
        t0 = _time.perf_counter()
        for _ in range(600):
            informed_sample(chain, p, cfg, rand)
        means.append((_time.perf_counter() - t0) / 600)
    band = max(means) / min(means)
    assert band < 10.0


def test_plot_scripts_deterministic_and_runnable(tmp_path):
    spec = BenchSpec(experiment="levelset_sweep", problems=("mtdi4d",),
                     volume_draws=2000, ladder=(2.0, 1.3), seeds=(0,),
                     seed=1, out_dir=str(tmp_path))
    csv = run_levelset_sweep(spec)
    s1 = emit_plot_script([csv], "levelset_sweep", str(tmp_path / "p1.py"))
    s2 = emit_plot_script([csv], "levelset_sweep", str(tmp_path / "p2.py"))
    assert open(s1).read() == open(s2).read()
    env = dict(os.environ, MPLBACKEND="Agg")
    out = subprocess.run([sys.executable, s1], cwd=tmp_path, env=env,
                         capture_output=True, text=True, timeout=120)
    assert out.returncode == 0, out.stderr
    assert (tmp_path / "levelset_sweep.png").exists()


def test_plot_script_handles_empty_csv(tmp_path):
    csv = tmp_path / "empty.csv"
    csv.write_text("# chainplan sampling_efficiency\n"
                   "fixture,dimension,c_best_over_c_star,sampler,volume_ratio,"
                   "mean_ns_per_sample,std_ns,samples,status\n")
    script = emit_plot_script([str(csv)], "sampling_efficiency", str(tmp_path / "p.py"))
    text = open(script).read()
    assert 'set_xscale("log")' in text and 'set_yscale("log")' in text
    env = dict(os.environ, MPLBACKEND="Agg")
    out = subprocess.run([sys.executable, script], cwd=tmp_path, env=env,
                         capture_output=True, text=True, timeout=120)
    assert out.returncode == 0, out.stderr


def test_emit_plot_script_missing_input(tmp_path):
    with pytest.raises(FileNotFoundError):
        emit_plot_script([str(tmp_path / "missing.csv")], "levelset_sweep",
                         str(tmp_path / "p.py"))
    with pytest.raises(ValueError):
        emit_plot_script([], "nope")


# ---------------------------------------------------------------------------
# CLI


def _cfg(tmp_path, text):
    p = tmp_path / "prob.cfg"
    p.write_text(text)
    return str(p)


def test_cli_steer_prints_profile(tmp_path, capsys):
    cfg = _cfg(tmp_path, """
joints = 1
q_min = -3
q_max = 3
v_max = 10
a_max = 1
x_s_q = 0
x_s_v = 0
x_g_q = 1
x_g_v = 0
""")
    assert cli.main(["steer", cfg]) == 0
    out = capsys.readouterr().out
    assert "min time: 2.0" in out
    assert "segment 0" in out and "segment 1" in out


def test_cli_volume_on_ellipse(tmp_path, capsys):
    cfg = _cfg(tmp_path, """
joints = 1
q_min = -1
q_max = 5
v_max = 2
a_max = 1
x_s_q = 0
x_s_v = 0
x_g_q = 4
x_g_v = 0
cost_model = euclidean
c_best = 5.0
""")
    assert cli.main(["volume", cfg, "--n", "20000", "--seed", "1"]) == 0
    out = capsys.readouterr().out
    ratio = float(out.split(":")[1].split("+-")[0])
    assert abs(ratio - math.pi * 3.75 / 24.0) < 0.02


def test_cli_plan_with_world(tmp_path, capsys):
    cfg = _cfg(tmp_path, """
joints = 2
q_min = -3
q_max = 3
v_max = 2
a_max = 1
x_s_q = -2 -2
x_s_v = 0 0
x_g_q = 2 2
x_g_v = 0 0
world = boxes
box = -0.4 -3.1 0.4 1.0
""")
    rc = cli.main(["plan", cfg, "--seed", "3", "--sampler", "hnr",
                   "--iterations", "600", "--wall-time-s", "30"])
    out = capsys.readouterr().out
    assert rc == 0
    assert "solved: True" in out
    assert "improvement @" in out


def test_cli_plan_fixture_shorthand(tmp_path, capsys):
    cfg = _cfg(tmp_path, """
joints = 1
q_min = -1
q_max = 5
v_max = 2
a_max = 1
fixture = arm3
""")
    rc = cli.main(["plan", cfg, "--seed", "1", "--wall-time-s", "5"])
    assert rc in (0, 1)
    assert "c_best:" in capsys.readouterr().out


def test_cli_sample_bench_writes_outputs(tmp_path, capsys):
    rc = cli.main(["sample-bench", "--out", str(tmp_path), "--seed", "2",
                   "--problems", "mtdi4d", "--samplers", "rs,hnr",
                   "--samples-per-point", "30", "--trials", "1"])
    assert rc == 0
    assert (tmp_path / "levelset_sweep.csv").exists()
    assert (tmp_path / "sampling_efficiency.csv").exists()
    assert (tmp_path / "plot_sampling_efficiency.py").exists()


def test_cli_plan_bench_writes_outputs(tmp_path):
    rc = cli.main(["plan-bench", "--out", str(tmp_path), "--seed", "2",
                   "--problems", "arm3", "--samplers", "hnr",
                   "--trials", "1", "--wall-time-s", "4", "--workers", "1"])
    assert rc == 0
    assert (tmp_path / "planning_efficiency.csv").exists()
    assert (tmp_path / "plot_planning_efficiency.py").exists()


def test_cli_rejects_bad_config(tmp_path):
    cfg = _cfg(tmp_path, "joints = 1\nq_min = 0\nq_max = 1\nv_max = 1\na_max = 1\n")
    with pytest.raises(SystemExit):
        cli.main(["steer", cfg])
