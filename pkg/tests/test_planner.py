import math

import numpy as np
import pytest

from chainplan.core import KinodynamicLimits, RandomSource, State
from chainplan.informed import InformedProblem, in_informed_set
from chainplan.samplers import SamplerConfig
from chainplan.planner import (CSpaceBoxes, PlanarArm, PlannerConfig,
                               collision_free_state, collision_free_trajectory,
                               forward_kinematics, plan)
from chainplan import mtdi


def _limits(j, vmax=2.0):
    return KinodynamicLimits(q_min=-3 * np.ones(j), q_max=3 * np.ones(j),
                             v_max=vmax * np.ones(j), a_max=np.ones(j))


# ---------------------------------------------------------------------------
# worlds


def test_empty_world_is_always_free():
    w = CSpaceBoxes(())
    assert collision_free_state(w, State([0.3, -2.9], [0.0, 0.0]))


def test_box_world_blocks_interior_points():
    w = CSpaceBoxes(((np.array([0.0, 0.0]), np.array([1.0, 1.0])),))
    assert not collision_free_state(w, State([0.5, 0.5], [0.0, 0.0]))
    assert collision_free_state(w, State([1.5, 0.5], [0.0, 0.0]))
    # boundary points do not count as inside
    assert collision_free_state(w, State([0.0, 0.5], [0.0, 0.0]))


def test_box_world_validation():
    with pytest.raises(ValueError):
        CSpaceBoxes(((np.array([1.0]), np.array([0.0])),))


def test_forward_kinematics_known_poses():
    pts = forward_kinematics(np.array([1.0, 1.0]), np.array([[0.0, 0.0]]))[0]
    assert np.allclose(pts[-1], [2.0, 0.0])
    pts = forward_kinematics(np.array([1.0, 1.0]), np.array([[math.pi / 2, 0.0]]))[0]
    assert np.allclose(pts[-1], [0.0, 2.0], atol=1e-12)
    pts = forward_kinematics(np.array([1.0, 1.0]), np.array([[math.pi / 2, math.pi / 2]]))[0]
    assert np.allclose(pts[-1], [-1.0, 1.0], atol=1e-12)
    pts = forward_kinematics(np.array([1.0] * 4), np.array([[math.pi / 2] * 4]))[0]
    assert np.allclose(pts[-1], [0.0, 0.0], atol=1e-12)


def test_arm_reaching_circle_center_collides():
    # two unit links stretched along +x reach exactly (2, 0)
    w = PlanarArm((1.0, 1.0), circles=((2.0, 0.0, 0.1),))
    assert not collision_free_state(w, State([0.0, 0.0], [0.0, 0.0]))
    assert collision_free_state(w, State([math.pi / 2, 0.0], [0.0, 0.0]))


def test_arm_link_grazing_circle():
    # circle centred above the midpoint of the first link
    w = PlanarArm((1.0,), circles=((0.5, 0.2, 0.25),))
    assert not collision_free_state(w, State([0.0], [0.0]))
    w2 = PlanarArm((1.0,), circles=((0.5, 0.3, 0.25),))
    assert collision_free_state(w2, State([0.0], [0.0]))


def test_planar_arm_validation():
    with pytest.raises(ValueError):
        PlanarArm((0.0,), ())
    with pytest.raises(ValueError):
        PlanarArm((1.0,), ((0.0, 0.0, -0.1),))


def test_zero_duration_trajectory_reduces_to_state_check():
    lim = _limits(1)
    x = State([0.5], [0.0])
    traj = mtdi.mtdi_steer(x, x, lim)
    free = CSpaceBoxes(())
    blocked = CSpaceBoxes(((np.array([0.4]), np.array([0.6])),))
    assert collision_free_trajectory(free, traj, 0.01)
    assert not collision_free_trajectory(blocked, traj, 0.01)


def test_trajectory_midpoint_collision_detected():
    # rest-to-rest sweep passes through the box around q = 0 at mid-time
    lim = _limits(1, vmax=10.0)
    traj = mtdi.mtdi_steer(State([-1.0], [0.0]), State([1.0], [0.0]), lim)
    mid = traj.state_at(0.5 * traj.duration)
    assert -0.1 < mid.q[0] < 0.1
    w = CSpaceBoxes(((np.array([-0.1]), np.array([0.1])),))
    assert not collision_free_trajectory(w, traj, traj.duration / 100.0)
    assert collision_free_trajectory(CSpaceBoxes(()), traj, traj.duration / 100.0)


def test_collision_dt_validation():
    lim = _limits(1)
    traj = mtdi.mtdi_steer(State([0.0], [0.0]), State([1.0], [0.0]), lim)
    with pytest.raises(ValueError):
        collision_free_trajectory(CSpaceBoxes(()), traj, 0.0)


# ---------------------------------------------------------------------------
# planner


def _free_problem(j=1):
    lim = _limits(j)
    x_s = State([-2.0] * j, [0.0] * j)
    x_g = State([2.0] * j, [0.0] * j)
    return InformedProblem(x_s, x_g, lim, "mtdi", math.inf)


def test_plan_obstacle_free_converges():
    p = _free_problem()
    c_star = p.direct_cost
    cfg = PlannerConfig(max_iterations=1500, sampler=SamplerConfig(kind="hnr"))
    res = plan(p, CSpaceBoxes(()), cfg, RandomSource(7))
    assert res.solved
    assert res.c_best / c_star <= 1.05
    # returned edges chain from start to goal within the endpoint closure
    x = p.x_s
    total = 0.0
    for e in res.edges:
        assert np.max(np.abs(e.start.q - x.q)) <= 1e-5
        assert np.max(np.abs(e.start.v - x.v)) <= 1e-5
        x = e.end
        total += e.duration
    assert np.max(np.abs(x.q - p.x_g.q)) <= 1e-5
    assert total == pytest.approx(res.c_best, abs=1e-6)


def test_plan_timeline_strictly_decreasing():
    p = _free_problem(2)
    cfg = PlannerConfig(max_iterations=800, sampler=SamplerConfig(kind="hnr"))
    res = plan(p, CSpaceBoxes(()), cfg, RandomSource(11))
    costs = [c for _, _, c in res.timeline]
    assert len(costs) >= 1
    assert all(a > b for a, b in zip(costs, costs[1:]))


def test_plan_unreachable_goal_reports_no_solution():
    p = _free_problem()
    # goal position sits inside an obstacle box
    w = CSpaceBoxes(((np.array([1.8]), np.array([2.2])),))
    cfg = PlannerConfig(max_iterations=150, sampler=SamplerConfig(kind="hnr"))
    res = plan(p, w, cfg, RandomSource(5))
    assert not res.solved
    assert res.edges == []
    assert math.isinf(res.c_best)
    assert res.iterations == 150
    assert res.samples_drawn > 0


def test_plan_solution_edges_are_collision_free():
    lim = _limits(2)
    p = InformedProblem(State([-2.0, -2.0], [0.0, 0.0]),
                        State([2.0, 2.0], [0.0, 0.0]), lim, "mtdi", math.inf)
    # a bar across the middle of the position plane, passable above q2 = 1
    w = CSpaceBoxes(((np.array([-0.4, -3.1]), np.array([0.4, 1.0])),))
    cfg = PlannerConfig(max_iterations=800, sampler=SamplerConfig(kind="hnr"))
    res = plan(p, w, cfg, RandomSource(2))
    assert res.solved
    for e in res.edges:
        assert collision_free_trajectory(w, e, cfg.collision_dt)


def test_plan_cost_bookkeeping_exact():
    p = _free_problem(2)
    cfg = PlannerConfig(max_iterations=400, sampler=SamplerConfig(kind="hrs"))
    res = plan(p, CSpaceBoxes(()), cfg, RandomSource(13))
    assert res.solved
    # recompute the solution cost from scratch by integrating edge durations
    assert res.c_best == pytest.approx(sum(e.duration for e in res.edges), abs=1e-9)


def test_plan_nested_budgets_never_worse():
    p = _free_problem(2)
    finals = []
    for budget in (150, 600):
        cfg = PlannerConfig(max_iterations=budget, gap_stop=0.0,
                            sampler=SamplerConfig(kind="hnr"))
        res = plan(p, CSpaceBoxes(()), cfg, RandomSource(21))
        finals.append(res.c_best)
    assert finals[1] <= finals[0] + 1e-12


def test_plan_budget_scaling_improves_median_ratio():
    # asymptotic-optimality surrogate at desk scale: larger iteration
    # budgets give better final costs on a detour problem (the obstacle-free
    # fixture is exact after one goal connection, so it cannot discriminate)
    lim = _limits(2)
    p = InformedProblem(State([-2.0, -2.0], [0.0, 0.0]),
                        State([2.0, 2.0], [0.0, 0.0]), lim, "mtdi", math.inf)
    w = CSpaceBoxes(((np.array([-0.6, -3.1]), np.array([0.6, 1.2])),))
    finals = {}
    for budget in (60, 240, 960):
        costs = []
        for seed in range(5):
            cfg = PlannerConfig(max_iterations=budget, gap_stop=0.0,
                                sampler=SamplerConfig(kind="hnr"))
            res = plan(p, w, cfg, RandomSource(100 + seed))
            costs.append(res.c_best if res.solved else math.inf)
        finals[budget] = costs
    ref = min(min(v) for v in finals.values())
    medians = [float(np.median(np.asarray(finals[b]) / ref)) for b in (60, 240, 960)]
    assert medians[2] <= medians[1] <= medians[0]
    assert medians[2] < medians[0]


def test_plan_deterministic_given_seed():
    p = _free_problem(2)
    cfg = PlannerConfig(max_iterations=300, sampler=SamplerConfig(kind="hnr"))
    r1 = plan(p, CSpaceBoxes(()), cfg, RandomSource(33))
    r2 = plan(p, CSpaceBoxes(()), cfg, RandomSource(33))
    assert r1.c_best == r2.c_best
    assert [c for _, _, c in r1.timeline] == [c for _, _, c in r2.timeline]
    assert r1.nodes == r2.nodes


def test_plan_wall_time_budget_respected():
    import time
    p = _free_problem(2)
    cfg = PlannerConfig(max_iterations=10 ** 9, max_wall_time=1.5, gap_stop=0.0,
                        sampler=SamplerConfig(kind="hnr"))
    t0 = time.perf_counter()
    plan(p, CSpaceBoxes(()), cfg, RandomSource(1))
    assert time.perf_counter() - t0 < 6.0
