"""Informed RRT* over kinodynamic state spaces.

The steering primitive is the closed-form minimum-time double-integrator
solve, the tree metric is the (asymmetric) minimum steering time, and the
sampler is pluggable: uniform before a first solution, one of the informed
samplers afterwards.  Two collision-world families are provided: axis-
aligned boxes in the position subspace and a planar arm amid circular
obstacles.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import KinodynamicLimits, RandomSource, State, sample_uniform_state
from .informed import InformedProblem
from .samplers import ChainState, SamplerConfig, WallClockExceeded, informed_sample
from . import mtdi


# ---------------------------------------------------------------------------
# collision worlds


@dataclass(frozen=True)
class CSpaceBoxes:
    """Axis-aligned obstacle boxes in the position subspace.

    boxes: tuple of (lo, hi) pairs, each an array of length J.
    """

    boxes: tuple = ()

    def __post_init__(self):
        for lo, hi in self.boxes:
            if not np.all(np.asarray(lo) < np.asarray(hi)):
                raise ValueError("box must satisfy lo < hi on every axis")

    def collision_free_positions(self, Q: np.ndarray) -> np.ndarray:
        Q = np.atleast_2d(Q)
        free = np.ones(Q.shape[0], dtype=bool)
        for lo, hi in self.boxes:
            inside = np.all((Q > np.asarray(lo)) & (Q < np.asarray(hi)), axis=1)
            free &= ~inside
        return free


def forward_kinematics(link_lengths: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """Joint positions of a planar chain rooted at the origin.

    Q: joint angles, shape (N, J).  Returns (N, J+1, 2) with the base at
    index 0; angles are cumulative (each measured from the previous link).
    """
    Q = np.atleast_2d(Q)
    theta = np.cumsum(Q, axis=1)
    steps = np.stack([np.asarray(link_lengths) * np.cos(theta),
                      np.asarray(link_lengths) * np.sin(theta)], axis=2)
    pts = np.concatenate([np.zeros((Q.shape[0], 1, 2)), np.cumsum(steps, axis=1)], axis=1)
    return pts


@dataclass(frozen=True)
class PlanarArm:
    """Planar chain with zero-width links amid circular obstacles.

    circles: tuple of (cx, cy, radius).
    """

    link_lengths: tuple
    circles: tuple = ()

    def __post_init__(self):
        if not all(l > 0 for l in self.link_lengths):
            raise ValueError("link lengths must be positive")
        if not all(c[2] > 0 for c in self.circles):
            raise ValueError("obstacle radii must be positive")

    def _centers_radii(self):
        centers = np.array([[c[0], c[1]] for c in self.circles])
        radii2 = np.array([c[2] * c[2] for c in self.circles])
        return centers, radii2

    def collision_free_positions(self, Q: np.ndarray) -> np.ndarray:
        Q = np.atleast_2d(Q)
        if not self.circles:
            return np.ones(Q.shape[0], dtype=bool)
        pts = forward_kinematics(np.asarray(self.link_lengths), Q)  # (N, J+1, 2)
        p0 = pts[:, :-1, :]
        seg = pts[:, 1:, :] - p0  # (N, L, 2)
        seg_len2 = np.maximum(np.einsum("nlk,nlk->nl", seg, seg), 1e-18)
        centers, radii2 = self._centers_radii()
        rel = centers[None, None, :, :] - p0[:, :, None, :]            # (N, L, C, 2)
        t = np.einsum("nlck,nlk->nlc", rel, seg) / seg_len2[:, :, None]
        np.clip(t, 0.0, 1.0, out=t)
        diff = rel - t[..., None] * seg[:, :, None, :]
        dist2 = np.einsum("nlck,nlck->nlc", diff, diff)
        hit = np.any(dist2 < radii2[None, None, :], axis=(1, 2))
        return ~hit


def collision_free_state(world, x: State) -> bool:
    return bool(world.collision_free_positions(x.q[None, :])[0])


def collision_free_trajectory(world, traj: mtdi.Trajectory, dt: float) -> bool:
    """Pointwise collision check at t = 0, dt, 2dt, ..., duration."""
    if dt <= 0:
        raise ValueError("dt must be > 0")
    if traj.duration <= 0:
        return bool(world.collision_free_positions(traj.start.q[None, :])[0])
    n = int(math.floor(traj.duration / dt))
    ts = np.append(np.arange(n + 1) * dt, traj.duration)
    # endpoints first (cheap early exit), then the interior in chunks
    Q, _ = traj.sample(np.array([ts[0], ts[-1]]))
    if not np.all(world.collision_free_positions(Q)):
        return False
    interior = ts[1:-1]
    for k in range(0, interior.size, 128):
        Q, _ = traj.sample(interior[k:k + 128])
        if not np.all(world.collision_free_positions(Q)):
            return False
    return True


# ---------------------------------------------------------------------------
# planner


@dataclass(frozen=True)
class PlannerConfig:
    max_iterations: int = 10000
    max_wall_time: float = math.inf   # seconds
    collision_dt: float = 0.01
    rewire_k_factor: float = 1.0
    goal_tolerance: float = 1e-3      # per-coordinate
    gap_stop: float = 1e-3            # stop when c_best is this close to the lower bound
    sampler: SamplerConfig = field(default_factory=SamplerConfig)

    def __post_init__(self):
        if self.collision_dt <= 0:
            raise ValueError("collision_dt must be > 0")
        if self.rewire_k_factor <= 0:
            raise ValueError("rewire_k_factor must be > 0")
        if self.gap_stop < 0:
            raise ValueError("gap_stop must be >= 0")


@dataclass
class PlanResult:
    solved: bool
    c_best: float
    edges: list                      # root-to-goal trajectories, empty if unsolved
    timeline: list                   # (wall seconds, iteration, c_best) per improvement
    iterations: int
    samples_drawn: int
    nodes: int
    sampler_time: float              # seconds inside sampler calls
    counters: dict


class _Tree:
    """Flat-array search tree sized for brute-force nearest queries."""

    def __init__(self, root: State, capacity: int):
        J = root.joints
        self.q = np.empty((capacity, J))
        self.v = np.empty((capacity, J))
        self.cost = np.empty(capacity)
        self.to_goal = np.full(capacity, np.inf)      # steering time to x_g
        self.goal_tried_at = np.full(capacity, np.inf)  # cost at last attempt
        self.parent = np.full(capacity, -1, dtype=np.int64)
        self.edges: list = [None]
        self.children: list = [[]]
        self.n = 1
        self.q[0] = root.q
        self.v[0] = root.v
        self.cost[0] = 0.0

    def _grow(self):
        cap = self.q.shape[0] * 2
        for name in ("q", "v"):
            arr = getattr(self, name)
            new = np.empty((cap, arr.shape[1]))
            new[: self.n] = arr[: self.n]
            setattr(self, name, new)
        for name, fill in (("cost", 0.0), ("to_goal", np.inf),
                           ("goal_tried_at", np.inf), ("parent", -1)):
            arr = getattr(self, name)
            new = np.full(cap, fill, dtype=arr.dtype)
            new[: self.n] = arr[: self.n]
            setattr(self, name, new)

    def add(self, x: State, parent: int, edge: mtdi.Trajectory, cost: float,
            to_goal: float) -> int:
        if self.n == self.q.shape[0]:
            self._grow()
        i = self.n
        self.q[i] = x.q
        self.v[i] = x.v
        self.cost[i] = cost
        self.to_goal[i] = to_goal
        self.goal_tried_at[i] = np.inf
        self.parent[i] = parent
        self.edges.append(edge)
        self.children.append([])
        self.children[parent].append(i)
        self.n += 1
        return i

    def state(self, i: int) -> State:
        return State(self.q[i].copy(), self.v[i].copy())

    def reparent(self, i: int, parent: int, edge: mtdi.Trajectory, cost: float):
        self.children[self.parent[i]].remove(i)
        self.parent[i] = parent
        self.children[parent].append(i)
        delta = cost - self.cost[i]
        stack = [i]
        while stack:
            k = stack.pop()
            self.cost[k] += delta
            stack.extend(self.children[k])
        self.edges[i] = edge


def plan(problem: InformedProblem, world, cfg: PlannerConfig, rand: RandomSource) -> PlanResult:
    """Informed RRT*: uniform sampling until a first solution, then informed.

    Returns a PlanResult in all cases; `solved` is False when the budget
    ran out before any solution (counters are still populated).
    """
    limits = problem.limits
    x_s, x_g = problem.x_s, problem.x_g
    # a colliding start or goal is not rejected up front: no connection can
    # ever succeed, so the run surfaces it as budget exhaustion (NoSolution)

    tree = _Tree(x_s, capacity=1024)
    tree.to_goal[0] = float(
        mtdi.min_time_batch(x_s.q[None, :], x_s.v[None, :],
                            x_g.q[None, :], x_g.v[None, :], limits)[0]
    )
    chain = ChainState(cfg.sampler.pool_capacity)
    goal_links: dict[int, mtdi.Trajectory] = {}
    c_best = math.inf
    cur = problem
    timeline: list[tuple[float, int, float]] = []
    sampler_time = 0.0
    samples_drawn = 0
    counters = {"duplicates": 0, "extend_blocked": 0, "rewires": 0, "goal_connects": 0}

    t_start = time.perf_counter()
    deadline = t_start + cfg.max_wall_time if math.isfinite(cfg.max_wall_time) else None
    goal_vec = x_g.vector()
    # the direct connection lower-bounds every solution (triangle property),
    # so a best cost within 0.1% of it certifies near-optimality
    lower_bound = problem.direct_cost
    it = 0
    while it < cfg.max_iterations:
        if time.perf_counter() - t_start > cfg.max_wall_time:
            break
        if c_best <= lower_bound * (1.0 + cfg.gap_stop):
            counters["converged"] = True
            break
        it += 1

        t0 = time.perf_counter()
        if math.isinf(c_best):
            x_rand = sample_uniform_state(limits, rand)
        else:
            try:
                x_rand = informed_sample(chain, cur, cfg.sampler, rand, deadline=deadline)
            except WallClockExceeded:
                sampler_time += time.perf_counter() - t0
                break
        sampler_time += time.perf_counter() - t0
        samples_drawn += 1

        # nearest under the asymmetric steering-time metric
        dists = mtdi.min_time_batch(
            tree.q[: tree.n], tree.v[: tree.n], x_rand.q[None, :], x_rand.v[None, :], limits
        )
        nearest = int(np.argmin(dists))
        if dists[nearest] < 1e-6:
            counters["duplicates"] += 1
            continue

        # near set for choose-parent / rewire
        k = int(math.ceil(cfg.rewire_k_factor * math.e * math.log(tree.n + 1)))
        k = min(k, tree.n)
        near = np.argpartition(dists, k - 1)[:k] if k < tree.n else np.arange(tree.n)

        # choose parent: cheapest collision-free connection
        order = near[np.argsort(tree.cost[near] + dists[near])]
        if nearest not in set(order.tolist()):
            order = np.concatenate([[nearest], order])
        new_id = -1
        for cand in order:
            cand = int(cand)
            try:
                traj = mtdi.steer_for_time(tree.state(cand), x_rand, limits, float(dists[cand]))
            except mtdi.InfeasibleDuration:
                continue
            if collision_free_trajectory(world, traj, cfg.collision_dt):
                new_id = tree.add(x_rand, cand, traj,
                                  float(tree.cost[cand] + dists[cand]), math.inf)
                break
        if new_id < 0:
            counters["extend_blocked"] += 1
            continue

        # rewire neighbors through the new node (goal appended as last target)
        targets_q = np.vstack([tree.q[near], x_g.q[None, :]])
        targets_v = np.vstack([tree.v[near], x_g.v[None, :]])
        back = mtdi.min_time_batch(x_rand.q[None, :], x_rand.v[None, :], targets_q, targets_v, limits)
        for idx, u in enumerate(near):
            u = int(u)
            if u == new_id or u == 0:
                continue
            new_cost = tree.cost[new_id] + back[idx]
            if new_cost < tree.cost[u] - 1e-9:
                try:
                    traj = mtdi.steer_for_time(tree.state(new_id), tree.state(u), limits, float(back[idx]))
                except mtdi.InfeasibleDuration:
                    continue
                if collision_free_trajectory(world, traj, cfg.collision_dt):
                    tree.reparent(u, new_id, traj, float(new_cost))
                    counters["rewires"] += 1
        tree.to_goal[new_id] = float(back[-1])

        # exact goal connection: attempt the most promising node, i.e. the
        # one whose (possibly rewired) cost plus goal steering time is best;
        # a node is retried only after its cost improves further
        near_goal = bool(np.all(np.abs(x_rand.vector() - goal_vec) <= cfg.goal_tolerance))
        if near_goal:
            tree.goal_tried_at[new_id] = math.inf  # force an attempt
        cand_costs = tree.cost[: tree.n] + tree.to_goal[: tree.n]
        untried = tree.cost[: tree.n] < tree.goal_tried_at[: tree.n] - 1e-12
        promising = (cand_costs < c_best - 1e-12) & untried
        if near_goal:
            promising[new_id] = True
        if np.any(promising):
            best_node = int(np.argmin(np.where(promising, cand_costs, np.inf)))
            tree.goal_tried_at[best_node] = tree.cost[best_node]
            try:
                traj = mtdi.steer_for_time(tree.state(best_node), x_g, limits,
                                           float(tree.to_goal[best_node]))
            except mtdi.InfeasibleDuration:
                traj = None
            if traj is not None and collision_free_trajectory(world, traj, cfg.collision_dt):
                goal_links[best_node] = traj
                counters["goal_connects"] += 1

        # best-cost bookkeeping (rewiring can improve existing goal links)
        if goal_links:
            best = min(tree.cost[n] + t.duration for n, t in goal_links.items())
            if best < c_best - 1e-12:
                c_best = float(best)
                timeline.append((time.perf_counter() - t_start, it, c_best))
                cur = problem.with_best(c_best)

    edges: list = []
    if goal_links:
        items = list(goal_links.items())
        costs = [tree.cost[n] + t.duration for n, t in items]
        node, gtraj = items[int(np.argmin(costs))]
        rev = []
        while node != 0:
            rev.append(tree.edges[node])
            node = int(tree.parent[node])
        edges = list(reversed(rev)) + [gtraj]

    return PlanResult(
        solved=bool(goal_links),
        c_best=c_best,
        edges=edges,
        timeline=timeline,
        iterations=it,
        samples_drawn=samples_drawn,
        nodes=tree.n,
        sampler_time=sampler_time,
        counters=counters,
    )
