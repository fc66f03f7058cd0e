"""Informed samplers: rejection, hierarchical rejection, MH and Hit-and-Run.

The Markov-chain samplers follow the restart discipline of the chain
framework: a chain is (re)seeded inside the informed set whenever it is
fresh, whenever the best cost has decreased since seeding, and whenever a
step stalls.  Seeding inside the set removes the need for any burn-in.
"""
from __future__ import annotations

import math
import time
from collections import deque
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import RandomSource, State, sample_uniform_state
from .informed import InformedProblem, in_informed_set
from . import mtdi

KINDS = ("rs", "hrs", "mh", "hnr")
SEED_STRATEGIES = ("start_or_goal", "gradient_descent", "pool", "rejection")


class SeedNotFound(RuntimeError):
    """The configured seeding strategy failed to produce an informed state."""


class ChainStalled(RuntimeError):
    """A Hit-and-Run step exhausted its interval without acceptance."""


class WallClockExceeded(RuntimeError):
    """A deadline passed inside a (by design unbounded) sampling loop."""


def _check_deadline(deadline) -> None:
    if deadline is not None and time.perf_counter() > deadline:
        raise WallClockExceeded(f"sampling deadline {deadline} passed")


@dataclass(frozen=True)
class SamplerConfig:
    kind: str = "hnr"
    mh_sigma: float = 0.05          # Gaussian std, fraction of each coordinate range
    hnr_lambda_tol: float = 1e-6    # interval-width stop, fraction of the box diagonal
    hnr_max_iters: int = 100
    seed_strategy: str = "start_or_goal"
    pool_capacity: int = 1024
    gd_max_restarts: int = 10
    gd_max_iters: int = 50

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.seed_strategy not in SEED_STRATEGIES:
            raise ValueError(f"seed_strategy must be one of {SEED_STRATEGIES}")
        if self.mh_sigma <= 0:
            raise ValueError("mh_sigma must be > 0")
        if self.hnr_lambda_tol <= 0:
            raise ValueError("hnr_lambda_tol must be > 0")
        if self.hnr_max_iters < 1:
            raise ValueError("hnr_max_iters must be >= 1")


class ChainState:
    """Mutable per-chain bookkeeping, owned by a single worker."""

    __slots__ = ("previous", "steps_taken", "c_best_at_seed", "sample_pool", "restarts")

    def __init__(self, pool_capacity: int = 1024):
        self.previous: Optional[State] = None
        self.steps_taken = 0
        self.c_best_at_seed = math.inf
        self.sample_pool: deque = deque(maxlen=pool_capacity)
        self.restarts = 0


# ---------------------------------------------------------------------------
# seeding


def seed_sample(problem: InformedProblem, cfg: SamplerConfig,
                chain: ChainState, rand: RandomSource) -> State:
    """An informed state produced by the configured seeding strategy."""
    strategy = cfg.seed_strategy
    if strategy == "start_or_goal":
        return problem.x_s if rand.random() < 0.5 else problem.x_g
    if strategy == "pool":
        if not chain.sample_pool:
            raise SeedNotFound("sample pool is empty")
        for _ in range(8):
            pick = chain.sample_pool[rand.integers(0, len(chain.sample_pool))]
            if in_informed_set(pick, problem):
                return pick
        raise SeedNotFound("no pooled sample is informed under the current bound")
    if strategy == "rejection":
        state, _ = rejection_sample(problem, rand)
        return state
    # gradient descent: uniform draw, then Newton-Raphson steps toward a
    # cost level strictly inside the informed set
    limits = problem.limits
    h = mtdi.gradient_steps(limits)
    lo, hi = limits.vector_low(), limits.vector_high()
    if math.isinf(problem.c_best):
        return sample_uniform_state(limits, rand)
    target = problem.direct_cost + 0.5 * (problem.c_best - problem.direct_cost)
    field = lambda s: mtdi.cost_through(s, problem)
    for _ in range(cfg.gd_max_restarts):
        x = sample_uniform_state(limits, rand)
        for _ in range(cfg.gd_max_iters):
            c = field(x)
            if c < problem.c_best:
                return x
            g = mtdi.numeric_gradient(field, x, h)
            gsq = float(np.dot(g, g))
            if gsq < 1e-18 or not math.isfinite(gsq):
                break
            vec = np.clip(x.vector() - (c - target) / gsq * g, lo, hi)
            x = State.from_vector(vec)
    raise SeedNotFound(f"gradient descent found no informed state in "
                       f"{cfg.gd_max_restarts} restarts")


# ---------------------------------------------------------------------------
# memoryless samplers


def rejection_sample(problem: InformedProblem, rand: RandomSource,
                     deadline: Optional[float] = None) -> tuple[State, int]:
    """First uniform box draw inside the informed set, with attempts used."""
    attempts = 0
    while True:
        attempts += 1
        if attempts % 64 == 0:
            _check_deadline(deadline)
        x = sample_uniform_state(problem.limits, rand)
        if in_informed_set(x, problem):
            return x, attempts


def _hrs_blocks(problem: InformedProblem):
    """Sampling blocks: joints for the MTDI model, coordinates for Euclidean."""
    return problem.limits.joints if problem.cost_model == "mtdi" else problem.limits.dim


def _hrs_leaf(problem: InformedProblem, block: int, rand: RandomSource):
    """Uniform draw of one block plus its admissible through-cost payload."""
    limits = problem.limits
    if problem.cost_model == "mtdi":
        j = block
        q = rand.uniform_scalar(float(limits.q_min[j]), float(limits.q_max[j]))
        v = rand.uniform_scalar(-float(limits.v_max[j]), float(limits.v_max[j]))
        t1 = mtdi.joint_min_time_floats(
            q - float(problem.x_s.q[j]), float(problem.x_s.v[j]), v,
            float(limits.v_max[j]), float(limits.a_max[j]))
        t2 = mtdi.joint_min_time_floats(
            float(problem.x_g.q[j]) - q, v, float(problem.x_g.v[j]),
            float(limits.v_max[j]), float(limits.a_max[j]))
        return (q, v), (t1 + t2, 0.0)
    lo = limits.vector_low()[block]
    hi = limits.vector_high()[block]
    val = rand.uniform_scalar(float(lo), float(hi))
    g1 = val - float(problem.x_s.vector()[block])
    g2 = float(problem.x_g.vector()[block]) - val
    return (val,), (g1 * g1, g2 * g2)


def _hrs_bound(problem: InformedProblem, payload) -> float:
    if problem.cost_model == "mtdi":
        return payload[0]
    return math.sqrt(payload[0]) + math.sqrt(payload[1])


def _hrs_combine(problem: InformedProblem, pa, pb):
    if problem.cost_model == "mtdi":
        return (max(pa[0], pb[0]), 0.0)
    return (pa[0] + pb[0], pa[1] + pb[1])


def hrs_sample(problem: InformedProblem, rand: RandomSource,
               counters: Optional[dict] = None,
               deadline: Optional[float] = None) -> State:
    """Hierarchical rejection: recursive halving with early partial rejection.

    A subtree is redrawn as a whole whenever its admissible cost bound
    already reaches c_best, so accepted full states remain uniform over the
    informed set (the exact membership test at the root is retained).
    """
    c_best = problem.c_best
    n_blocks = _hrs_blocks(problem)
    ticks = 0

    def draw(lo: int, hi: int):
        nonlocal ticks
        while True:
            ticks += 1
            if ticks % 256 == 0:
                _check_deadline(deadline)
            if hi - lo == 1:
                values, payload = _hrs_leaf(problem, lo, rand)
            else:
                mid = (lo + hi) // 2
                va, pa = draw(lo, mid)
                vb, pb = draw(mid, hi)
                values = va + vb
                payload = _hrs_combine(problem, pa, pb)
            if counters is not None:
                counters["partial_evals"] = counters.get("partial_evals", 0) + 1
            if _hrs_bound(problem, payload) < c_best:
                return values, payload

    while True:
        values, _ = draw(0, n_blocks)
        x = _hrs_assemble(problem, values)
        if counters is not None:
            counters["full_evals"] = counters.get("full_evals", 0) + 1
        if in_informed_set(x, problem):
            return x


def _hrs_assemble(problem: InformedProblem, values) -> State:
    n = problem.limits.joints
    if problem.cost_model == "mtdi":
        q = np.array([values[2 * j] for j in range(n)])
        v = np.array([values[2 * j + 1] for j in range(n)])
        return State(q, v)
    vec = np.array(values)
    return State(vec[:n], vec[n:])


# ---------------------------------------------------------------------------
# Markov-chain samplers


def mh_step(chain: ChainState, problem: InformedProblem, cfg: SamplerConfig,
            rand: RandomSource) -> tuple[State, bool]:
    """One Metropolis-Hastings step with a symmetric Gaussian proposal.

    The target is uniform over the informed set, so the acceptance ratio is
    1 whenever the proposal is informed and inside the box, 0 otherwise; a
    rejected proposal repeats the previous sample.
    """
    prev = chain.previous
    if prev is None:
        raise ValueError("mh_step requires a seeded chain")
    limits = problem.limits
    sigma = cfg.mh_sigma * limits.ranges()
    vec = prev.vector() + rand.normal(size=limits.dim) * sigma
    lo, hi = limits.vector_low(), limits.vector_high()
    if np.all(vec >= lo) and np.all(vec <= hi):
        cand = State.from_vector(vec)
        if in_informed_set(cand, problem):
            return cand, True
    return prev, False


def hnr_step(chain: ChainState, problem: InformedProblem, cfg: SamplerConfig,
             rand: RandomSource, trace: Optional[list] = None) -> State:
    """One Hit-and-Run step: rejection along a random chord with shrinking.

    The chord bounds start at +/- the box diagonal; every rejected point
    shrinks the bound on its own side, so the interval always retains the
    (informed) previous point at lambda = 0.  `trace`, when given, collects
    the (lower, upper) interval after each inner iteration.
    """
    prev = chain.previous
    if prev is None:
        raise ValueError("hnr_step requires a seeded chain")
    limits = problem.limits
    pv = prev.vector()
    direction = rand.unit_vector(limits.dim)
    l_diag = limits.box_diagonal()
    lam_lo, lam_hi = -l_diag, l_diag
    width_stop = cfg.hnr_lambda_tol * l_diag
    lo, hi = limits.vector_low(), limits.vector_high()
    for _ in range(cfg.hnr_max_iters):
        if lam_hi - lam_lo < width_stop:
            break
        lam = rand.uniform_scalar(lam_lo, lam_hi)
        vec = pv + lam * direction
        if np.all(vec >= lo) and np.all(vec <= hi):
            cand = State.from_vector(vec)
            if in_informed_set(cand, problem):
                return cand
        if lam > 0.0:
            lam_hi = lam
        else:
            lam_lo = lam
        if trace is not None:
            trace.append((lam_lo, lam_hi))
    raise ChainStalled("hit-and-run interval exhausted without acceptance")


# ---------------------------------------------------------------------------
# chain framework


def _reseed(chain: ChainState, problem: InformedProblem, cfg: SamplerConfig,
            rand: RandomSource) -> None:
    try:
        x0 = seed_sample(problem, cfg, chain, rand)
    except SeedNotFound:
        # start-or-goal cannot fail while the informed set is nonempty
        x0 = problem.x_s if rand.random() < 0.5 else problem.x_g
    chain.previous = x0
    chain.c_best_at_seed = problem.c_best
    chain.restarts += 1


def informed_sample(chain: ChainState, problem: InformedProblem,
                    cfg: SamplerConfig, rand: RandomSource,
                    deadline: Optional[float] = None) -> State:
    """One informed sample following the chain framework.

    Memoryless kinds (rs, hrs) draw directly.  Chain kinds reseed when the
    chain is fresh or c_best has decreased since seeding, then take one
    step; a stalled step restarts the chain.
    """
    if cfg.kind == "rs":
        x, _ = rejection_sample(problem, rand, deadline=deadline)
    elif cfg.kind == "hrs":
        x = hrs_sample(problem, rand, deadline=deadline)
    else:
        if chain.previous is None or problem.c_best < chain.c_best_at_seed:
            _reseed(chain, problem, cfg, rand)
        stalls = 0
        while True:
            if cfg.kind == "mh":
                x, _ = mh_step(chain, problem, cfg, rand)
                break
            try:
                x = hnr_step(chain, problem, cfg, rand)
                break
            except ChainStalled:
                _check_deadline(deadline)
                _reseed(chain, problem, cfg, rand)
                stalls += 1
                if stalls >= 8:
                    # pathologically thin set: the fresh seed is itself a
                    # valid informed sample, so return it rather than spin
                    x = chain.previous
                    break
    chain.previous = x
    chain.steps_taken += 1
    chain.sample_pool.append(x)
    return x
