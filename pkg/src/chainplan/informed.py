"""Informed-set membership, PHS direct sampling and volume estimation.

The informed set is the sub-level set of the through-point cost field at
the current best solution cost.  For the Euclidean cost model it is a
prolate hyperspheroid that can be sampled in closed form; that sampler is
the uniformity ground truth the MCMC samplers are measured against.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import KinodynamicLimits, RandomSource, State, sample_uniform_vectors
from . import mtdi

COST_MODELS = ("mtdi", "euclidean")


class DegenerateEllipse(ValueError):
    """c_best does not exceed the direct start-goal cost."""


class InformedProblem:
    """Start, goal, limits, cost model and the current best cost."""

    __slots__ = ("x_s", "x_g", "limits", "cost_model", "c_best", "direct_cost")

    def __init__(self, x_s: State, x_g: State, limits: KinodynamicLimits,
                 cost_model: str = "mtdi", c_best: float = math.inf):
        if cost_model not in COST_MODELS:
            raise ValueError(f"unknown cost model {cost_model!r}, expected one of {COST_MODELS}")
        if not (c_best > 0.0):
            raise ValueError(f"c_best must be positive (or inf), got {c_best}")
        if not (limits.contains(x_s) and limits.contains(x_g)):
            raise ValueError("start and goal must lie within the kinodynamic limits")
        object.__setattr__(self, "x_s", x_s)
        object.__setattr__(self, "x_g", x_g)
        object.__setattr__(self, "limits", limits)
        object.__setattr__(self, "cost_model", cost_model)
        object.__setattr__(self, "c_best", float(c_best))
        if cost_model == "euclidean":
            direct = float(np.linalg.norm(x_g.vector() - x_s.vector()))
        else:
            direct = mtdi.mtdi_min_time(x_s, x_g, limits)
        object.__setattr__(self, "direct_cost", direct)

    def __setattr__(self, name, value):
        raise AttributeError("InformedProblem is immutable; use with_best()")

    def with_best(self, c_best: float) -> "InformedProblem":
        return InformedProblem(self.x_s, self.x_g, self.limits, self.cost_model, c_best)

    def __repr__(self):
        return (f"InformedProblem(model={self.cost_model}, c_best={self.c_best:.6g}, "
                f"direct={self.direct_cost:.6g})")


def in_informed_set(x: State, problem: InformedProblem) -> bool:
    """Strict sub-level test: cost through x must beat c_best."""
    if math.isinf(problem.c_best):
        return True
    return mtdi.cost_through(x, problem) < problem.c_best


def cost_through_vectors(vecs: np.ndarray, problem: InformedProblem) -> np.ndarray:
    """Through-point costs for a batch of state vectors, shape (N, dim)."""
    vecs = np.atleast_2d(vecs)
    n = problem.limits.joints
    q, v = vecs[:, :n], vecs[:, n:]
    if problem.cost_model == "euclidean":
        a = problem.x_s.vector()
        b = problem.x_g.vector()
        return np.linalg.norm(vecs - a, axis=1) + np.linalg.norm(b - vecs, axis=1)
    leg1 = mtdi.min_time_batch(problem.x_s.q[None, :], problem.x_s.v[None, :], q, v, problem.limits)
    leg2 = mtdi.min_time_batch(q, v, problem.x_g.q[None, :], problem.x_g.v[None, :], problem.limits)
    return leg1 + leg2


def membership_vectors(vecs: np.ndarray, problem: InformedProblem) -> np.ndarray:
    if math.isinf(problem.c_best):
        return np.ones(np.atleast_2d(vecs).shape[0], dtype=bool)
    return cost_through_vectors(vecs, problem) < problem.c_best


def _rotation_to_axis(direction: np.ndarray) -> np.ndarray:
    """Rotation whose first column is `direction` (Gram-Schmidt completion)."""
    d = direction.size
    cols = [direction / np.linalg.norm(direction)]
    for i in range(d):
        e = np.zeros(d)
        e[i] = 1.0
        for c in cols:
            e = e - np.dot(e, c) * c
        norm = np.linalg.norm(e)
        if norm > 1e-10:
            cols.append(e / norm)
        if len(cols) == d:
            break
    return np.column_stack(cols)


def phs_direct_sample(problem: InformedProblem, rand: RandomSource) -> State:
    """Uniform sample from the Euclidean informed set (prolate hyperspheroid).

    Uniform ball sample, scaled to the hyperspheroid axes, rotated so the
    transverse axis joins the foci, translated to the centre.
    """
    if problem.cost_model != "euclidean":
        raise ValueError("PHS direct sampling requires the euclidean cost model")
    c_best = problem.c_best
    c_min = problem.direct_cost
    if not math.isfinite(c_best) or c_best <= c_min:
        raise DegenerateEllipse(f"c_best={c_best} must exceed the direct cost {c_min}")
    a = problem.x_s.vector()
    b = problem.x_g.vector()
    d = a.size
    # uniform point in the unit d-ball
    direction = rand.unit_vector(d)
    radius = rand.random() ** (1.0 / d)
    ball = direction * radius
    if c_min <= 1e-12:
        vec = a + 0.5 * c_best * ball
        return State.from_vector(vec)
    r1 = 0.5 * c_best
    ri = 0.5 * math.sqrt(c_best * c_best - c_min * c_min)
    radii = np.full(d, ri)
    radii[0] = r1
    rot = _rotation_to_axis((b - a) / c_min)
    vec = rot @ (radii * ball) + 0.5 * (a + b)
    return State.from_vector(vec)


@dataclass(frozen=True)
class VolumeEstimate:
    """Monte Carlo informed-set volume ratio with its binomial error."""

    ratio: float
    stderr: float
    accepted: int
    total: int


def estimate_volume_ratio(
    problem: InformedProblem, n: int, rand: RandomSource, batch: int = 8192
) -> VolumeEstimate:
    """Acceptance rate of uniform box draws under the membership test."""
    if n < 1:
        raise ValueError("n must be >= 1")
    accepted = 0
    remaining = n
    while remaining > 0:
        m = min(batch, remaining)
        vecs = sample_uniform_vectors(problem.limits, rand, m)
        accepted += int(np.count_nonzero(membership_vectors(vecs, problem)))
        remaining -= m
    ratio = accepted / n
    stderr = math.sqrt(max(ratio * (1.0 - ratio), 0.0) / n)
    return VolumeEstimate(ratio=ratio, stderr=stderr, accepted=accepted, total=n)
