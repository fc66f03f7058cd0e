"""Closed-form minimum-time double-integrator steering.

Per-joint time-optimal solves under acceleration and speed limits,
multi-joint duration synchronization, fixed-duration profile construction,
trajectory integration, the through-point cost field and its numerical
gradient, plus a detector for the cost-map discontinuities that appear
when boundary velocities are nonzero.

All formulas assume roughly O(1) problem scales (radians, rad/s); the
absolute epsilons below are far below any physically meaningful quantity
at that scale.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .core import JointState, KinodynamicLimits, State

_EPS = 1e-12        # branch guard for degenerate geometry
_TIME_TOL = 1e-9    # slack when testing membership in duration sets
EPS_END = 1e-6      # endpoint closure required of every trajectory
EPS_INT = 1e-9      # velocity-bound slack allowed at segment boundaries


class InfeasibleDuration(ValueError):
    """Requested duration is not achievable for the given joint pair."""


# ---------------------------------------------------------------------------
# per-joint achievable-duration analysis
#
# A time-optimal joint profile accelerates at +/-a to a peak (or valley)
# velocity w, optionally cruises, then decelerates.  Fixing the sign of the
# first acceleration and sweeping w yields every achievable duration of that
# sign structure; the accel needed is u(w) = (2w^2 - v0^2 - v1^2) / (2d), and
# the duration T(w) = 2d(2w - v0 - v1) / (2w^2 - v0^2 - v1^2) is monotone in
# w.  The |u| <= a constraint can carve one interior band out of the sweep,
# so each structure contributes at most two duration intervals.


def _duration_at_peak(d: float, sv: float, ssq: float, w: float) -> float:
    """Duration of the two-segment profile whose switch velocity is w."""
    den = 2.0 * w * w - ssq
    num = 2.0 * d * (2.0 * w - sv)
    if abs(den) > 1e-13 * (1.0 + ssq):
        return num / den
    # degenerate v0 == v1 == w: the limit is d / w
    if abs(2.0 * w - sv) <= 1e-9 * (1.0 + abs(sv)):
        mid = w + 0.5 * sv
        if abs(mid) > _EPS:
            return 2.0 * d / mid
    return math.inf


def _pos_pieces(d: float, v0: float, v1: float, v_max: float, a_max: float):
    """Achievable durations using a first acceleration >= 0, as intervals.

    Returns a list of (lo, hi) pairs, hi possibly inf.  The negative
    structure is this function applied to the reflected problem.
    """
    ssq = v0 * v0 + v1 * v1
    s = math.sqrt(0.5 * ssq)
    sv = v0 + v1
    w0 = max(v0, v1)

    if abs(d) <= _EPS:
        if w0 > s + _EPS:
            return []
        lead = 2.0 * s - sv
        if lead <= _EPS:
            # v0 == v1 == s >= 0: at rest any duration works, else only T=0
            return [(0.0, math.inf)] if s <= _EPS else [(0.0, 0.0)]
        return [(lead / a_max, math.inf)]

    rad = a_max * d + 0.5 * ssq

    if d > 0.0:
        if rad <= 0.0:
            return []
        vp = math.sqrt(rad)
        lo_w = max(w0, s)
        hi_w = min(v_max, vp)
        if lo_w > hi_w + _EPS:
            return []
        if vp > v_max:
            # ramps to the speed cap plus a cruise segment
            t_fast = (2.0 * v_max - sv) / a_max + (rad - v_max * v_max) / (a_max * v_max)
        else:
            t_fast = (2.0 * vp - sv) / a_max
        if lo_w > s + _EPS:
            t_slow = _duration_at_peak(d, sv, ssq, lo_w)
        else:
            t_slow = _duration_at_peak(d, sv, ssq, s)
        return [(max(0.0, t_fast), max(t_slow, max(0.0, t_fast)))]

    # d < 0: the peak stays strictly below s, durations increase with w
    if w0 > s + _EPS:
        return []
    pieces = []
    t_start = max(0.0, _duration_at_peak(d, sv, ssq, w0))
    if rad > _EPS:
        r = math.sqrt(rad)
        if w0 <= -r + _EPS:
            # low-peak piece ends where full acceleration is needed
            t_break = max(t_start, (-2.0 * r - sv) / a_max)
            pieces.append((t_start, t_break))
            pieces.append((max(0.0, (2.0 * r - sv) / a_max), math.inf))
        elif w0 >= r - _EPS:
            pieces.append((t_start, math.inf))
        else:
            pieces.append((max(0.0, (2.0 * r - sv) / a_max), math.inf))
    else:
        pieces.append((t_start, math.inf))
    return [(lo, hi) for lo, hi in pieces if math.isfinite(lo)]


def _joint_pieces(dq: float, v0: float, v1: float, v_max: float, a_max: float):
    return _pos_pieces(dq, v0, v1, v_max, a_max) + _pos_pieces(-dq, -v0, -v1, v_max, a_max)


def _merge_pieces(pieces):
    pieces = sorted(pieces)
    merged = [list(pieces[0])]
    for lo, hi in pieces[1:]:
        tol = _TIME_TOL * (1.0 + abs(lo))
        if lo <= merged[-1][1] + tol:
            merged[-1][1] = max(merged[-1][1], hi)
        else:
            merged.append([lo, hi])
    return merged


@dataclass(frozen=True)
class FeasibleTimeSet:
    """Durations achievable for one joint pair: [t_min, inf) minus at most
    one open interval."""

    t_min: float
    excluded: Optional[tuple[float, float]] = None

    def contains(self, t: float, tol: float = _TIME_TOL) -> bool:
        if t < self.t_min - tol:
            return False
        if self.excluded is not None:
            lo, hi = self.excluded
            if lo + tol < t < hi - tol:
                return False
        return True

    def next_feasible(self, t: float, tol: float = _TIME_TOL) -> float:
        if t < self.t_min - tol:
            return self.t_min
        if self.excluded is not None:
            lo, hi = self.excluded
            if lo + tol < t < hi - tol:
                return hi
        return t


def joint_feasible_times(s0: JointState, s1: JointState, v_max: float, a_max: float) -> FeasibleTimeSet:
    """Achievable durations for steering one joint between two states."""
    pieces = _joint_pieces(s1.q - s0.q, s0.v, s1.v, v_max, a_max)
    if not pieces:
        raise ValueError("joint pair has no feasible duration; check |v| <= v_max")
    merged = _merge_pieces(pieces)
    if len(merged) == 1:
        return FeasibleTimeSet(t_min=merged[0][0])
    if len(merged) == 2:
        return FeasibleTimeSet(t_min=merged[0][0], excluded=(merged[0][1], merged[1][0]))
    raise RuntimeError(f"duration set fragmented into {len(merged)} pieces: {merged}")


def joint_min_time(s0: JointState, s1: JointState, v_max: float, a_max: float) -> float:
    """Minimal duration to drive one joint from s0 to s1 within bounds."""
    return joint_min_time_floats(s1.q - s0.q, s0.v, s1.v, v_max, a_max)


def joint_min_time_floats(dq: float, v0: float, v1: float, v_max: float, a_max: float) -> float:
    pieces = _joint_pieces(dq, v0, v1, v_max, a_max)
    if not pieces:
        raise ValueError("joint pair has no feasible duration; check |v| <= v_max")
    return min(lo for lo, _ in pieces)


# ---------------------------------------------------------------------------
# fixed-duration per-joint profiles


def _two_segment_candidates(d, dv, sv, T):
    """Accelerations u for equal-magnitude accelerate/decelerate profiles."""
    if abs(dv) <= _EPS:
        cands = [4.0 * (d - 0.5 * sv * T) / (T * T)]
        if abs(d - 0.5 * sv * T) <= _EPS * (1.0 + abs(d)):
            cands.append(0.0)
        return cands
    # T^2 u^2 + (2 T sv - 4 d) u - dv^2 = 0, solved stably
    a = T * T
    b = 2.0 * T * sv - 4.0 * d
    c = -dv * dv
    disc = b * b - 4.0 * a * c
    if disc < 0.0:
        return []
    sq = math.sqrt(disc)
    q = -0.5 * (b + math.copysign(sq, b))
    roots = [q / a]
    if abs(q) > _EPS:
        roots.append(c / q)
    return roots


def joint_profile_for_time(
    s0: JointState, s1: JointState, T: float, v_max: float, a_max: float
) -> list[tuple[float, float]]:
    """A (duration, acceleration) profile of <= 3 segments taking exactly T.

    Among the valid closed-form candidates the one with the smallest peak
    acceleration wins (deterministic tie-break on segment count, then on
    the sign of the first acceleration).  Raises InfeasibleDuration when T
    is not in the joint's feasible duration set.
    """
    d = s1.q - s0.q
    dv = s1.v - s0.v
    sv = s0.v + s1.v
    tol_t = _TIME_TOL * (1.0 + T)

    if T <= _TIME_TOL:
        if abs(d) <= EPS_END and abs(dv) <= EPS_END:
            return []
        raise InfeasibleDuration(f"duration {T} too short for displacement {d}")

    candidates = []  # (peak_a, n_segments, -first_sign, segments)

    for u in _two_segment_candidates(d, dv, sv, T):
        if abs(u) > a_max * (1.0 + 1e-9) + _EPS:
            continue
        if abs(u) <= _EPS:
            # pure cruise; only valid when velocities match and d == v0 T
            if abs(dv) <= _EPS and abs(d - s0.v * T) <= 1e-9 * (1.0 + abs(d)):
                candidates.append((0.0, 1, 0, [(T, 0.0)]))
            continue
        u = math.copysign(min(abs(u), a_max), u)
        t1 = 0.5 * (T + dv / u)
        if t1 < -tol_t or t1 > T + tol_t:
            continue
        t1 = min(max(t1, 0.0), T)
        w = s0.v + u * t1
        if abs(w) > v_max + EPS_INT:
            continue
        segs = []
        if t1 > _TIME_TOL:
            segs.append((t1, u))
        if T - t1 > _TIME_TOL:
            segs.append((T - t1, -u))
        if not segs:
            segs = [(T, 0.0)]
        candidates.append((abs(u), len(segs), -math.copysign(1.0, u), segs))

    for sgn in (1.0, -1.0):
        vc = sgn * v_max
        denom = sgn * (vc * T - d)
        if denom <= _EPS:
            continue
        a_req = ((vc - s0.v) ** 2 + (vc - s1.v) ** 2) / (2.0 * denom)
        if a_req <= _EPS or a_req > a_max * (1.0 + 1e-9) + _EPS:
            continue
        a_req = min(a_req, a_max)
        t1 = abs(vc - s0.v) / a_req
        t3 = abs(vc - s1.v) / a_req
        t2 = T - t1 - t3
        if t2 < -tol_t:
            continue
        t2 = max(t2, 0.0)
        segs = []
        if t1 > _TIME_TOL:
            segs.append((t1, sgn * a_req))
        if t2 > _TIME_TOL:
            segs.append((t2, 0.0))
        if t3 > _TIME_TOL:
            segs.append((t3, -sgn * a_req))
        if not segs:
            segs = [(T, 0.0)]
        candidates.append((a_req, len(segs), -sgn, segs))

    if not candidates:
        # Near-degenerate geometry (e.g. almost-coincident states) can leave
        # the exact families marginally infeasible; accept a clamped profile
        # that lands within half the endpoint-closure tolerance.
        for u in _two_segment_candidates(d, dv, sv, T):
            if abs(u) <= _EPS:
                continue
            u = math.copysign(min(abs(u), a_max), u)
            t1 = min(max(0.5 * (T + dv / u), 0.0), T)
            w = s0.v + u * t1
            if abs(w) > v_max + EPS_INT:
                continue
            q_end = s0.q + s0.v * t1 + 0.5 * u * t1 * t1
            v_mid = s0.v + u * t1
            t2 = T - t1
            q_end += v_mid * t2 - 0.5 * u * t2 * t2
            v_end = v_mid - u * t2
            if abs(q_end - s1.q) <= 0.5 * EPS_END and abs(v_end - s1.v) <= 0.5 * EPS_END:
                segs = []
                if t1 > _TIME_TOL:
                    segs.append((t1, u))
                if t2 > _TIME_TOL:
                    segs.append((t2, -u))
                candidates.append((abs(u), len(segs), -math.copysign(1.0, u), segs or [(T, 0.0)]))
    if not candidates:
        raise InfeasibleDuration(
            f"no profile reaches ({s1.q}, {s1.v}) from ({s0.q}, {s0.v}) in T={T}"
        )
    candidates.sort(key=lambda c: (c[0], c[1], c[2]))
    return candidates[0][3]


# ---------------------------------------------------------------------------
# multi-joint synchronization and trajectories


def _states_to_arrays(x0: State, x1: State):
    return x1.q - x0.q, x0.v, x1.v


def _sync_duration(per_joint_pieces) -> float:
    """Smallest duration feasible for every joint simultaneously."""
    t = 0.0
    for pieces in per_joint_pieces:
        t = max(t, min(lo for lo, _ in pieces))
    for _ in range(len(per_joint_pieces) + 1):
        bumped = t
        for pieces in per_joint_pieces:
            tol = _TIME_TOL * (1.0 + bumped)
            if any(lo - tol <= bumped <= hi + tol for lo, hi in pieces):
                continue
            nxt = min((lo for lo, _ in pieces if lo > bumped), default=math.inf)
            bumped = max(bumped, nxt)
        if bumped == t:
            return t
        t = bumped
    return t


def mtdi_min_time(x0: State, x1: State, limits: KinodynamicLimits) -> float:
    """Minimum duration steering the full state x0 to x1 within limits."""
    dq = x1.q - x0.q
    per_joint = []
    for j in range(limits.joints):
        pieces = _joint_pieces(
            float(dq[j]), float(x0.v[j]), float(x1.v[j]),
            float(limits.v_max[j]), float(limits.a_max[j]),
        )
        if not pieces:
            raise ValueError(f"joint {j} has no feasible duration")
        per_joint.append(pieces)
    return _sync_duration(per_joint)


@dataclass(frozen=True)
class AccelProfile:
    """Piecewise-constant acceleration profile shared by all joints.

    segments: list of (duration, acceleration vector of shape (joints,)).
    """

    segments: tuple

    @property
    def duration(self) -> float:
        return float(sum(dt for dt, _ in self.segments))


class Trajectory:
    """A timed motion: start state plus an acceleration profile."""

    __slots__ = ("start", "profile", "duration", "_bounds_t", "_bounds_q", "_bounds_v", "_accels")

    def __init__(self, start: State, profile: AccelProfile):
        self.start = start
        self.profile = profile
        ts = [0.0]
        qs = [start.q.copy()]
        vs = [start.v.copy()]
        accels = []
        for dt, acc in profile.segments:
            q0, v0 = qs[-1], vs[-1]
            qs.append(q0 + v0 * dt + 0.5 * acc * dt * dt)
            vs.append(v0 + acc * dt)
            ts.append(ts[-1] + dt)
            accels.append(acc)
        self.duration = ts[-1]
        self._bounds_t = np.asarray(ts)
        self._bounds_q = np.asarray(qs)
        self._bounds_v = np.asarray(vs)
        self._accels = np.asarray(accels) if accels else np.zeros((0, start.joints))

    @property
    def end(self) -> State:
        return State(self._bounds_q[-1], self._bounds_v[-1])

    def state_at(self, t: float) -> State:
        t = min(max(t, 0.0), self.duration)
        k = int(np.searchsorted(self._bounds_t, t, side="right") - 1)
        k = min(k, len(self.profile.segments) - 1) if self.profile.segments else 0
        if not self.profile.segments:
            return self.start
        tau = t - self._bounds_t[k]
        a = self._accels[k]
        q = self._bounds_q[k] + self._bounds_v[k] * tau + 0.5 * a * tau * tau
        v = self._bounds_v[k] + a * tau
        return State(q, v)

    def sample(self, ts) -> tuple[np.ndarray, np.ndarray]:
        """Positions and velocities at times ts, shapes (len(ts), joints)."""
        ts = np.clip(np.asarray(ts, dtype=float), 0.0, self.duration)
        if not self.profile.segments:
            n = ts.size
            return (np.tile(self.start.q, (n, 1)), np.tile(self.start.v, (n, 1)))
        idx = np.clip(
            np.searchsorted(self._bounds_t, ts, side="right") - 1,
            0, len(self.profile.segments) - 1,
        )
        tau = (ts - self._bounds_t[idx])[:, None]
        a = self._accels[idx]
        q = self._bounds_q[idx] + self._bounds_v[idx] * tau + 0.5 * a * tau * tau
        v = self._bounds_v[idx] + a * tau
        return q, v

    def max_bound_violation(self, limits: KinodynamicLimits) -> float:
        """Worst velocity/acceleration bound violation over the profile."""
        worst = 0.0
        if self._accels.size:
            worst = max(worst, float(np.max(np.abs(self._accels) - limits.a_max)))
        worst = max(worst, float(np.max(np.abs(self._bounds_v) - limits.v_max)))
        return worst


def mtdi_steer(x0: State, x1: State, limits: KinodynamicLimits) -> Trajectory:
    """Time-optimal trajectory between two full states.

    All joints share the common minimal feasible duration; each follows its
    own fixed-duration profile.
    """
    T = mtdi_min_time(x0, x1, limits)
    return steer_for_time(x0, x1, limits, T)


def steer_for_time(x0: State, x1: State, limits: KinodynamicLimits, T: float) -> Trajectory:
    """Trajectory of exactly duration T (must be jointly feasible)."""
    if T <= _TIME_TOL:
        return Trajectory(x0, AccelProfile(segments=()))
    per_joint = []
    for j in range(limits.joints):
        segs = joint_profile_for_time(
            x0.joint(j), x1.joint(j), T, float(limits.v_max[j]), float(limits.a_max[j])
        )
        per_joint.append(segs)
    # merge per-joint switch times into one shared partition
    cuts = {0.0, T}
    for segs in per_joint:
        t = 0.0
        for dt, _ in segs:
            t += dt
            cuts.add(min(t, T))
    times = sorted(cuts)
    J = limits.joints
    ends = []
    for segs in per_joint:
        cum, t = [], 0.0
        for dt, _ in segs:
            t += dt
            cum.append(t)
        ends.append(cum)
    merged = []
    for k in range(len(times) - 1):
        lo, hi = times[k], times[k + 1]
        if hi - lo <= 1e-12:
            continue
        mid = 0.5 * (lo + hi)
        acc = np.zeros(J)
        for j, segs in enumerate(per_joint):
            if not segs:
                continue
            idx = min(bisect.bisect_right(ends[j], mid), len(segs) - 1)
            acc[j] = segs[idx][1]
        merged.append((hi - lo, acc))
    return Trajectory(x0, AccelProfile(segments=tuple(merged)))


# ---------------------------------------------------------------------------
# cost field


def euclidean_cost_through(x: State, x_s: State, x_g: State) -> float:
    va, vb, vx = x_s.vector(), x_g.vector(), x.vector()
    return float(np.linalg.norm(vx - va) + np.linalg.norm(vb - vx))


def cost_through(x: State, problem) -> float:
    """Cost of the best start-goal motion constrained through x.

    No collision checking: the bound is purely kinodynamic (or metric).
    """
    if problem.cost_model == "euclidean":
        return euclidean_cost_through(x, problem.x_s, problem.x_g)
    return mtdi_min_time(problem.x_s, x, problem.limits) + mtdi_min_time(
        x, problem.x_g, problem.limits
    )


def gradient_steps(limits: KinodynamicLimits, scale: float = 1e-5) -> np.ndarray:
    """Per-coordinate finite-difference steps, scaled to the box ranges."""
    return scale * limits.ranges()


def numeric_gradient(f: Callable[[State], float], x: State, h: np.ndarray) -> np.ndarray:
    """Central finite differences of a scalar field over the state vector."""
    vec = x.vector()
    h = np.broadcast_to(np.asarray(h, dtype=float), vec.shape)
    grad = np.zeros_like(vec)
    for i in range(vec.size):
        up = vec.copy()
        dn = vec.copy()
        up[i] += h[i]
        dn[i] -= h[i]
        grad[i] = (f(State.from_vector(up)) - f(State.from_vector(dn))) / (2.0 * h[i])
    return grad


# ---------------------------------------------------------------------------
# cost-map discontinuity detection


def sweep_target_velocity(
    s0: JointState, q_target: float, v_max: float, a_max: float, n: int = 2001
) -> tuple[np.ndarray, np.ndarray]:
    """Min-time cost as a function of target velocity at a fixed position."""
    vs = np.linspace(-v_max, v_max, n)
    ts = np.array([
        joint_min_time(s0, JointState(q_target, float(v)), v_max, a_max) for v in vs
    ])
    return vs, ts


def find_cost_jumps(grid: np.ndarray, values: np.ndarray, window: int = 5, factor: float = 10.0):
    """Locate discontinuities in a sampled 1-d cost curve.

    A gap between adjacent grid points is a jump when it exceeds `factor`
    times the local Lipschitz estimate taken from the continuous side.
    Returns the grid midpoints of the detected jumps.
    """
    diffs = np.abs(np.diff(values))
    n = diffs.size
    jumps = []
    floor = 1e-9 * (1.0 + float(np.median(np.abs(values))))
    for i in range(n):
        left = diffs[max(0, i - window):i]
        right = diffs[i + 1:i + 1 + window]
        estimates = [e for e in (left.max() if left.size else None,
                                 right.max() if right.size else None) if e is not None]
        if not estimates:
            continue
        lip = min(estimates)
        if diffs[i] > factor * max(lip, floor):
            jumps.append(0.5 * (grid[i] + grid[i + 1]))
    return jumps


# ---------------------------------------------------------------------------
# vectorized batch kernel (used by the planner's nearest-neighbor scans)


def _pos_piece_slots(d, v0, v1, v_max, a_max):
    """Vectorized _pos_pieces: two (lo, hi) slots per element, inf-padded."""
    d = np.asarray(d, dtype=float)
    v0 = np.broadcast_to(np.asarray(v0, dtype=float), d.shape)
    v1 = np.broadcast_to(np.asarray(v1, dtype=float), d.shape)
    ssq = v0 * v0 + v1 * v1
    s = np.sqrt(0.5 * ssq)
    sv = v0 + v1
    w0 = np.maximum(v0, v1)

    lo = np.full(d.shape + (2,), np.inf)
    hi = np.full(d.shape + (2,), -np.inf)

    rad = a_max * d + 0.5 * ssq
    vp = np.sqrt(np.maximum(rad, 0.0))

    pos = d > _EPS
    lo_w = np.maximum(w0, s)

    # one dur_at_peak evaluation covers both uses: the slow end of the d>0
    # piece and the first-piece start of the d<0 branches
    w_sel = np.where(pos, np.where(lo_w > s + _EPS, lo_w, s), w0)
    den = 2.0 * w_sel * w_sel - ssq
    num = 2.0 * d * (2.0 * w_sel - sv)
    small = np.abs(den) <= 1e-13 * (1.0 + ssq)
    degen = small & (np.abs(2.0 * w_sel - sv) <= 1e-9 * (1.0 + np.abs(sv)))
    mid = w_sel + 0.5 * sv
    dur_sel = np.where(small, np.inf, num / np.where(small, 1.0, den))
    mid_ok = degen & (np.abs(mid) > _EPS)
    dur_sel = np.where(mid_ok, 2.0 * d / np.where(mid_ok, mid, 1.0), dur_sel)

    # --- d ~ 0
    near0 = np.abs(d) <= _EPS
    lead = 2.0 * s - sv
    m = near0 & (w0 <= s + _EPS)
    flat = lead <= _EPS
    rest = m & flat & (s <= _EPS)
    point = m & flat & (s > _EPS)
    bump = m & ~flat
    lo[..., 0][rest | point] = 0.0
    hi[..., 0][rest] = np.inf
    hi[..., 0][point] = 0.0
    lo[..., 0][bump] = (lead / a_max)[bump]
    hi[..., 0][bump] = np.inf

    # --- d > 0: single piece
    hi_w = np.minimum(v_max, vp)
    ok = pos & (rad > 0.0) & (lo_w <= hi_w + _EPS)
    capped = vp > v_max
    t_fast = np.where(
        capped,
        (2.0 * v_max - sv) / a_max + (rad - v_max * v_max) / (a_max * v_max),
        (2.0 * vp - sv) / a_max,
    )
    t_fast = np.maximum(t_fast, 0.0)
    lo[..., 0] = np.where(ok, t_fast, lo[..., 0])
    hi[..., 0] = np.where(ok, np.maximum(dur_sel, t_fast), hi[..., 0])

    # --- d < 0: up to two pieces
    neg = (d < -_EPS) & (w0 <= s + _EPS)
    t_start = np.maximum(dur_sel, 0.0)
    has_r = neg & (rad > _EPS)
    r = np.where(has_r, vp, 0.0)
    two = has_r & (w0 <= -r + _EPS)
    one_lowcap = has_r & ~two & (w0 >= r - _EPS)
    one_highcap = has_r & ~two & ~one_lowcap
    nocut = neg & ~has_r

    lo[..., 0] = np.where(two, t_start, lo[..., 0])
    hi[..., 0] = np.where(two, np.maximum(t_start, (-2.0 * r - sv) / a_max), hi[..., 0])
    lo[..., 1] = np.where(two, np.maximum(0.0, (2.0 * r - sv) / a_max), lo[..., 1])
    hi[..., 1] = np.where(two, np.inf, hi[..., 1])

    start_piece = one_lowcap | nocut
    lo[..., 0] = np.where(start_piece, t_start, lo[..., 0])
    hi[..., 0] = np.where(start_piece, np.inf, hi[..., 0])
    lo[..., 0] = np.where(one_highcap, np.maximum(0.0, (2.0 * r - sv) / a_max), lo[..., 0])
    hi[..., 0] = np.where(one_highcap, np.inf, hi[..., 0])
    return lo, hi


def joint_piece_slots(dq, v0, v1, v_max, a_max):
    """All achievable-duration slots per element: shape (..., 4, 2)."""
    lo_p, hi_p = _pos_piece_slots(dq, v0, v1, v_max, a_max)
    lo_n, hi_n = _pos_piece_slots(-np.asarray(dq), -np.asarray(v0), -np.asarray(v1), v_max, a_max)
    lo = np.stack([lo_p[..., 0], lo_p[..., 1], lo_n[..., 0], lo_n[..., 1]], axis=-1)
    hi = np.stack([hi_p[..., 0], hi_p[..., 1], hi_n[..., 0], hi_n[..., 1]], axis=-1)
    return lo, hi


def min_time_batch(q0, v0, q1, v1, limits: KinodynamicLimits) -> np.ndarray:
    """Minimum steering durations for a batch of state pairs.

    Inputs have shape (N, J); broadcasting against a single row is fine.
    Returns shape (N,).
    """
    q0, v0, q1, v1 = (np.atleast_2d(np.asarray(a, dtype=float)) for a in (q0, v0, q1, v1))
    shape = np.broadcast_shapes(q0.shape, v0.shape, q1.shape, v1.shape)
    dq = np.broadcast_to(q1 - q0, shape)
    v0b = np.broadcast_to(v0, shape)
    v1b = np.broadcast_to(v1, shape)
    lo, hi = joint_piece_slots(dq, v0b, v1b, limits.v_max, limits.a_max)  # (N, J, 4)
    tmin_j = np.min(lo, axis=-1)  # (N, J)
    t = np.max(tmin_j, axis=-1)   # (N,)
    J = shape[-1]
    for _ in range(J + 1):
        tcol = t[:, None, None]
        tol = _TIME_TOL * (1.0 + tcol)
        inside = (lo - tol <= tcol) & (tcol <= hi + tol)      # (N, J, 4)
        feasible_j = np.any(inside, axis=-1)                   # (N, J)
        ahead = np.where(lo > tcol, lo, np.inf)
        nxt_j = np.where(feasible_j, t[:, None], np.min(ahead, axis=-1))
        t_new = np.max(nxt_j, axis=-1)
        if np.all(t_new <= t + 1e-15):
            break
        t = t_new
    return t
