"""Shared state-space types, deterministic random streams and config loading."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class ConfigError(ValueError):
    """Raised when a config file cannot be parsed."""


class ValidationError(ValueError):
    """Raised when parsed values violate a type invariant."""


@dataclass(frozen=True)
class JointState:
    """Position (rad) and velocity (rad/s) of a single joint."""

    q: float
    v: float

    def __post_init__(self):
        if not (math.isfinite(self.q) and math.isfinite(self.v)):
            raise ValidationError(f"joint state must be finite, got q={self.q}, v={self.v}")


class State:
    """Full robot state: per-joint positions and velocities.

    The flat vector layout is [q_0..q_{J-1}, v_0..v_{J-1}], used by the
    samplers and the planner for all vector arithmetic.
    """

    __slots__ = ("q", "v")

    def __init__(self, q, v):
        q = np.asarray(q, dtype=float)
        v = np.asarray(v, dtype=float)
        if q.ndim != 1 or q.shape != v.shape or q.size < 1:
            raise ValidationError("state needs matching 1-d position/velocity arrays, >= 1 joint")
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(v))):
            raise ValidationError("state entries must be finite")
        q.flags.writeable = False
        v.flags.writeable = False
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "v", v)

    def __setattr__(self, name, value):
        raise AttributeError("State is immutable")

    @property
    def joints(self) -> int:
        return self.q.size

    @property
    def dim(self) -> int:
        return 2 * self.q.size

    def joint(self, j: int) -> JointState:
        return JointState(float(self.q[j]), float(self.v[j]))

    def vector(self) -> np.ndarray:
        return np.concatenate([self.q, self.v])

    @staticmethod
    def from_vector(vec) -> "State":
        vec = np.asarray(vec, dtype=float)
        n = vec.size // 2
        return State(vec[:n], vec[n:])

    def allclose(self, other: "State", tol: float = 1e-9) -> bool:
        return bool(np.allclose(self.q, other.q, atol=tol) and np.allclose(self.v, other.v, atol=tol))

    def __repr__(self):
        return f"State(q={self.q.tolist()}, v={self.v.tolist()})"


class KinodynamicLimits:
    """Per-joint position bounds, speed limit and acceleration limit."""

    __slots__ = ("q_min", "q_max", "v_max", "a_max")

    def __init__(self, q_min, q_max, v_max, a_max):
        q_min = np.atleast_1d(np.asarray(q_min, dtype=float))
        q_max = np.atleast_1d(np.asarray(q_max, dtype=float))
        v_max = np.atleast_1d(np.asarray(v_max, dtype=float))
        a_max = np.atleast_1d(np.asarray(a_max, dtype=float))
        n = max(a.size for a in (q_min, q_max, v_max, a_max))
        q_min, q_max, v_max, a_max = (np.broadcast_to(a, (n,)).copy() for a in (q_min, q_max, v_max, a_max))
        if not np.all(q_min < q_max):
            raise ValidationError("q_min must be < q_max for every joint")
        if not np.all(v_max > 0):
            raise ValidationError("v_max must be > 0 for every joint")
        if not np.all(a_max > 0):
            raise ValidationError("a_max must be > 0 for every joint")
        for a in (q_min, q_max, v_max, a_max):
            a.flags.writeable = False
        object.__setattr__(self, "q_min", q_min)
        object.__setattr__(self, "q_max", q_max)
        object.__setattr__(self, "v_max", v_max)
        object.__setattr__(self, "a_max", a_max)

    def __setattr__(self, name, value):
        raise AttributeError("KinodynamicLimits is immutable")

    @property
    def joints(self) -> int:
        return self.q_min.size

    @property
    def dim(self) -> int:
        return 2 * self.q_min.size

    def vector_low(self) -> np.ndarray:
        return np.concatenate([self.q_min, -self.v_max])

    def vector_high(self) -> np.ndarray:
        return np.concatenate([self.q_max, self.v_max])

    def ranges(self) -> np.ndarray:
        """Per-coordinate widths of the sampling box, vector layout."""
        return self.vector_high() - self.vector_low()

    def box_diagonal(self) -> float:
        """Length of the longest diagonal of the state box."""
        return float(np.linalg.norm(self.ranges()))

    def contains(self, x: State, slack: float = 0.0) -> bool:
        return bool(
            np.all(x.q >= self.q_min - slack)
            and np.all(x.q <= self.q_max + slack)
            and np.all(np.abs(x.v) <= self.v_max + slack)
        )

    def clip_vector(self, vec: np.ndarray) -> np.ndarray:
        return np.clip(vec, self.vector_low(), self.vector_high())

    def __repr__(self):
        return (
            f"KinodynamicLimits(q_min={self.q_min.tolist()}, q_max={self.q_max.tolist()}, "
            f"v_max={self.v_max.tolist()}, a_max={self.a_max.tolist()})"
        )


class RandomSource:
    """Splittable deterministic random stream.

    Identical (seed, key) pairs always produce identical streams; `derive`
    creates an independent child stream so parallel workers never share
    generator state.
    """

    __slots__ = ("seed", "key", "_gen")

    def __init__(self, seed: int, key: tuple = ()):
        self.seed = int(seed)
        self.key = tuple(int(k) for k in key)
        ss = np.random.SeedSequence(self.seed, spawn_key=self.key)
        self._gen = np.random.Generator(np.random.PCG64(ss))

    def derive(self, *keys: int) -> "RandomSource":
        """Independent child stream, reproducible from (seed, key path)."""
        return RandomSource(self.seed, self.key + tuple(int(k) for k in keys))

    def random(self, size=None):
        return self._gen.random(size)

    def uniform(self, low, high, size=None):
        # low + u*(high-low) so a degenerate stream at 0.5 yields interval midpoints
        u = self._gen.random(size if size is not None else np.shape(low))
        return np.asarray(low) + u * (np.asarray(high) - np.asarray(low))

    def uniform_scalar(self, low: float, high: float) -> float:
        return low + self._gen.random() * (high - low)

    def normal(self, loc=0.0, scale=1.0, size=None):
        return self._gen.normal(loc, scale, size)

    def integers(self, low: int, high: int) -> int:
        return int(self._gen.integers(low, high))

    def unit_vector(self, dim: int) -> np.ndarray:
        """Uniform direction on the unit sphere."""
        while True:
            d = self._gen.normal(size=dim)
            n = np.linalg.norm(d)
            if n > 1e-12:
                return d / n


def sample_uniform_state(limits: KinodynamicLimits, rand: RandomSource) -> State:
    """Uniform draw from the state box: q ~ U[q_min,q_max], v ~ U[-v_max,v_max]."""
    u = rand.random(limits.dim)
    lo = limits.vector_low()
    vec = lo + u * (limits.vector_high() - lo)
    n = limits.joints
    return State(vec[:n], vec[n:])


def sample_uniform_vectors(limits: KinodynamicLimits, rand: RandomSource, count: int) -> np.ndarray:
    """Batch of uniform state vectors, shape (count, dim)."""
    u = rand.random((count, limits.dim))
    lo = limits.vector_low()
    return lo + u * (limits.vector_high() - lo)


_LIMIT_KEYS = ("q_min", "q_max", "v_max", "a_max")


def _parse_token(tok: str):
    try:
        return int(tok)
    except ValueError:
        pass
    try:
        return float(tok)
    except ValueError:
        return tok


def _parse_value(tokens):
    vals = [_parse_token(t) for t in tokens]
    return vals[0] if len(vals) == 1 else vals


def load_config(path) -> tuple[KinodynamicLimits, dict]:
    """Load a plain-text `key = value...` config file.

    Returns the kinodynamic limits plus a dict of all remaining keys
    (repeated keys such as `obstacle` accumulate into a list of rows).
    Raises ConfigError on malformed input and ValidationError, naming the
    offending key, when a limit invariant is violated.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc

    entries: dict[str, list] = {}
    saw_any = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        saw_any = True
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, rhs = line.partition("=")
        key = key.strip()
        tokens = rhs.split()
        if not key or not tokens:
            raise ConfigError(f"{path}:{lineno}: empty key or value in {raw!r}")
        entries.setdefault(key, []).append(_parse_value(tokens))
    if not saw_any:
        raise ConfigError(f"{path}: empty config file")

    flat: dict = {}
    for key, vals in entries.items():
        flat[key] = vals[0] if len(vals) == 1 else vals

    if "joints" not in flat:
        raise ConfigError(f"{path}: missing required key 'joints'")
    joints = flat["joints"]
    if not isinstance(joints, int) or joints < 1:
        raise ValidationError(f"joints: must be an integer >= 1, got {joints!r}")

    limit_arrays = {}
    for key in _LIMIT_KEYS:
        if key not in flat:
            raise ConfigError(f"{path}: missing required key '{key}'")
        val = flat[key]
        arr = np.atleast_1d(np.asarray(val, dtype=float))
        if arr.size == 1:
            arr = np.full(joints, arr[0])
        if arr.size != joints:
            raise ValidationError(f"{key}: expected 1 or {joints} values, got {arr.size}")
        limit_arrays[key] = arr

    try:
        limits = KinodynamicLimits(**limit_arrays)
    except ValidationError as exc:
        # re-raise naming the offending key
        msg = str(exc)
        for key in ("q_min", "q_max", "v_max", "a_max"):
            if key in msg:
                raise ValidationError(f"{key}: {msg}") from exc
        raise

    extras = {k: v for k, v in flat.items() if k not in _LIMIT_KEYS}
    return limits, extras
