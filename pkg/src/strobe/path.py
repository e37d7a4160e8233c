"""Waypoint paths: bounds boxes, finite differences, spline sampling, seeded initial conditions.

A path is an ordered list of waypoints W[0..M] in R^n stored as one (M+1, n)
float64 array.  Time is implicit: consecutive waypoints are one unit step
apart, so derivatives are plain index-space finite differences.  The waypoint
array inside a FullPathVector is marked read-only; all mutation goes through
copies, which is what makes concurrent reads from worker processes safe.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

_REJECTION_BUDGET = 1000

# central-stencil half width per derivative order
_CENTRAL_RADIUS = {1: 1, 2: 1, 3: 2}
# forward k-th difference coefficients over window [s, s+k]
_FORWARD_COEFFS = {
    1: (-1.0, 1.0),
    2: (1.0, -2.0, 1.0),
    3: (-1.0, 3.0, -3.0, 1.0),
}
SUPPORTED_ORDERS = (1, 2, 3)


def _readonly_array(values, dtype=np.float64) -> np.ndarray:
    out = np.array(values, dtype=dtype, order="C", copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class Box:
    """Axis-aligned box with per-component lower/upper limits."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = _readonly_array(np.atleast_1d(self.lower))
        hi = _readonly_array(np.atleast_1d(self.upper))
        if lo.ndim != 1 or lo.shape != hi.shape:
            raise ValueError("box limits must be 1-D arrays of equal length")
        if not np.all(lo <= hi):
            raise ValueError("box has lower > upper in some component")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dimension(self) -> int:
        return self.lower.shape[0]

    def contains(self, point) -> bool:
        p = np.asarray(point, dtype=np.float64)
        return bool(np.all(p >= self.lower) and np.all(p <= self.upper))

    def clip(self, values: np.ndarray) -> np.ndarray:
        return np.clip(values, self.lower, self.upper)

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(self.lower, self.upper)

    def tile(self, repeats: int) -> "Box":
        """Box for `repeats` stacked copies of this space (flattened order)."""
        return Box(np.tile(self.lower, repeats), np.tile(self.upper, repeats))

    def select(self, indices) -> "Box":
        idx = np.asarray(indices, dtype=np.intp)
        return Box(self.lower[idx], self.upper[idx])


@dataclass(frozen=True, eq=False)
class FullPathVector:
    """Immutable waypoint path with a set of frozen (never optimized) indices."""

    waypoints: np.ndarray
    frozen: frozenset = frozenset()

    def __post_init__(self):
        arr = _readonly_array(self.waypoints)
        if arr.ndim != 2:
            raise ValueError("waypoints must be a 2-D array of shape (M+1, n)")
        if arr.shape[0] < 2 or arr.shape[1] < 1:
            raise ValueError("a path needs at least two waypoints of dimension >= 1")
        if not np.all(np.isfinite(arr)):
            raise ValueError("waypoints must be finite")
        frozen = frozenset(int(i) for i in self.frozen)
        for i in frozen:
            if not 0 <= i < arr.shape[0]:
                raise ValueError(f"frozen index {i} out of range")
        object.__setattr__(self, "waypoints", arr)
        object.__setattr__(self, "frozen", frozen)

    @property
    def n(self) -> int:
        return self.waypoints.shape[1]

    @property
    def waypoint_count(self) -> int:
        return self.waypoints.shape[0]

    @property
    def last_index(self) -> int:
        return self.waypoints.shape[0] - 1

    def is_frozen(self, i: int) -> bool:
        return i in self.frozen

    def unfrozen_indices(self) -> np.ndarray:
        return np.array(
            [i for i in range(self.waypoint_count) if i not in self.frozen], dtype=np.intp
        )

    def copy_array(self) -> np.ndarray:
        """Writable copy of the waypoint array."""
        return np.array(self.waypoints, copy=True)

    def flattened(self) -> np.ndarray:
        return self.waypoints.reshape(-1).copy()

    def with_waypoints(self, waypoints: np.ndarray) -> "FullPathVector":
        return FullPathVector(waypoints, self.frozen)

    def to_json(self) -> str:
        payload = {
            "n": self.n,
            "waypoints": [[float(v) for v in row] for row in self.waypoints],
            "frozen": sorted(self.frozen),
        }
        return json.dumps(payload, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "FullPathVector":
        payload = json.loads(text)
        arr = np.asarray(payload["waypoints"], dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError("waypoints must be a list of equal-length rows")
        # "n" is an optional cross-check; hand-written files may omit it
        if arr.shape[1] != int(payload.get("n", arr.shape[1])):
            raise ValueError("waypoint rows do not match declared dimension")
        return cls(arr, frozenset(int(i) for i in payload.get("frozen", ())))


def derivative(path: FullPathVector, order: int, i: int) -> np.ndarray:
    """Finite-difference derivative of the given order at waypoint i.

    Central stencils where they fit, one-sided stencils of the same order
    shifted inward at the boundary.  Unit time step, so no h scaling.
    """
    if order not in SUPPORTED_ORDERS:
        raise ValueError(f"unsupported derivative order {order}")
    M = path.last_index
    if not 0 <= i <= M:
        raise IndexError(f"waypoint index {i} out of range 0..{M}")
    if path.waypoint_count < order + 1:
        raise ValueError(f"order-{order} derivative needs at least {order + 1} waypoints")
    W = path.waypoints
    r = _CENTRAL_RADIUS[order]
    if r <= i <= M - r:
        if order == 1:
            return (W[i + 1] - W[i - 1]) / 2.0
        if order == 2:
            return W[i + 1] - 2.0 * W[i] + W[i - 1]
        return (W[i + 2] - 2.0 * W[i + 1] + 2.0 * W[i - 1] - W[i - 2]) / 2.0
    # one-sided window [s, s+order], shifted inward so it fits
    if i < r:
        s = min(i, M - order)
    else:
        s = max(i - order, 0)
    coeffs = _FORWARD_COEFFS[order]
    out = coeffs[0] * W[s]
    for j in range(1, order + 1):
        out = out + coeffs[j] * W[s + j]
    return out


def derivative_array(waypoints: np.ndarray, order: int) -> np.ndarray:
    """Vectorized `derivative` over every waypoint index; returns (M+1, n)."""
    if order not in SUPPORTED_ORDERS:
        raise ValueError(f"unsupported derivative order {order}")
    W = np.asarray(waypoints, dtype=np.float64)
    m = W.shape[0]
    if m < order + 1:
        raise ValueError(f"order-{order} derivative needs at least {order + 1} waypoints")
    out = np.empty_like(W)
    if order == 1:
        out[1:-1] = (W[2:] - W[:-2]) / 2.0
        out[0] = -1.0 * W[0] + 1.0 * W[1]
        out[-1] = -1.0 * W[-2] + 1.0 * W[-1]
    elif order == 2:
        out[1:-1] = W[2:] - 2.0 * W[1:-1] + W[:-2]
        out[0] = 1.0 * W[0] + -2.0 * W[1] + 1.0 * W[2]
        out[-1] = 1.0 * W[-3] + -2.0 * W[-2] + 1.0 * W[-1]
    else:
        out[2:-2] = (W[4:] - 2.0 * W[3:-1] + 2.0 * W[1:-3] - W[:-4]) / 2.0
        for i in (0, 1):
            s = min(i, m - 1 - order)
            out[i] = -1.0 * W[s] + 3.0 * W[s + 1] + -3.0 * W[s + 2] + 1.0 * W[s + 3]
        for i in (m - 2, m - 1):
            s = max(i - order, 0)
            out[i] = -1.0 * W[s] + 3.0 * W[s + 1] + -3.0 * W[s + 2] + 1.0 * W[s + 3]
    return out


@dataclass(frozen=True, eq=False)
class PathDerivatives:
    """Derivative values of one order at every waypoint index."""

    order: int
    values: np.ndarray

    @classmethod
    def of(cls, path: FullPathVector, order: int) -> "PathDerivatives":
        return cls(order, _readonly_array(derivative_array(path.waypoints, order)))


def sample_spline(path: FullPathVector, u: float) -> np.ndarray:
    """Piecewise-linear interpolation of the path at parameter u in [0, 1]."""
    if not 0.0 <= u <= 1.0:
        raise ValueError(f"spline parameter {u} outside [0, 1]")
    W = path.waypoints
    M = path.last_index
    s = u * M
    j = int(math.floor(s))
    if j >= M:
        return W[M].copy()
    return W[j] + (s - j) * (W[j + 1] - W[j])


def _random_unit(rng: np.random.Generator, n: int) -> np.ndarray:
    while True:
        v = rng.standard_normal(n)
        norm = float(np.linalg.norm(v))
        if norm > 1e-12:
            return v / norm


def generate_initial_path(
    bounds: Box, distance: float, segments: int, noise: float, seed: int
) -> FullPathVector:
    """Seeded straight-line initial condition with optional uniform jitter.

    Endpoint A is uniform in `bounds`, B = A + distance * (random unit vector),
    rejection-sampled until B lands inside the box.  The M+1 waypoints
    interpolate A..B, every component gets independent noise in
    [-noise, +noise], and both endpoints are frozen.
    """
    if segments < 1:
        raise ValueError("need at least one segment")
    if distance < 0 or noise < 0:
        raise ValueError("distance and noise must be non-negative")
    rng = np.random.default_rng(seed)
    n = bounds.dimension
    for _ in range(_REJECTION_BUDGET):
        a = bounds.sample(rng)
        direction = _random_unit(rng, n)
        b = a + distance * direction
        if bounds.contains(b):
            break
    else:
        raise ValueError(
            f"could not place endpoints at distance {distance} inside bounds "
            f"after {_REJECTION_BUDGET} attempts"
        )
    t = np.linspace(0.0, 1.0, segments + 1)
    # convex form keeps endpoints exact and the midpoint bitwise equal to (A+B)/2
    waypoints = (1.0 - t)[:, None] * a[None, :] + t[:, None] * b[None, :]
    if noise > 0:
        waypoints = waypoints + rng.uniform(-noise, noise, size=waypoints.shape)
    return FullPathVector(waypoints, frozenset({0, segments}))
