"""Discrete path objectives: term bundles, restricted evaluation, FD gradients.

The objective is f(X) = sum of boundary terms g(W[0], W[M]) plus, for every
waypoint index i, a weighted sum of interior terms h(W[i], derivatives at i).
Derivatives are the index-space finite differences from `path`, so a term of
order k at index i reads only waypoints within k steps of i.  That locality
is what lets a block [a, b] be evaluated and differentiated without touching
anything beyond [a - R, b + R], R being the largest order in the model.

Gradients are central finite differences with a fixed step.  Rather than
rebuilding the whole path per perturbation, we exploit the linearity of the
difference stencils: nudging waypoint i by eps shifts the order-k derivative
at row j by exactly eps times a stencil coefficient, and only for |j-i| <= k.
Every perturbation therefore touches a small window of rows, and all windows
for all perturbed components are evaluated in one batched call per term.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache

import numpy as np

from .path import Box, FullPathVector, derivative_array

FD_STEP = 1e-6


class TermKind(Enum):
    BOUNDARY = "boundary"
    INTERIOR = "interior"


@dataclass(frozen=True, eq=False)
class TermSpec:
    """One cost term.

    Interior evaluators take (q, derivs, i) where derivs is a tuple of
    derivative vectors of orders 1..stencil_radius at index i; boundary
    evaluators take (q_first, q_last).  `batch`, if given, is a vectorized
    interior form mapping (Q (m,n), derivs tuple of (m,n), idx (m,)) to (m,)
    per-row costs and must agree with the scalar evaluator.
    """

    kind: TermKind
    evaluator: object
    weight: float
    order: int = 0
    batch: object = None

    def __post_init__(self):
        if self.weight < 0:
            raise ValueError("term weight must be non-negative")
        if not 0 <= self.order <= 3:
            raise ValueError("term order must be in 0..3")
        if self.kind is TermKind.BOUNDARY and self.order != 0:
            raise ValueError("boundary terms read no derivatives")


@dataclass(frozen=True, eq=False)
class ObjectiveModel:
    """Bundle of weighted terms plus optional planning bounds.

    `penalty_terms` hold softened constraints (squared equalities, hinge
    inequalities); they are evaluated exactly like regular terms and are kept
    separate only so callers can scale or inspect them on their own.
    """

    terms: tuple = ()
    bounds: Box = None
    penalty_terms: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        object.__setattr__(self, "penalty_terms", tuple(self.penalty_terms))

    @property
    def stencil_radius(self) -> int:
        orders = [t.order for t in self.interior_terms()]
        return max(orders) if orders else 0

    def interior_terms(self) -> tuple:
        return tuple(
            t for t in self.terms + self.penalty_terms if t.kind is TermKind.INTERIOR
        )

    def boundary_terms(self) -> tuple:
        return tuple(
            t for t in self.terms + self.penalty_terms if t.kind is TermKind.BOUNDARY
        )


@lru_cache(maxsize=64)
def _stencil_band(order: int, m: int) -> np.ndarray:
    """band[j, i - j + order] = d(derivative_array(W, order)[j]) / d(W[i]).

    Built by differencing unit impulses, so it is consistent with
    derivative_array by construction.  Support is |i - j| <= order.
    """
    band = np.zeros((m, 2 * order + 1))
    impulse = np.zeros((m, 1))
    for i in range(m):
        impulse[i, 0] = 1.0
        col = derivative_array(impulse, order)[:, 0]
        impulse[i, 0] = 0.0
        for j in np.nonzero(col)[0]:
            band[j, i - j + order] = col[j]
    band.setflags(write=False)
    return band


def _deriv_stack(arr: np.ndarray, radius: int) -> tuple:
    return tuple(derivative_array(arr, k) for k in range(1, radius + 1))


def _deriv_window(arr: np.ndarray, radius: int, a: int, b: int):
    """Derivative rows a..b computed from a slice padded by `radius`.

    Rows that sit `radius` inside the slice use the same central stencils on
    the same neighbours as a full-array computation, and the slice edge only
    coincides with a one-sided boundary when it is the true path boundary,
    so the result is bitwise identical to slicing derivative_array(arr).
    Returns (start, derivs) where derivs cover slice rows start..stop.
    """
    start = max(0, a - radius)
    stop = min(arr.shape[0] - 1, b + radius)
    window = arr[start:stop + 1]
    return start, tuple(derivative_array(window, k) for k in range(1, radius + 1))


def _rows_cost(terms, Q, derivs, idx) -> np.ndarray:
    """Per-row weighted cost of interior terms; Q is (m, n), result (m,)."""
    total = np.zeros(Q.shape[0])
    for term in terms:
        if term.batch is not None:
            total += term.weight * np.asarray(term.batch(Q, derivs, idx), dtype=np.float64)
        else:
            for r in range(Q.shape[0]):
                row_derivs = tuple(d[r] for d in derivs)
                total[r] += term.weight * term.evaluator(Q[r], row_derivs, int(idx[r]))
    return total


def _boundary_cost(terms, q_first, q_last) -> float:
    return float(sum(t.weight * t.evaluator(q_first, q_last) for t in terms))


def _range_cost(model: ObjectiveModel, arr: np.ndarray, a: int, b: int,
                include_boundary: bool) -> float:
    start, derivs_win = _deriv_window(arr, model.stencil_radius, a, b)
    Q = arr[a:b + 1]
    derivs = tuple(d[a - start:b - start + 1] for d in derivs_win)
    idx = np.arange(a, b + 1)
    total = float(np.sum(_rows_cost(model.interior_terms(), Q, derivs, idx)))
    bterms = model.boundary_terms()
    if include_boundary and bterms:
        total += _boundary_cost(bterms, arr[0], arr[-1])
    return total


def _check_range(path: FullPathVector, a: int, b: int):
    if not (0 <= a <= b <= path.last_index):
        raise IndexError(f"block [{a}, {b}] outside 0..{path.last_index}")


def _check_model(model: ObjectiveModel, path: FullPathVector):
    if model.bounds is not None and model.bounds.dimension != path.n:
        raise ValueError(
            f"model bounds are {model.bounds.dimension}-dimensional, path is {path.n}"
        )
    if path.waypoint_count < model.stencil_radius + 1:
        raise ValueError("path too short for the model's derivative orders")


def eval_full(model: ObjectiveModel, path: FullPathVector) -> float:
    """Total objective over the whole path, boundary terms included."""
    _check_model(model, path)
    return _range_cost(model, path.waypoints, 0, path.last_index, True)


def eval_restricted(model: ObjectiveModel, path: FullPathVector, a: int, b: int) -> float:
    """Objective restricted to waypoint indices a..b inclusive.

    Boundary terms are charged iff the block touches an endpoint, so that
    summing over a partition counts them at most twice (once per end pod) and
    the full sum can be reconciled exactly.
    """
    _check_model(model, path)
    _check_range(path, a, b)
    include = (a == 0) or (b == path.last_index)
    return _range_cost(model, path.waypoints, a, b, include)


def _block_gradient(model: ObjectiveModel, arr: np.ndarray, frozen, a: int, b: int,
                    include_boundary: bool, step: float) -> np.ndarray:
    """Central-FD gradient of the restricted objective w.r.t. block [a, b].

    Returns a flat ((b - a + 1) * n,) vector in waypoint-major order with
    exact zeros at frozen components.  Both perturbation signs of every
    component share one batch, and each term is evaluated only on the rows
    its stencil order can actually reach (rows further away are identical on
    both sides and cancel in the central difference).
    """
    m, n = arr.shape
    M = m - 1
    radius = model.stencil_radius
    rows = [i for i in range(a, b + 1) if i not in frozen]
    out = np.zeros((b - a + 1) * n)
    if not rows:
        return out

    dstart, derivs_win = _deriv_window(arr, radius, a, b)
    bands = [_stencil_band(k, m) for k in range(1, radius + 1)]
    span = 2 * radius + 1

    I = np.repeat(np.asarray(rows, dtype=np.intp), n)        # perturbed waypoint
    C = np.tile(np.arange(n, dtype=np.intp), len(rows))      # perturbed component
    U = I.shape[0]
    lo = np.maximum(a, I - radius)
    hi = np.minimum(b, I + radius)
    J = lo[:, None] + np.arange(span)[None, :]               # (U, span) window rows
    valid = J <= hi[:, None]
    J = np.minimum(J, hi[:, None])                           # clamp padding rows
    reach = np.abs(J - I[:, None])

    # one flat batch holds the + rows then the - rows
    total = U * span
    flat_comp = np.tile(np.repeat(C, span), 2)
    flat_pick = (np.arange(2 * total), flat_comp)
    signs = np.repeat(np.array([step, -step]), total)

    Q = np.tile(arr[J].reshape(total, n), (2, 1))
    Q[flat_pick] += signs * np.tile((J == I[:, None]).ravel(), 2)
    derivs = []
    for k, (dwin, band) in enumerate(zip(derivs_win, bands), start=1):
        D = np.tile(dwin[J - dstart].reshape(total, n), (2, 1))
        offset = I[:, None] - J + k
        inband = (offset >= 0) & (offset <= 2 * k) & valid
        coef = np.zeros((U, span))
        coef[inband] = band[J[inband], offset[inband]]
        D[flat_pick] += signs * np.tile(coef.ravel(), 2)
        derivs.append(D)
    derivs = tuple(derivs)
    idx_flat = np.tile(J.ravel(), 2)

    cost = np.zeros(2 * total)
    pick_by_order = {}
    for term in model.interior_terms():
        picked = pick_by_order.get(term.order)
        if picked is None:
            keep = np.flatnonzero((valid & (reach <= term.order)).ravel())
            picked = np.concatenate([keep, keep + total])
            pick_by_order[term.order] = picked
        if picked.size == 0:
            continue
        Qp = Q[picked]
        dp = tuple(d[picked] for d in derivs)
        ip = idx_flat[picked]
        if term.batch is not None:
            vals = np.asarray(term.batch(Qp, dp, ip), dtype=np.float64)
        else:
            vals = np.array([
                term.evaluator(Qp[r], tuple(d[r] for d in dp), int(ip[r]))
                for r in range(ip.shape[0])
            ])
        cost[picked] += term.weight * vals

    halves = cost.reshape(2, U, span).sum(axis=2)
    cost_plus, cost_minus = halves[0], halves[1]

    bterms = model.boundary_terms()
    if include_boundary and bterms:
        for u in range(U):
            i = int(I[u])
            if i != 0 and i != M:
                continue
            for sign, acc in ((step, cost_plus), (-step, cost_minus)):
                q0 = arr[0].copy()
                qM = arr[M].copy()
                (q0 if i == 0 else qM)[C[u]] += sign
                acc[u] += _boundary_cost(bterms, q0, qM)

    out[(I - a) * n + C] = (cost_plus - cost_minus) / (2.0 * step)
    return out


def grad_restricted(model: ObjectiveModel, path: FullPathVector, a: int, b: int,
                    step: float = FD_STEP) -> np.ndarray:
    """FD gradient of eval_restricted w.r.t. waypoints a..b, frozen entries 0."""
    _check_model(model, path)
    _check_range(path, a, b)
    include = (a == 0) or (b == path.last_index)
    return _block_gradient(model, path.waypoints, path.frozen, a, b, include, step)


def apply_bounds(model: ObjectiveModel, path: FullPathVector) -> FullPathVector:
    """Clamp every unfrozen waypoint into the model bounds."""
    if model.bounds is None:
        raise ValueError("model has no bounds to apply")
    _check_model(model, path)
    arr = path.copy_array()
    for i in range(path.waypoint_count):
        if i not in path.frozen:
            arr[i] = model.bounds.clip(arr[i])
    return path.with_waypoints(arr)


class RestrictedProblem:
    """Objective/gradient closures over the unfrozen components of one block.

    Holds a private writable copy of the path; objective() and gradient()
    scatter the candidate vector into that scratch array, so one instance
    must not be shared across threads.
    """

    def __init__(self, model: ObjectiveModel, path: FullPathVector, a: int, b: int,
                 fd_step: float = FD_STEP):
        _check_model(model, path)
        _check_range(path, a, b)
        self.model = model
        self.a = a
        self.b = b
        self.fd_step = fd_step
        self._arr = path.copy_array()
        self._frozen = path.frozen
        self._include_boundary = (a == 0) or (b == path.last_index)
        n = path.n
        free_rows = [i for i in range(a, b + 1) if i not in path.frozen]
        # flat indices into the whole array, and positions within the block vector
        self._scatter = np.array(
            [i * n + c for i in free_rows for c in range(n)], dtype=np.intp
        )
        self._block_positions = np.array(
            [(i - a) * n + c for i in free_rows for c in range(n)], dtype=np.intp
        )
        self.dimension = self._scatter.shape[0]

    def initial(self) -> np.ndarray:
        return self._arr.reshape(-1)[self._scatter].copy()

    def _scatter_in(self, x: np.ndarray):
        self._arr.reshape(-1)[self._scatter] = x

    def objective(self, x: np.ndarray) -> float:
        self._scatter_in(x)
        return _range_cost(self.model, self._arr, self.a, self.b, self._include_boundary)

    def gradient(self, x: np.ndarray) -> np.ndarray:
        self._scatter_in(x)
        full = _block_gradient(
            self.model, self._arr, self._frozen, self.a, self.b,
            self._include_boundary, self.fd_step,
        )
        return full[self._block_positions]

    def bounds(self) -> Box:
        if self.model.bounds is None:
            return None
        tiled = self.model.bounds.tile(self.b - self.a + 1)
        return tiled.select(self._block_positions)

    def block(self, x: np.ndarray) -> np.ndarray:
        """Block rows a..b with the candidate scattered in; frozen rows intact."""
        self._scatter_in(x)
        return self._arr[self.a:self.b + 1].copy()


class _SquaredDerivative:
    """|d^k W|^2 smoothness cost."""

    def __init__(self, order: int):
        self.order = order

    def __call__(self, q, derivs, i) -> float:
        d = derivs[self.order - 1]
        return float(d @ d)

    def batch(self, Q, derivs, idx) -> np.ndarray:
        D = derivs[self.order - 1]
        return np.einsum("ij,ij->i", D, D)


def squared_derivative_term(order: int, weight: float) -> TermSpec:
    ev = _SquaredDerivative(order)
    return TermSpec(TermKind.INTERIOR, ev, weight, order=order, batch=ev.batch)


class _PullToward:
    """|q - target|^2 anchor cost."""

    def __init__(self, target):
        self.target = np.asarray(target, dtype=np.float64)

    def __call__(self, q, derivs, i) -> float:
        d = q - self.target
        return float(d @ d)

    def batch(self, Q, derivs, idx) -> np.ndarray:
        D = Q - self.target[None, :]
        return np.einsum("ij,ij->i", D, D)


def pull_toward_term(target, weight: float) -> TermSpec:
    ev = _PullToward(target)
    return TermSpec(TermKind.INTERIOR, ev, weight, order=0, batch=ev.batch)
