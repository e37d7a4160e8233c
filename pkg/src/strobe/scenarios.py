"""Benchmark scenarios: a 2-D circle-grid field and two 7-DOF chain tasks.

circle-grid: steer a planar path out of a lattice of high-cost discs while
  staying smooth.  Cost per disc is a smoothstep falling from 1 inside the
  disc radius to 0 beyond the falloff radius.
upright-ee: drive a 7-joint serial chain so the end effector stays close to
  the identity orientation along the whole path.
straight-ee: penalize end-effector acceleration in workspace so the effector
  trace straightens out.  The term reconstructs the neighbouring joint
  vectors from the central first/second differences (q +/- q' + q''/2),
  which reproduces them exactly at interior indices.

All scenario terms provide batched evaluators, so whole windows of waypoints
are costed in a handful of numpy calls.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .objective import ObjectiveModel, TermKind, TermSpec, squared_derivative_term
from .path import Box, FullPathVector, generate_initial_path

SCENARIO_NAMES = ("circle-grid", "upright-ee", "straight-ee")

_DEFAULT_WEIGHTS = {
    "image": 1.0,
    "rotation": 1.0,
    "ee_accel": 1.0,
    "velocity": 0.05,
    "acceleration": 0.05,
    "jerk": 0.01,
    "self_distance": 1.0,
}
_SELF_DISTANCE_THRESHOLD = 0.08
_DEFAULT_DISTANCE = {"circle-grid": 0.7, "upright-ee": 1.5, "straight-ee": 1.5}
_DEFAULT_NOISE = {"circle-grid": 0.05, "upright-ee": 0.1, "straight-ee": 0.1}


# ---------------------------------------------------------------------------
# circle-grid field

@dataclass(frozen=True, eq=False)
class CircleGridField:
    centers: np.ndarray
    radius: float
    falloff: float
    domain: Box

    def __post_init__(self):
        centers = np.asarray(self.centers, dtype=np.float64)
        if centers.ndim != 2 or centers.shape[1] != 2:
            raise ValueError("centers must be (k, 2)")
        if not 0 < self.radius < self.falloff:
            raise ValueError("need 0 < radius < falloff")
        object.__setattr__(self, "centers", centers)


def default_circle_grid() -> CircleGridField:
    """5x5 disc lattice on the unit square."""
    xs = 0.1 + 0.2 * np.arange(5)
    centers = np.array([[x, y] for y in xs for x in xs])
    return CircleGridField(
        centers=centers, radius=0.05, falloff=0.09,
        domain=Box(np.zeros(2), np.ones(2)),
    )


def circle_cost_batch(field_: CircleGridField, points: np.ndarray) -> np.ndarray:
    """Smoothstep disc cost per point; points is (m, 2), result (m,)."""
    P = np.asarray(points, dtype=np.float64)
    centers = field_.centers
    # |p - c|^2 = |p|^2 - 2 p.c + |c|^2, one matmul instead of (m, k, 2) temps
    d2 = (
        np.einsum("ij,ij->i", P, P)[:, None]
        - 2.0 * (P @ centers.T)
        + np.einsum("ij,ij->i", centers, centers)[None, :]
    )
    d = np.sqrt(np.maximum(d2.min(axis=1), 0.0))
    s = np.clip((field_.falloff - d) / (field_.falloff - field_.radius), 0.0, 1.0)
    return s * s * (3.0 - 2.0 * s)


def circle_cost(field_: CircleGridField, point) -> float:
    return float(circle_cost_batch(field_, np.asarray(point, dtype=np.float64)[None, :])[0])


class _CircleCostTerm:
    def __init__(self, field_: CircleGridField):
        self.field = field_

    def __call__(self, q, derivs, i) -> float:
        return circle_cost(self.field, q)

    def batch(self, Q, derivs, idx) -> np.ndarray:
        return circle_cost_batch(self.field, Q)


# ---------------------------------------------------------------------------
# serial chain kinematics (unit quaternions, w-x-y-z)

@dataclass(frozen=True, eq=False)
class SerialChain:
    axes: np.ndarray          # (dof, 3) unit rotation axes in the local frame
    link_offsets: np.ndarray  # (dof, 3) translation after each joint, local frame
    joint_limits: Box

    def __post_init__(self):
        axes = np.asarray(self.axes, dtype=np.float64)
        offs = np.asarray(self.link_offsets, dtype=np.float64)
        if axes.ndim != 2 or axes.shape[1] != 3 or axes.shape != offs.shape:
            raise ValueError("axes and link_offsets must both be (dof, 3)")
        norms = np.linalg.norm(axes, axis=1)
        if not np.allclose(norms, 1.0, atol=1e-12):
            raise ValueError("rotation axes must be unit vectors")
        if self.joint_limits.dimension != axes.shape[0]:
            raise ValueError("joint limits dimension must match dof")
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "link_offsets", offs)

    @property
    def dof(self) -> int:
        return self.axes.shape[0]


def default_chain() -> SerialChain:
    """Generic 7-DOF chain: alternating z/y axes, 0.15 m links, +/- pi limits."""
    axes = np.array([
        [0.0, 0.0, 1.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0],
    ])
    offsets = np.tile(np.array([0.0, 0.0, 0.15]), (7, 1))
    limits = Box(-np.pi * np.ones(7), np.pi * np.ones(7))
    return SerialChain(axes, offsets, limits)


def _quat_mul(q: np.ndarray, r: np.ndarray) -> np.ndarray:
    w1, x1, y1, z1 = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    w2, x2, y2, z2 = r[..., 0], r[..., 1], r[..., 2], r[..., 3]
    return np.stack([
        w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
        w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
        w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
        w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
    ], axis=-1)


def _quat_rotate(q: np.ndarray, v: np.ndarray) -> np.ndarray:
    # v + 2 * qv x (qv x v + w v) for unit quaternions
    qv = q[..., 1:]
    w = q[..., :1]
    t = np.cross(qv, v) + w * v
    return v + 2.0 * np.cross(qv, t)


def _axis_angle_quat(axis: np.ndarray, theta: np.ndarray) -> np.ndarray:
    half = 0.5 * np.asarray(theta, dtype=np.float64)
    w = np.cos(half)
    s = np.sin(half)
    return np.stack([w, s * axis[0], s * axis[1], s * axis[2]], axis=-1)


def _fk_batch(chain: SerialChain, joints: np.ndarray):
    """FK for a batch of joint vectors.

    Returns (frames, quats): frames is (m, dof+1, 3) holding the base origin
    and every link end; quats is (m, 4), renormalized end-effector rotation.
    """
    Q = np.asarray(joints, dtype=np.float64)
    if Q.ndim != 2 or Q.shape[1] != chain.dof:
        raise ValueError(f"joint batch must be (m, {chain.dof})")
    m = Q.shape[0]
    frames = np.zeros((m, chain.dof + 1, 3))
    rot = np.zeros((m, 4))
    rot[:, 0] = 1.0
    pos = np.zeros((m, 3))
    for k in range(chain.dof):
        rot = _quat_mul(rot, _axis_angle_quat(chain.axes[k], Q[:, k]))
        pos = pos + _quat_rotate(rot, chain.link_offsets[k][None, :])
        frames[:, k + 1] = pos
    rot = rot / np.linalg.norm(rot, axis=1, keepdims=True)
    return frames, rot


def forward_kinematics(chain: SerialChain, joints):
    """End-effector (position, quaternion) for one joint vector."""
    q = np.asarray(joints, dtype=np.float64)
    if q.ndim != 1 or q.shape[0] != chain.dof:
        raise ValueError(f"expected {chain.dof} joint values")
    frames, rot = _fk_batch(chain, q[None, :])
    return frames[0, -1].copy(), rot[0].copy()


IDENTITY_QUAT = np.array([1.0, 0.0, 0.0, 0.0])


def quat_angle(q1, q2) -> float:
    """Angle between two unit quaternions, double-cover aware: 2 acos |<q1,q2>|."""
    dot = abs(float(np.dot(q1, q2)))
    return 2.0 * math.acos(min(1.0, dot))


def rot_error(chain: SerialChain, joints, goal=IDENTITY_QUAT) -> float:
    """Geodesic angle between the end-effector orientation and a goal quaternion."""
    _, orientation = forward_kinematics(chain, joints)
    return quat_angle(orientation, np.asarray(goal, dtype=np.float64))


def _rot_error_batch(quats: np.ndarray, goal: np.ndarray) -> np.ndarray:
    dots = np.abs(quats @ goal)
    return 2.0 * np.arccos(np.minimum(1.0, dots))


def _chain_midpoints(frames: np.ndarray) -> np.ndarray:
    # link midpoints from consecutive frame origins; frames is (m, dof+1, 3)
    return 0.5 * (frames[:, :-1] + frames[:, 1:])


def self_distance_penalty(chain: SerialChain, joints,
                          threshold: float = _SELF_DISTANCE_THRESHOLD) -> float:
    """Sum of (threshold - d)^2 over non-adjacent link-midpoint pairs with d < threshold."""
    q = np.asarray(joints, dtype=np.float64)
    return float(_self_distance_batch(chain, q[None, :], threshold)[0])


def _self_distance_batch(chain: SerialChain, joints: np.ndarray,
                         threshold: float) -> np.ndarray:
    frames, _ = _fk_batch(chain, joints)
    mids = _chain_midpoints(frames)
    dof = chain.dof
    pairs = [(i, j) for i in range(dof) for j in range(i + 2, dof)]
    total = np.zeros(joints.shape[0])
    for i, j in pairs:
        d = np.linalg.norm(mids[:, i] - mids[:, j], axis=1)
        gap = np.maximum(threshold - d, 0.0)
        total += gap * gap
    return total


class _RotationGoalTerm:
    """Squared orientation error of the end effector against a goal quaternion."""

    def __init__(self, chain: SerialChain, goal=IDENTITY_QUAT):
        self.chain = chain
        self.goal = np.asarray(goal, dtype=np.float64)

    def __call__(self, q, derivs, i) -> float:
        _, rot = _fk_batch(self.chain, np.asarray(q)[None, :])
        e = _rot_error_batch(rot, self.goal)[0]
        return float(e * e)

    def batch(self, Q, derivs, idx) -> np.ndarray:
        _, rot = _fk_batch(self.chain, Q)
        e = _rot_error_batch(rot, self.goal)
        return e * e


class _SelfDistanceTerm:
    def __init__(self, chain: SerialChain, threshold=_SELF_DISTANCE_THRESHOLD):
        self.chain = chain
        self.threshold = threshold

    def __call__(self, q, derivs, i) -> float:
        return float(_self_distance_batch(self.chain, np.asarray(q)[None, :],
                                          self.threshold)[0])

    def batch(self, Q, derivs, idx) -> np.ndarray:
        return _self_distance_batch(self.chain, Q, self.threshold)


class _EndEffectorAccelTerm:
    """Squared workspace acceleration of the end effector.

    Neighbours are reconstructed from the finite differences available at the
    index itself: q_next = q + q' + q''/2 and q_prev = q - q' + q''/2, which
    are exact inverses of the central stencils at interior indices.
    """

    def __init__(self, chain: SerialChain):
        self.chain = chain

    def _accel(self, Q, derivs):
        vel, acc = derivs[0], derivs[1]
        q_next = Q + vel + 0.5 * acc
        q_prev = Q - vel + 0.5 * acc
        m = Q.shape[0]
        stacked = np.concatenate([q_next, Q, q_prev], axis=0)
        ee = _fk_batch(self.chain, stacked)[0][:, -1]
        a = ee[:m] - 2.0 * ee[m:2 * m] + ee[2 * m:]
        return np.einsum("ij,ij->i", a, a)

    def __call__(self, q, derivs, i) -> float:
        row_derivs = tuple(np.asarray(d)[None, :] for d in derivs)
        return float(self._accel(np.asarray(q)[None, :], row_derivs)[0])

    def batch(self, Q, derivs, idx) -> np.ndarray:
        return self._accel(Q, derivs)


# ---------------------------------------------------------------------------
# scenario assembly

@dataclass(frozen=True, eq=False)
class ScenarioSpec:
    name: str
    waypoints: int = 100
    seed: int = 0
    distance: float = None
    noise: float = None
    weights: dict = field(default_factory=dict)
    field_: CircleGridField = None
    chain: SerialChain = None

    def __post_init__(self):
        if self.name not in SCENARIO_NAMES:
            raise ValueError(f"unknown scenario {self.name!r}; one of {SCENARIO_NAMES}")
        if self.waypoints < 4:
            raise ValueError("scenarios need at least 4 waypoints")

    def resolved_weights(self) -> dict:
        merged = dict(_DEFAULT_WEIGHTS)
        merged.update(self.weights)
        return merged

    def resolved_distance(self) -> float:
        return _DEFAULT_DISTANCE[self.name] if self.distance is None else self.distance

    def resolved_noise(self) -> float:
        return _DEFAULT_NOISE[self.name] if self.noise is None else self.noise

    def resolved_field(self) -> CircleGridField:
        return default_circle_grid() if self.field_ is None else self.field_

    def resolved_chain(self) -> SerialChain:
        return default_chain() if self.chain is None else self.chain


def _smoothness_terms(w: dict):
    return [
        squared_derivative_term(1, w["velocity"]),
        squared_derivative_term(2, w["acceleration"]),
        squared_derivative_term(3, w["jerk"]),
    ]


def build_model(spec: ScenarioSpec) -> ObjectiveModel:
    w = spec.resolved_weights()
    if spec.name == "circle-grid":
        field_ = spec.resolved_field()
        image = _CircleCostTerm(field_)
        terms = [TermSpec(TermKind.INTERIOR, image, w["image"], order=0,
                          batch=image.batch)]
        terms += _smoothness_terms(w)
        return ObjectiveModel(tuple(terms), bounds=field_.domain)
    chain = spec.resolved_chain()
    if spec.name == "upright-ee":
        goal = _RotationGoalTerm(chain)
        task = TermSpec(TermKind.INTERIOR, goal, w["rotation"], order=0,
                        batch=goal.batch)
    else:
        accel = _EndEffectorAccelTerm(chain)
        task = TermSpec(TermKind.INTERIOR, accel, w["ee_accel"], order=2,
                        batch=accel.batch)
    terms = [task] + _smoothness_terms(w)
    dist = _SelfDistanceTerm(chain)
    penalty = TermSpec(TermKind.INTERIOR, dist, w["self_distance"], order=0,
                       batch=dist.batch)
    return ObjectiveModel(tuple(terms), bounds=chain.joint_limits,
                          penalty_terms=(penalty,))


def initial_path(spec: ScenarioSpec, seed: int = None) -> FullPathVector:
    """Seeded initial condition for a scenario (endpoints frozen)."""
    if spec.name == "circle-grid":
        bounds = spec.resolved_field().domain
    else:
        bounds = spec.resolved_chain().joint_limits
    use_seed = spec.seed if seed is None else seed
    return generate_initial_path(
        bounds, spec.resolved_distance(), spec.waypoints - 1,
        spec.resolved_noise(), use_seed,
    )


def build_scenario(spec: ScenarioSpec):
    """(model, initial path) for one scenario instance."""
    return build_model(spec), initial_path(spec)


def quality_metric(spec: ScenarioSpec, path: FullPathVector) -> float:
    """Scenario quality, lower is better.

    circle-grid: mean disc cost over waypoints (0 clears every disc).
    upright-ee: mean orientation error (radians) of the end effector.
    straight-ee: mean norm of the workspace second difference of the end
      effector over interior waypoints (direct differencing of FK positions,
      independent of the objective's stencil reconstruction).
    """
    if spec.name == "circle-grid":
        return float(np.mean(circle_cost_batch(spec.resolved_field(), path.waypoints)))
    chain = spec.resolved_chain()
    frames, quats = _fk_batch(chain, path.waypoints)
    if spec.name == "upright-ee":
        return float(np.mean(_rot_error_batch(quats, IDENTITY_QUAT)))
    ee = frames[:, -1]
    second = ee[2:] - 2.0 * ee[1:-1] + ee[:-2]
    return float(np.mean(np.linalg.norm(second, axis=1)))
