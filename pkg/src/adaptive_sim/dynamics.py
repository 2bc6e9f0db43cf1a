"""Two-link planar manipulator with point masses at the link tips.

    M(q) q'' + C(q, q') q' + G(q) = tau

Joint angles are measured from the horizontal; joint 2 is relative to link 1.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np


class DegenerateMassError(ArithmeticError):
    """Raised when the inertia matrix is numerically singular."""


@dataclass(frozen=True)
class RobotParams:
    m1: float = 1.0
    m2: float = 1.0
    l1: float = 1.0
    l2: float = 1.0
    g: float = 9.8

    def __post_init__(self):
        for name in ("m1", "m2", "l1", "l2"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be positive and finite, got {value!r}")
        if not (math.isfinite(self.g) and self.g >= 0):
            raise ValueError(f"g must be non-negative, got {self.g!r}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RobotParams":
        unknown = set(data) - {"m1", "m2", "l1", "l2", "g"}
        if unknown:
            raise ValueError(f"unknown robot fields: {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in data.items()})


@dataclass(frozen=True)
class JointState:
    q: np.ndarray = field(default_factory=lambda: np.zeros(2))
    qdot: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float).reshape(2)
        qdot = np.asarray(self.qdot, dtype=float).reshape(2)
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(qdot))):
            raise ValueError("joint state must be finite")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "qdot", qdot)


def mass_matrix(params: RobotParams, q) -> np.ndarray:
    m1, m2, l1, l2 = params.m1, params.m2, params.l1, params.l2
    a = m2 * l2 * l2
    b = m2 * l1 * l2 * math.cos(q[1])
    off = a + b
    return np.array([[(m1 + m2) * l1 * l1 + a + 2.0 * b, off], [off, a]])


def mass_matrix_derivative(params: RobotParams, q, qdot) -> np.ndarray:
    """Time derivative of M(q); only q2 enters M so this is dM/dq2 * q2'."""
    d = -params.m2 * params.l1 * params.l2 * math.sin(q[1]) * qdot[1]
    return np.array([[2.0 * d, d], [d, 0.0]])


def coriolis_matrix(params: RobotParams, q, qdot) -> np.ndarray:
    # Christoffel form, so that Mdot - 2C is skew-symmetric.
    h = params.m2 * params.l1 * params.l2 * math.sin(q[1])
    return np.array([[-h * qdot[1], -h * (qdot[0] + qdot[1])], [h * qdot[0], 0.0]])


def gravity_vector(params: RobotParams, q) -> np.ndarray:
    c12 = math.cos(q[0] + q[1])
    g2 = params.m2 * params.g * params.l2 * c12
    g1 = (params.m1 + params.m2) * params.g * params.l1 * math.cos(q[0]) + g2
    return np.array([g1, g2])


def inverse_dynamics(params: RobotParams, q, qdot, qddot) -> np.ndarray:
    """Torque M(q) q'' + C(q, q') q' + G(q)."""
    q = np.asarray(q, dtype=float)
    qdot = np.asarray(qdot, dtype=float)
    return (
        mass_matrix(params, q) @ np.asarray(qddot, dtype=float)
        + coriolis_matrix(params, q, qdot) @ qdot
        + gravity_vector(params, q)
    )


def forward_dynamics(params: RobotParams, state: JointState, tau) -> np.ndarray:
    return _accel(params, state.q, state.qdot, np.asarray(tau, dtype=float))


def _accel(params: RobotParams, q, qdot, tau) -> np.ndarray:
    # Scalar closed form; called several times per simulation step.
    m1, m2, l1, l2 = params.m1, params.m2, params.l1, params.l2
    c2 = math.cos(q[1])
    s2 = math.sin(q[1])
    a = m2 * l2 * l2
    b = m2 * l1 * l2 * c2
    m11 = (m1 + m2) * l1 * l1 + a + 2.0 * b
    m12 = a + b
    m22 = a
    det = m11 * m22 - m12 * m12
    if abs(det) < 1e-12:
        raise DegenerateMassError(f"det M = {det:g} at q = {tuple(q)}")
    h = m2 * l1 * l2 * s2
    v1 = qdot[0]
    v2 = qdot[1]
    c12 = math.cos(q[0] + q[1])
    g2 = m2 * params.g * l2 * c12
    g1 = (m1 + m2) * params.g * l1 * math.cos(q[0]) + g2
    # tau - C qdot - G
    r1 = tau[0] - (-h * v2 * v1 - h * (v1 + v2) * v2) - g1
    r2 = tau[1] - h * v1 * v1 - g2
    return np.array([(m22 * r1 - m12 * r2) / det, (m11 * r2 - m12 * r1) / det])


def kinetic_energy(params: RobotParams, q, qdot) -> float:
    qdot = np.asarray(qdot, dtype=float)
    return 0.5 * float(qdot @ mass_matrix(params, q) @ qdot)
