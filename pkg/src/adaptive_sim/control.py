"""Tracking-error algebra and the four torque laws.

* PID     tau = K2 e2 + KI int e2
* MBFF    tau = K2 e2 + M(q_d) q_d'' + C(q_d, q_d') q_d' + G(q_d)
* RBFNN   tau = K2 e2 + W^T S(Z_d), W adapted online (lattice or clustered nodes)

All gain matrices are diagonal and stored as their diagonals.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import dynamics, rbfnet
from .dynamics import JointState, RobotParams
from .rbfnet import AdaptConfig, RbfNetwork
from .trajectory import DesiredPoint

PID = "PID"
MBFF = "MBFF"
RBFNN = "RBFNN"
VARIANTS = (PID, MBFF, RBFNN)


def _diag(values, name):
    arr = np.array(values, dtype=float).reshape(-1)
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise ValueError(f"{name} entries must be finite and non-negative, got {arr.tolist()}")
    return arr


@dataclass(frozen=True)
class GainSet:
    K1: np.ndarray
    K2: np.ndarray
    KI: np.ndarray = None
    adapt: Optional[AdaptConfig] = None

    def __post_init__(self):
        object.__setattr__(self, "K1", _diag(self.K1, "K1"))
        object.__setattr__(self, "K2", _diag(self.K2, "K2"))
        ki = np.zeros_like(self.K1) if self.KI is None else self.KI
        object.__setattr__(self, "KI", _diag(ki, "KI"))
        if not (self.K1.shape == self.K2.shape == self.KI.shape):
            raise ValueError("K1, K2 and KI must have the same length")

    def to_dict(self) -> dict:
        out = {"K1": self.K1.tolist(), "K2": self.K2.tolist(), "KI": self.KI.tolist()}
        if self.adapt is not None:
            out.update(gamma=self.adapt.gamma, delta0=self.adapt.delta0, w0=self.adapt.w0)
        return out


@dataclass(frozen=True)
class ErrorPair:
    e1: np.ndarray
    e1_dot: np.ndarray
    e2: np.ndarray
    K1: np.ndarray

    def reference_velocity(self, qd_dot) -> np.ndarray:
        """q_r' = q_d' + K1 e1."""
        return np.asarray(qd_dot, dtype=float) + self.K1 * self.e1

    def reference_acceleration(self, qd_ddot) -> np.ndarray:
        """q_r'' = q_d'' + K1 e1'."""
        return np.asarray(qd_ddot, dtype=float) + self.K1 * self.e1_dot


def composite_error(qd, qd_dot, state: JointState, K1) -> ErrorPair:
    K1 = np.asarray(K1, dtype=float)
    e1 = np.asarray(qd, dtype=float) - state.q
    e1_dot = np.asarray(qd_dot, dtype=float) - state.qdot
    return ErrorPair(e1, e1_dot, e1_dot + K1 * e1, K1)


@dataclass(frozen=True)
class ControllerState:
    variant: str
    gains: GainSet
    integral: np.ndarray = None
    net: Optional[RbfNetwork] = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown controller variant {self.variant!r}")
        if self.integral is None:
            object.__setattr__(self, "integral", np.zeros_like(self.gains.K1))
        if self.variant == RBFNN:
            if self.net is None:
                raise ValueError("RBFNN controller needs a network")
            if self.gains.adapt is None:
                raise ValueError("RBFNN controller needs an adaptation config")


def pid_torque(state: ControllerState, err: ErrorPair, dt: float):
    """PID on the composite error.

    The torque uses the integral of e2 over previous steps; the current e2 is
    accumulated afterwards, the same causal ordering as the network update.
    """
    g = state.gains
    tau = g.K2 * err.e2 + g.KI * state.integral
    return tau, replace(state, integral=state.integral + err.e2 * dt)


def feedforward_torque(params: RobotParams, desired: DesiredPoint) -> np.ndarray:
    return dynamics.inverse_dynamics(params, desired.qd, desired.qd_dot, desired.qd_ddot)


def mbff_torque(params: RobotParams, gains: GainSet, err: ErrorPair, desired: DesiredPoint) -> np.ndarray:
    return gains.K2 * err.e2 + feedforward_torque(params, desired)


def rbf_torque(state: ControllerState, err: ErrorPair, zd, dt: float):
    """Torque from the current weights, then one adaptation step."""
    tau, new_state, _, _ = rbf_step(state, err, zd, dt)
    return tau, new_state


def rbf_step(state: ControllerState, err: ErrorPair, zd, dt: float):
    """As rbf_torque, also returning the activations and the network output."""
    net = state.net
    s = rbfnet.activations(net, zd)
    nn_out = net.weights.T @ s
    tau = state.gains.K2 * err.e2 + nn_out
    new_w = rbfnet.adapt_step(net, state.gains.adapt, s, err.e2, dt)
    return tau, replace(state, net=net.with_weights(new_w)), s, nn_out


def residuals(params: RobotParams, state: JointState, err: ErrorPair, desired: DesiredPoint):
    """Mismatch between the composite and the feedforward dynamics.

    Returns (H1, H2); H1 uses C(q, q') q_r', H2 uses C(q, q') q'.
    """
    q, qdot = state.q, state.qdot
    qr_dot = err.reference_velocity(desired.qd_dot)
    qr_ddot = err.reference_acceleration(desired.qd_ddot)
    m = dynamics.mass_matrix(params, q)
    c = dynamics.coriolis_matrix(params, q, qdot)
    g = dynamics.gravity_vector(params, q)
    ff = feedforward_torque(params, desired)
    h1 = m @ qr_ddot + c @ qr_dot + g - ff
    h2 = m @ qr_ddot + c @ qdot + g - ff
    return h1, h2
