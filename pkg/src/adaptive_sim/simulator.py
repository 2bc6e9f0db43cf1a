"""Fixed-step closed-loop simulation of the two-link arm.

Per step: sample the reference, form the errors, compute one torque, hold it
over the step (zero-order hold) while the plant is integrated.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import control, dynamics
from .dynamics import JointState, RobotParams
from .rbfnet import RbfNetwork
from .scenario import Scenario
from .trajectory import sample

DIVERGENCE_LIMIT = 1e6

SERIES = ("q", "qdot", "qd", "e1", "e2", "tau", "nn", "ff", "wnorm", "dw")
CSV_COLUMNS = ("t", "q1", "q2", "qd1", "qd2", "e11", "e12", "e21", "e22",
               "tau1", "tau2", "nn1", "nn2", "ff1", "ff2", "wnorm1", "wnorm2")


class DivergedError(RuntimeError):
    def __init__(self, step: int, t: float, speed: float):
        super().__init__(f"run diverged at step {step} (t = {t:g} s): |qdot| = {speed:g} rad/s")
        self.step = step
        self.t = t


@dataclass
class RunResult:
    """Recorded time series; every array has one row per recorded step.

    ``nn`` is W^T S(Z_d) (NaN for controllers without a network), ``ff`` the
    feedforward torque at the desired state, ``wnorm`` the per-joint weight
    column norm before the step's update and ``dw`` the largest per-joint
    weight change norm among the steps covered by the record.
    """

    name: str
    variant: str
    dt: float
    decimation: int
    t: np.ndarray
    q: np.ndarray
    qdot: np.ndarray
    qd: np.ndarray
    e1: np.ndarray
    e2: np.ndarray
    tau: np.ndarray
    nn: np.ndarray
    ff: np.ndarray
    wnorm: np.ndarray
    dw: np.ndarray
    K1: np.ndarray
    K2: np.ndarray
    final_network: Optional[RbfNetwork] = None
    snapshots: list = field(default_factory=list)

    @property
    def has_network(self) -> bool:
        return self.variant == control.RBFNN

    def csv_rows(self):
        block = np.column_stack([self.t, self.q, self.qd, self.e1, self.e2, self.tau, self.nn, self.ff, self.wnorm])
        return block


def integrate_step(params: RobotParams, state: JointState, tau, dt: float, method: str = "euler") -> JointState:
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt!r}")
    q, qdot = _advance(params, state.q, state.qdot, np.asarray(tau, dtype=float), dt, method)
    return JointState(q, qdot)


def _advance(params, q, qdot, tau, dt, method):
    accel = dynamics._accel
    if method == "euler":
        qdot_new = qdot + accel(params, q, qdot, tau) * dt
        return q + qdot_new * dt, qdot_new
    if method == "rk4":
        a1 = accel(params, q, qdot, tau)
        v1 = qdot
        v2 = qdot + 0.5 * dt * a1
        a2 = accel(params, q + 0.5 * dt * v1, v2, tau)
        v3 = qdot + 0.5 * dt * a2
        a3 = accel(params, q + 0.5 * dt * v2, v3, tau)
        v4 = qdot + dt * a3
        a4 = accel(params, q + dt * v3, v4, tau)
        q_new = q + dt / 6.0 * (v1 + 2.0 * v2 + 2.0 * v3 + v4)
        qdot_new = qdot + dt / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
        return q_new, qdot_new
    raise ValueError(f"unknown integrator {method!r}")


def run(scenario: Scenario, network: Optional[RbfNetwork] = None) -> RunResult:
    """Simulate one scenario. A prebuilt ``network`` overrides the scenario's source."""
    spec = scenario.controller
    params = scenario.robot
    gains = spec.gains
    dt = scenario.dt
    n_steps = scenario.n_steps
    dec = int(scenario.record_decimation)
    n_rec = (n_steps + dec - 1) // dec

    net = network if network is not None else scenario.build_network()
    state = control.ControllerState(spec.variant, gains, net=net)
    n = 2
    rec = {name: np.full((n_rec, n), np.nan) for name in SERIES}
    times = np.empty(n_rec)
    snap_every = max(1, int(round(scenario.snapshot_every / dt))) if scenario.snapshot_every > 0 else 0
    snapshots = []

    q = scenario.initial.q.copy()
    qdot = scenario.initial.qdot.copy()
    K1, K2 = gains.K1, gains.K2
    is_rbf = spec.variant == control.RBFNN
    dw_block = np.zeros(n)
    zero_wn = np.zeros(n)

    for k in range(n_steps):
        t = k * dt
        des = sample(scenario.trajectory, t)
        e1 = des.qd - q
        e1_dot = des.qd_dot - qdot
        err = control.ErrorPair(e1, e1_dot, e1_dot + K1 * e1, K1)
        record = k % dec == 0
        nn_out = None
        if spec.variant == control.PID:
            tau, state = control.pid_torque(state, err, dt)
            ff = control.feedforward_torque(params, des) if record else None
        elif spec.variant == control.MBFF:
            ff = control.feedforward_torque(params, des)
            tau = K2 * err.e2 + ff
        else:
            w_old = state.net.weights
            tau, state, _, nn_out = control.rbf_step(state, err, des.as_input, dt)
            diff = state.net.weights - w_old
            np.maximum(dw_block, np.sqrt(np.einsum("ij,ij->j", diff, diff)), out=dw_block)
            ff = control.feedforward_torque(params, des) if record else None
            if snap_every and k % snap_every == 0:
                snapshots.append((t, w_old.copy()))

        if record:
            i = k // dec
            times[i] = t
            rec["q"][i] = q
            rec["qdot"][i] = qdot
            rec["qd"][i] = des.qd
            rec["e1"][i] = e1
            rec["e2"][i] = err.e2
            rec["tau"][i] = tau
            rec["ff"][i] = ff
            if is_rbf:
                rec["nn"][i] = nn_out
                rec["wnorm"][i] = np.sqrt(np.einsum("ij,ij->j", w_old, w_old))
            else:
                rec["wnorm"][i] = zero_wn
        if is_rbf and (k % dec == dec - 1 or k == n_steps - 1):
            rec["dw"][k // dec] = dw_block
            dw_block = np.zeros(n)
        elif not is_rbf and record:
            rec["dw"][k // dec] = zero_wn

        q, qdot = _advance(params, q, qdot, tau, dt, scenario.integrator)
        speed = math.hypot(qdot[0], qdot[1])
        if not speed <= DIVERGENCE_LIMIT:
            raise DivergedError(k, t, speed)

    final_net = state.net.with_weights(state.net.weights) if is_rbf else None
    if is_rbf:
        snapshots.append((n_steps * dt, final_net.weights.copy()))
    return RunResult(spec.name, spec.variant, dt, dec, times, rec["q"], rec["qdot"], rec["qd"], rec["e1"],
                     rec["e2"], rec["tau"], rec["nn"], rec["ff"], rec["wnorm"], rec["dw"], K1.copy(), K2.copy(),
                     final_net, snapshots)


def _run_or_error(scenario: Scenario):
    try:
        return run(scenario)
    except Exception as exc:  # reported per entry; siblings keep running
        return exc


def max_workers(n_jobs: int) -> int:
    cap = os.environ.get("ADAPTIVE_SIM_THREADS")
    limit = os.cpu_count() or 1
    if cap:
        limit = min(limit, max(1, int(cap)))
    return max(1, min(limit, n_jobs))


def run_comparison(base: Scenario, controllers, workers: Optional[int] = None) -> list:
    """One run per controller spec on the shared plant, reference and step.

    Entries that fail hold the exception instead of a RunResult.
    """
    scenarios = [replace(base, controller=c) for c in controllers]
    workers = max_workers(len(scenarios)) if workers is None else workers
    if workers <= 1:
        return [_run_or_error(s) for s in scenarios]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_or_error, scenarios))
