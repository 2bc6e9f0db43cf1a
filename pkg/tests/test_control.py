import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from adaptive_sim import control, dynamics
from adaptive_sim.control import ControllerState, ErrorPair, GainSet
from adaptive_sim.dynamics import JointState, RobotParams
from adaptive_sim.rbfnet import AdaptConfig, RbfNetwork
from adaptive_sim.trajectory import standard_trajectory, sample

K1 = [10.0, 6.0]
K2 = [3.0, 1.8]
VEC2 = arrays(float, 2, elements=st.floats(-5.0, 5.0))


def _err(e1, e1_dot, k1=K1):
    k1 = np.asarray(k1, dtype=float)
    e1, e1_dot = np.asarray(e1, dtype=float), np.asarray(e1_dot, dtype=float)
    return ErrorPair(e1, e1_dot, e1_dot + k1 * e1, k1)


def test_composite_error_examples():
    z = control.composite_error([0.3, 0.1], [1.0, -1.0], JointState([0.3, 0.1], [1.0, -1.0]), K1)
    assert np.all(z.e1 == 0) and np.all(z.e1_dot == 0) and np.all(z.e2 == 0)
    e = control.composite_error([0.1, 0.2], [0.0, 0.0], JointState([0.0, 0.0], [0.0, 0.0]), K1)
    np.testing.assert_allclose(e.e2, [1.0, 1.2], rtol=1e-15)
    v = np.array([0.4, -0.9])
    e = control.composite_error([0.0, 0.0], v, JointState([0.0, 0.0], [0.0, 0.0]), K1)
    np.testing.assert_array_equal(e.e2, v)


@given(VEC2, VEC2)
def test_pd_decomposition(e1, e1_dot):
    err = _err(e1, e1_dot)
    k2 = np.array(K2)
    np.testing.assert_allclose(k2 * err.e2, np.array(K1) * k2 * e1 + k2 * e1_dot, rtol=1e-12, atol=1e-12)


def test_pid_examples():
    st0 = ControllerState(control.PID, GainSet(K1, K2, [0.05, 0.05]))
    tau, _ = control.pid_torque(st0, _err([0, 0], [0, 0]), 0.01)
    np.testing.assert_array_equal(tau, [0, 0])
    tau, _ = control.pid_torque(ControllerState(control.PID, GainSet(K1, K2)), _err([0, 0], [1, 1]), 0.01)
    np.testing.assert_allclose(tau, [3.0, 1.8])


def test_pid_discrete_integral():
    state = ControllerState(control.PID, GainSet(K1, [0.0, 0.0], [0.05, 0.2]))
    c = np.array([0.3, -0.7])
    err = _err([0, 0], c)
    dt, k = 0.01, 57
    for _ in range(k):
        _, state = control.pid_torque(state, err, dt)
    np.testing.assert_allclose(state.integral, c * k * dt, rtol=1e-12)
    # the integral accumulated over k steps drives the next torque
    tau, _ = control.pid_torque(state, err, dt)
    np.testing.assert_allclose(tau, np.array([0.05, 0.2]) * c * k * dt, rtol=1e-12)


def test_mbff_examples(rng):
    p = RobotParams()
    gains = GainSet(K1, K2)
    des = sample(standard_trajectory(), 0.7)
    np.testing.assert_array_equal(control.mbff_torque(p, gains, _err([0, 0], [0, 0]), des),
                                  dynamics.inverse_dynamics(p, des.qd, des.qd_dot, des.qd_ddot))
    from adaptive_sim.trajectory import DesiredPoint
    static = DesiredPoint(np.array([0.3, 0.2]), np.zeros(2), np.zeros(2))
    np.testing.assert_allclose(control.mbff_torque(p, gains, _err([0, 0], [0, 0]), static),
                               dynamics.gravity_vector(p, [0.3, 0.2]), rtol=1e-15)
    for _ in range(50):
        des = sample(standard_trajectory(), rng.uniform(0, 10))
        err = _err(rng.normal(size=2), rng.normal(size=2))
        expect = np.array(K2) * err.e2 + dynamics.inverse_dynamics(p, des.qd, des.qd_dot, des.qd_ddot)
        np.testing.assert_allclose(control.mbff_torque(p, gains, err, des), expect, rtol=1e-12, atol=1e-12)


def test_rbf_first_step_is_pd(rng):
    net = RbfNetwork(rng.normal(size=(5, 6)), 1.1)
    state = ControllerState(control.RBFNN, GainSet(K1, K2, adapt=AdaptConfig()), net=net)
    err = _err(rng.normal(size=2), rng.normal(size=2))
    tau, new = control.rbf_torque(state, err, rng.normal(size=6), 0.01)
    np.testing.assert_array_equal(tau, np.array(K2) * err.e2)
    assert np.any(new.net.weights != 0)
    assert np.all(state.net.weights == 0)   # inputs are not mutated


def test_set_point_single_node_equals_pid(rng):
    gamma = 0.05
    zd = np.array([0.2, -0.1, 0, 0, 0, 0])
    rbf = ControllerState(control.RBFNN, GainSet(K1, K2, adapt=AdaptConfig(gamma, 0.0, 10.0)),
                          net=RbfNetwork([zd], 1.1))
    pid = ControllerState(control.PID, GainSet(K1, K2, [gamma, gamma]))
    for _ in range(500):
        err = _err(rng.normal(size=2), rng.normal(size=2))
        t_rbf, rbf = control.rbf_torque(rbf, err, zd, 0.01)
        t_pid, pid = control.pid_torque(pid, err, 0.01)
        np.testing.assert_allclose(t_rbf, t_pid, rtol=0, atol=1e-12)


def test_wide_network_equals_scaled_pid(rng):
    m, gamma = 8, 0.05
    net = RbfNetwork(rng.uniform(-2, 2, size=(m, 6)), 1e9)
    rbf = ControllerState(control.RBFNN, GainSet(K1, K2, adapt=AdaptConfig(gamma, 0.0, np.inf)), net=net)
    pid = ControllerState(control.PID, GainSet(K1, K2, [gamma * m] * 2))
    for _ in range(500):
        err = _err(rng.normal(size=2), rng.normal(size=2))
        zd = rng.normal(size=6)
        t_rbf, rbf = control.rbf_torque(rbf, err, zd, 0.01)
        t_pid, pid = control.pid_torque(pid, err, 0.01)
        np.testing.assert_allclose(t_rbf, t_pid, rtol=1e-6, atol=1e-12)


def test_residuals_vanish_on_perfect_tracking():
    p = RobotParams()
    des = sample(standard_trajectory(), 1.3)
    state = JointState(des.qd, des.qd_dot)
    h1, h2 = control.residuals(p, state, _err([0, 0], [0, 0]), des)
    np.testing.assert_allclose(h1, 0, atol=1e-13)
    np.testing.assert_allclose(h2, 0, atol=1e-13)


def test_residuals_agree_when_errors_vanish():
    p = RobotParams()
    des = sample(standard_trajectory(), 0.4)
    state = JointState(des.qd + 0.0, des.qd_dot)
    h1, h2 = control.residuals(p, state, _err([0, 0], [0, 0]), des)
    np.testing.assert_allclose(h1 - h2, 0, atol=1e-13)


def test_residuals_shrink_with_error_scale(rng):
    p = RobotParams()
    for _ in range(20):
        des = sample(standard_trajectory(), rng.uniform(0, 7))
        d_q, d_v = 0.05 * rng.normal(size=2), 0.05 * rng.normal(size=2)
        norms = []
        for scale in (1.0, 0.5, 0.25, 0.125):
            state = JointState(des.qd - scale * d_q, des.qd_dot - scale * d_v)
            err = control.composite_error(des.qd, des.qd_dot, state, K1)
            norms.append(np.linalg.norm(control.residuals(p, state, err, des)[0]))
        assert all(b < a for a, b in zip(norms, norms[1:]))


def test_gain_validation():
    with pytest.raises(ValueError):
        GainSet([10.0, -1.0], K2)
    with pytest.raises(ValueError):
        GainSet(K1, [3.0, 1.8, 1.0])
    with pytest.raises(ValueError):
        ControllerState(control.RBFNN, GainSet(K1, K2, adapt=AdaptConfig()))
    with pytest.raises(ValueError):
        ControllerState("LQR", GainSet(K1, K2))
    g = GainSet(K1, K2, [0.05, 0.05], AdaptConfig(6.0, 0.01, 10.0))
    assert g.to_dict() == {"K1": K1, "K2": K2, "KI": [0.05, 0.05], "gamma": 6.0, "delta0": 0.01, "w0": 10.0}
