import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, strategies as st

from adaptive_sim import dynamics
from adaptive_sim.dynamics import JointState, RobotParams

UNIT = RobotParams()


def _lagrangian_oracle():
    """Equations of motion of the point-mass arm derived symbolically from its Lagrangian."""
    t = sp.symbols("t")
    m1, m2, l1, l2, g = sp.symbols("m1 m2 l1 l2 g", positive=True)
    q1, q2 = sp.Function("q1")(t), sp.Function("q2")(t)
    x1, y1 = l1 * sp.cos(q1), l1 * sp.sin(q1)
    x2, y2 = x1 + l2 * sp.cos(q1 + q2), y1 + l2 * sp.sin(q1 + q2)
    kin = m1 * (x1.diff(t) ** 2 + y1.diff(t) ** 2) / 2 + m2 * (x2.diff(t) ** 2 + y2.diff(t) ** 2) / 2
    pot = m1 * g * y1 + m2 * g * y2
    lag = kin - pot
    taus = [sp.simplify(lag.diff(q.diff(t)).diff(t) - lag.diff(q)) for q in (q1, q2)]
    a, b, va, vb, aa, ab = sp.symbols("a b va vb aa ab")
    subs = {q1.diff(t, 2): aa, q2.diff(t, 2): ab}
    subs2 = {q1.diff(t): va, q2.diff(t): vb}
    subs3 = {q1: a, q2: b}
    exprs = [tau.subs(subs).subs(subs2).subs(subs3) for tau in taus]
    return sp.lambdify((m1, m2, l1, l2, g, a, b, va, vb, aa, ab), exprs, "math")


ORACLE = _lagrangian_oracle()
PARAMS = st.builds(RobotParams, *[st.floats(0.1, 3.0)] * 4, st.floats(0.0, 12.0))
ANGLE = st.floats(-2 * math.pi, 2 * math.pi)
RATE = st.floats(-5.0, 5.0)


def test_mass_matrix_examples():
    np.testing.assert_allclose(dynamics.mass_matrix(UNIT, [0.3, math.pi / 2]), [[3, 1], [1, 1]], atol=1e-15)
    np.testing.assert_array_equal(dynamics.mass_matrix(UNIT, [0.0, 0.0]), [[5, 2], [2, 1]])


def test_mass_matrix_positive_definite_random(rng):
    for q in rng.uniform(-10, 10, size=(10_000, 2)):
        m = dynamics.mass_matrix(UNIT, q)
        assert m[0, 1] == m[1, 0]
        assert np.linalg.eigvalsh(m)[0] > 0


def test_mass_matrix_positive_definite_dense_grid():
    p = RobotParams(0.8, 0.2, 0.5, 0.5)
    lows = [np.linalg.eigvalsh(dynamics.mass_matrix(p, [0.0, q2]))[0] for q2 in np.linspace(0, 2 * np.pi, 2000, endpoint=False)]
    assert min(lows) > 0


def test_coriolis_examples(rng):
    np.testing.assert_array_equal(dynamics.coriolis_matrix(UNIT, [0.4, 1.1], [0.0, 0.0]), np.zeros((2, 2)))
    np.testing.assert_array_equal(dynamics.coriolis_matrix(UNIT, [0.4, 0.0], rng.normal(size=2)), np.zeros((2, 2)))


def test_skew_symmetry_random(rng):
    # dM/dt written out independently: only q2 enters M
    p = RobotParams(1.3, 0.7, 0.9, 1.1)
    worst = 0.0
    for _ in range(10_000):
        q, qdot, z = rng.uniform(-4, 4, 2), rng.uniform(-5, 5, 2), rng.uniform(-3, 3, 2)
        k = -p.m2 * p.l1 * p.l2 * math.sin(q[1]) * qdot[1]
        mdot = k * np.array([[2.0, 1.0], [1.0, 0.0]])
        np.testing.assert_allclose(dynamics.mass_matrix_derivative(p, q, qdot), mdot, atol=1e-14)
        n = mdot - 2 * dynamics.coriolis_matrix(p, q, qdot)
        worst = max(worst, abs(z @ n @ z))
    assert worst <= 1e-10


def test_gravity_examples():
    np.testing.assert_array_equal(dynamics.gravity_vector(RobotParams(g=0.0), [0.3, 0.2]), [0.0, 0.0])
    np.testing.assert_allclose(dynamics.gravity_vector(UNIT, [math.pi / 2, 0.0]), [0.0, 0.0], atol=1e-14)
    np.testing.assert_allclose(dynamics.gravity_vector(UNIT, [0.0, 0.0]), [29.4, 9.8], rtol=1e-15)


@given(PARAMS, ANGLE, ANGLE, RATE, RATE, RATE, RATE)
def test_inverse_dynamics_matches_lagrangian(p, a, b, va, vb, aa, ab):
    expected = ORACLE(p.m1, p.m2, p.l1, p.l2, p.g, a, b, va, vb, aa, ab)
    got = dynamics.inverse_dynamics(p, [a, b], [va, vb], [aa, ab])
    np.testing.assert_allclose(got, expected, rtol=1e-10, atol=1e-10)


@given(PARAMS, ANGLE, ANGLE, RATE, RATE, RATE, RATE)
def test_forward_inverse_round_trip(p, a, b, va, vb, aa, ab):
    state = JointState([a, b], [va, vb])
    tau = dynamics.inverse_dynamics(p, state.q, state.qdot, [aa, ab])
    acc = dynamics.forward_dynamics(p, state, tau)
    np.testing.assert_allclose(acc, [aa, ab], rtol=1e-10, atol=1e-10)
    np.testing.assert_allclose(dynamics.inverse_dynamics(p, state.q, state.qdot, acc), tau, rtol=1e-12, atol=1e-10)


def test_forward_dynamics_equilibria():
    q = np.array([0.7, -0.4])
    tau = dynamics.gravity_vector(UNIT, q)
    np.testing.assert_allclose(dynamics.forward_dynamics(UNIT, JointState(q, [0, 0]), tau), [0, 0], atol=1e-13)
    flat = RobotParams(g=0.0)
    np.testing.assert_array_equal(dynamics.forward_dynamics(flat, JointState(q, [0, 0]), [0, 0]), [0, 0])


def test_inverse_dynamics_special_cases(rng):
    q = rng.normal(size=2)
    np.testing.assert_allclose(dynamics.inverse_dynamics(UNIT, q, [0, 0], [0, 0]), dynamics.gravity_vector(UNIT, q))
    acc = rng.normal(size=2)
    flat = RobotParams(g=0.0)
    np.testing.assert_allclose(dynamics.inverse_dynamics(flat, q, [0, 0], acc), dynamics.mass_matrix(flat, q) @ acc,
                               rtol=1e-14)


def test_kinetic_energy():
    q, qdot = np.array([0.2, 0.5]), np.array([1.0, -2.0])
    assert dynamics.kinetic_energy(UNIT, q, qdot) == pytest.approx(0.5 * qdot @ dynamics.mass_matrix(UNIT, q) @ qdot)


def test_degenerate_mass_guard():
    tiny = RobotParams(1e-9, 1e-9, 1e-3, 1e-3)
    with pytest.raises(dynamics.DegenerateMassError):
        dynamics.forward_dynamics(tiny, JointState([0, 0], [0, 0]), [0, 0])


@pytest.mark.parametrize("bad", [dict(m1=0.0), dict(l2=-1.0), dict(g=-9.8), dict(m2=float("nan"))])
def test_params_validation(bad):
    with pytest.raises(ValueError):
        RobotParams(**bad)


def test_params_json_round_trip():
    p = RobotParams(0.8, 0.2, 0.5, 0.5, 9.81)
    assert RobotParams.from_dict(p.to_dict()) == p
    assert set(p.to_dict()) == {"m1", "m2", "l1", "l2", "g"}
    with pytest.raises(ValueError):
        RobotParams.from_dict({"m1": 1.0, "mass": 2.0})


def test_joint_state_validation():
    with pytest.raises(ValueError):
        JointState([0.0, float("inf")], [0.0, 0.0])
    with pytest.raises(ValueError):
        JointState([0.0, 0.0, 0.0], [0.0, 0.0])
