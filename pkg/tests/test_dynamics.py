import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dgvf.coordination import ControlOutput
from dgvf.dynamics import (
    DisturbanceModel,
    ObserverModel,
    RobotState,
    TrackerMode,
    UsvParams,
    UsvState,
    error_dynamics_diagnostic,
    observer_output,
    robot_derivative,
    tracking_error_world,
    usv_derivative,
    velocity_tracker,
)
from dgvf.errors import ConfigurationError
from dgvf.paths import builtin_path, lissajous3d, path_error


def test_robot_derivative_examples():
    s = RobotState([0.0, 0.0], 0.0)
    dx, dw = robot_derivative(s, ControlOutput(np.zeros(2), 0.0), np.zeros(2))
    assert np.all(dx == 0) and dw == 0
    dx, _ = robot_derivative(s, ControlOutput(np.array([1.0, 0.0]), 0.5), np.array([0.1, 0.1]))
    np.testing.assert_allclose(dx, [1.1, 0.1])
    dead = RobotState([3.0, 4.0], 1.0, alive=False)
    dx, dw = robot_derivative(dead, ControlOutput(np.array([1.0, 2.0]), 5.0), np.array([1.0, 1.0]))
    assert np.all(dx == 0) and dw == 0


def test_observer_examples():
    d = np.array([1.0, 0.0])
    np.testing.assert_array_equal(observer_output(ObserverModel("perfect_after", settle_time=1.0), d, 2.0), d)
    np.testing.assert_array_equal(observer_output(ObserverModel("perfect_after", settle_time=1.0), d, 0.5), 0 * d)
    np.testing.assert_array_equal(observer_output(ObserverModel("exponential", rate=1.0), d, 0.0), [0.0, 0.0])
    assert observer_output(ObserverModel("exponential", rate=1.0), d, 50.0)[0] == pytest.approx(1.0)
    np.testing.assert_array_equal(observer_output(ObserverModel("off"), d, 9.0), [0.0, 0.0])
    with pytest.raises(ConfigurationError):
        ObserverModel("exponential", rate=0.0)


def test_disturbance_bounds_checked():
    DisturbanceModel("constant", value=(0.1, 0.1, 0.1), beta1=math.sqrt(3) * 0.1, beta2=0.0)
    with pytest.raises(ConfigurationError):
        DisturbanceModel("constant", value=(1.0, 1.0), beta1=1.0)
    with pytest.raises(ConfigurationError):
        DisturbanceModel("wind")


@settings(max_examples=100, deadline=None)
@given(st.floats(0, 100))
def test_sinusoidal_disturbance_within_declared_bound(t):
    m = DisturbanceModel("sinusoidal", amplitude=(0.3, 0.4), frequency=(1.0, 2.0), phase=(0.0, 1.0), beta1=0.5, beta2=0.9)
    assert np.linalg.norm(m.at(t, 2)) <= 0.5 + 1e-12


def test_error_dynamics_examples():
    path = lissajous3d()
    dphi, dw = error_dynamics_diagnostic(path, 0.7, np.zeros(3), 0.0, np.zeros(3))
    assert np.all(dphi == 0) and dw == 0
    dphi, dw = error_dynamics_diagnostic(path, 0.7, np.zeros(3), 1.0, np.zeros(3))
    np.testing.assert_allclose(dphi, -path.first(0.7))


@settings(max_examples=50, deadline=None)
@given(st.sampled_from(["circle", "lissajous2d", "lissajous3d"]), st.floats(-10, 10), st.floats(-2, 2))
def test_error_dynamics_matches_finite_difference(kind, omega, u_omega):
    path = builtin_path(kind)
    n = path.dimension
    rng = np.random.default_rng(0)
    x0 = path.value(omega) + rng.normal(size=n)
    v, d = rng.normal(size=n), rng.normal(size=n) * 0.1
    h = 1e-6
    phi = lambda t: path_error(path, x0 + (v + d) * t, omega + u_omega * t)
    fd = (phi(h) - phi(-h)) / (2 * h)
    dphi, _ = error_dynamics_diagnostic(path, omega, v, u_omega, d)
    scale = max(1.0, np.abs(path.first(omega)).max(), np.abs(path.second(omega)).max())
    np.testing.assert_allclose(dphi, fd, atol=1e-6 * scale)


def test_usv_derivative_examples():
    p = UsvParams(l1=-1.0)
    np.testing.assert_array_equal(usv_derivative(UsvState([0.0, 0.0]), (0.0, 0.0), p), np.zeros(6))
    out = usv_derivative(UsvState([0.0, 0.0], surge=1.0), (0.0, 0.0), p)
    np.testing.assert_allclose(out, [1, 0, 0, -1, 0, 0])
    out = usv_derivative(UsvState([0.0, 0.0], psi=math.pi / 2, surge=1.0), (0.0, 0.0), p)
    np.testing.assert_allclose(out[:2], [0, 1], atol=1e-15)


def test_usv_derivative_saturates_inputs():
    p = UsvParams(tau_limit=(1.0, 1.0))
    out = usv_derivative(UsvState([0.0, 0.0]), (5.0, -5.0), p)
    assert out[3] == pytest.approx(p.l3) and out[5] == pytest.approx(-p.l5)


def test_tracker_examples():
    ideal = TrackerMode("ideal_exponential", rate=5.0)
    de, dv = velocity_tracker(ideal, UsvState([0, 0], surge=1.0), 0.0, 0.0)
    assert de == pytest.approx(-5.0) and dv == 0.0
    de, dv = velocity_tracker(ideal, UsvState([0, 0], surge=0.4, sway=-0.2), 0.4, -0.2)
    assert de == 0.0 and dv == 0.0
    prop = TrackerMode("proportional", k_surge=2.0)
    params = UsvParams(l1=0.0, l2=0.0, l3=1.0)
    tau1, _ = velocity_tracker(prop, UsvState([0, 0], surge=1.0), 0.0, 0.0, params)
    assert tau1 == pytest.approx(-2.0)


@given(st.floats(-100, 100), st.floats(-100, 100), st.floats(-50, 50))
def test_tracking_error_rotation_preserves_norm(e, v, psi):
    a, b = tracking_error_world(e, v, psi)
    assert a * a + b * b == pytest.approx(e * e + v * v, rel=1e-12, abs=1e-12)
