import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from dgvf.analysis import (
    Tolerances,
    barrier_integral,
    convergence_time,
    has_ties,
    lyapunov_diagnostics,
    ordering,
    verify_platoon,
)
from dgvf.coordination import dgvf_control, pairwise_repulsion, target_rate
from dgvf.errors import AnalysisError, DomainError
from dgvf.gvf import GainSet
from dgvf.paths import circle, lissajous3d
from scipy.integrate import quad


def test_ordering_examples():
    assert list(ordering([2.1, 0.3, 1.0]) + 1) == [2, 3, 1]
    assert list(ordering([5.0]) + 1) == [1]
    assert list(ordering([1.0, 1.0]) + 1) == [1, 2]
    assert has_ties([1.0, 1.0])
    assert list(ordering([2.1, 0.3, 1.0], [True, False, True]) + 1) == [3, 1]
    with pytest.raises(AnalysisError):
        ordering([1.0], [False])


def test_barrier_closed_form():
    assert barrier_integral(0.85, 0.7, 1.0) == pytest.approx(math.log(2) - 0.5, abs=1e-12)
    assert barrier_integral(1.0, 0.7, 1.0) == pytest.approx(0.0, abs=1e-15)
    assert barrier_integral(3.0, 0.7, 1.0) == 0.0
    with pytest.raises(DomainError):
        barrier_integral(0.7, 0.7, 1.0)


@given(st.floats(0.7001, 1.0))
def test_barrier_matches_quadrature(s):
    val, _ = quad(lambda u: 1 / (u - 0.7) - 1 / 0.3, s, 1.0, epsabs=1e-13, epsrel=1e-12)
    assert barrier_integral(s, 0.7, 1.0) == pytest.approx(val, rel=1e-8, abs=1e-10)


def test_lyapunov_perfect_platoon_is_zero():
    path = lissajous3d()
    g = GainSet(k=(0.6,) * 3, c=3.0, R=0.6, r=0.4)
    omega = np.array([0.0])
    lt = lyapunov_diagnostics(path, path.value(omega), omega, omega, 0.0, g)
    assert lt.V == 0.0 and lt.Omega == 0.0


def test_lyapunov_counts_each_pair_once():
    path = circle(1.0)
    g = GainSet(k=(1.0, 1.0), c=1.0, R=1.0, r=0.7)
    omega = np.array([0.0, 0.85])
    x = path.value(omega)
    lt = lyapunov_diagnostics(path, x, omega, np.zeros(2), 0.0, g)
    quad_part = 0.5 * 1.0 * 0.85**2
    assert lt.V - quad_part == pytest.approx(math.log(2) - 0.5, abs=1e-12)


def test_lyapunov_invalid_when_gap_below_safe_radius():
    path = circle(1.0)
    g = GainSet(k=(1.0, 1.0), c=1.0, R=1.0, r=0.7)
    lt = lyapunov_diagnostics(path, path.value(np.array([0.0, 0.5])), np.array([0.0, 0.5]), np.zeros(2), 0.0, g)
    assert not lt.valid and lt.V == math.inf


def _closed_loop_rates(path, g, x, omega, t):
    # perfect estimator (omega_hat = omega*), no disturbance
    n = path.dimension
    star = target_rate(n) * t
    eta, _, _ = pairwise_repulsion(omega, np.ones(omega.size, bool), g.r, g.R)
    out = dgvf_control(path, x, omega, np.full(omega.size, star), eta, np.zeros((omega.size, n)), g)
    return out.u, out.u_omega


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_lyapunov_derivative_bounded_by_dissipation(seed):
    # central difference of V along the exact closed-loop vector field
    rng = np.random.default_rng(seed)
    path = lissajous3d()
    g = GainSet(k=(0.6, 0.8, 1.1), c=3.0, R=0.6, r=0.4)
    omega = np.cumsum(rng.uniform(0.42, 0.75, 4))
    x = path.value(omega) + rng.normal(scale=0.3, size=(4, 3))
    t = rng.uniform(-3, 3)
    omega = omega + target_rate(3) * t
    u, uw = _closed_loop_rates(path, g, x, omega, t)
    h = 1e-6
    V = lambda s: lyapunov_diagnostics(path, x + s * u, omega + s * uw, np.full(4, -(t + s)), -(t + s), g).V
    dV = (V(h) - V(-h)) / (2 * h)
    lt = lyapunov_diagnostics(path, x, omega, np.full(4, -t), -t, g)
    phi = x - path.value(omega)
    exact = -np.sum((g.K * phi) ** 2) - np.sum(lt.a**2)
    assert dV == pytest.approx(exact, rel=1e-5, abs=1e-6)
    assert lt.Omega <= 0 and dV <= lt.Omega + 1e-6 * abs(lt.Omega)


def test_convergence_time_examples():
    t = np.linspace(0, 10, 101)
    phi = np.zeros((101, 2, 3))
    alive = np.ones((101, 2), bool)
    assert convergence_time(t, phi, alive, 0.1) == 0.0
    phi[:, 0, 0] = np.exp(-t)
    assert convergence_time(t, phi, alive, 0.1) == pytest.approx(t[np.argmax(np.exp(-t) <= 0.1)])
    phi[:, 1, 2] = np.exp(t)
    assert convergence_time(t, phi, alive, 0.1) is None
    with pytest.raises(AnalysisError):
        convergence_time(t, phi, alive, 0.0)


def _platoon(log_factory, N=4, gap=0.5, T=201, rate=-1.0, r=0.4, R=0.6):
    path = lissajous3d()
    t = np.linspace(0, 20, T)
    omega = rate * t[:, None] + gap * np.arange(N)[None, :]
    return path, log_factory(t, path.value(omega), omega, r=r, R=R)


def test_verify_platoon_ideal(log_factory):
    _, log = _platoon(log_factory)
    rep = verify_platoon(log)
    assert rep.passed and rep.ordering == [1, 2, 3, 4] and rep.ordering_stationary
    assert rep.claim3_gaps == pytest.approx([0.5] * 3)
    assert rep.claim2_consensus == pytest.approx(-1.0)
    assert rep.convergence_time == 0.0


def test_verify_platoon_single_robot(log_factory):
    _, log = _platoon(log_factory, N=1)
    rep = verify_platoon(log)
    assert rep.claim3_pass and rep.claim4_pass and rep.passed


def test_verify_platoon_detects_failures(log_factory):
    _, log = _platoon(log_factory, gap=0.7)
    rep = verify_platoon(log)
    assert not rep.claim3_pass and rep.claim4_pass
    _, log = _platoon(log_factory, gap=0.3)
    assert not verify_platoon(log).claim4_pass
    _, log = _platoon(log_factory, rate=1.0)
    assert not verify_platoon(log).claim2_pass
    _, log = _platoon(log_factory)
    log.phi[-5:, 0, 0] = 0.05
    rep = verify_platoon(log)
    assert not rep.claim1_pass and rep.claim1_max_phi["1"] == pytest.approx(0.05)


def test_verify_platoon_rejects_short_log(log_factory):
    _, log = _platoon(log_factory, T=3)
    with pytest.raises(AnalysisError):
        verify_platoon(log, Tolerances(window=0.2))


def test_claim4_matches_min_gap_channel(log_factory):
    rng = np.random.default_rng(0)
    t = np.linspace(0, 10, 101)
    omega = np.sort(rng.uniform(0, 5, (101, 5)), axis=1)
    log = log_factory(t, np.zeros((101, 5, 3)), omega)
    from dgvf.analysis import min_omega_gap
    assert verify_platoon(log).claim4_min_gap == pytest.approx(np.diff(omega, axis=1).min())
    assert min_omega_gap(omega, log.alive).min() == pytest.approx(np.diff(omega, axis=1).min())
