import itertools

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st
from scipy.integrate import solve_ivp

from dgvf.errors import ConfigurationError, ContractViolation, TopologyError
from dgvf.estimator import (
    EstimatorState,
    TopologyGraph,
    build_topology,
    complete,
    estimator_derivatives,
    estimator_response,
    from_edges,
    gain_threshold,
    min_eigenvalue,
    ring,
    slowest_mode,
    validate_gains,
)


def test_derivatives_on_consensus_manifold():
    topo = ring(5)
    st_ = EstimatorState(np.full(5, 2.5), np.full(5, -1.0))
    dw, ds = estimator_derivatives(st_, 2.5, topo, 20.0, 0.5)
    np.testing.assert_array_equal(dw, np.full(5, -1.0))
    np.testing.assert_array_equal(ds, np.zeros(5))


def test_derivatives_single_robot():
    topo = TopologyGraph(np.zeros((1, 1)), np.array([1.0]))
    dw, ds = estimator_derivatives(EstimatorState([0.0], [0.0]), 1.0, topo, 2.0, 0.3)
    assert dw[0] == pytest.approx(2.0) and ds[0] == pytest.approx(0.6)


def test_isolated_robot_never_corrects():
    topo = TopologyGraph(np.zeros((2, 2)), np.array([1.0, 0.0]))
    dw, ds = estimator_derivatives(EstimatorState([0.0, 0.0]), 1.0, topo, 2.0, 0.5)
    assert dw[1] == 0.0 and ds[1] == 0.0 and dw[0] > 0


def test_min_eigenvalue_examples():
    assert min_eigenvalue(TopologyGraph(np.zeros((1, 1)), np.array([1.0]))) == pytest.approx(1.0)
    assert min_eigenvalue(complete(2, anchors=(0, 1))) == pytest.approx(1.0, abs=1e-12)
    unanchored = TopologyGraph(ring(4).adjacency, np.zeros(4))
    assert min_eigenvalue(unanchored) == pytest.approx(0.0, abs=1e-12)


def _graphs(max_n=3):
    for n in range(1, max_n + 1):
        pairs = list(itertools.combinations(range(n), 2))
        for mask in itertools.product((0, 1), repeat=len(pairs)):
            edges = [p for p, m in zip(pairs, mask) if m]
            for anchors in itertools.product((0, 1), repeat=n):
                yield n, edges, [i for i, a in enumerate(anchors) if a]


@pytest.mark.parametrize("n,edges,anchors", list(_graphs()))
def test_min_eigenvalue_against_characteristic_polynomial(n, edges, anchors):
    topo = from_edges(n, edges, anchors)
    lam = sp.Symbol("lam")
    M = sp.Matrix(topo.laplacian + topo.B).applyfunc(sp.nsimplify)
    oracle = min(float(r) for r in sp.real_roots(sp.Poly((M - lam * sp.eye(n)).det(), lam)))
    assert min_eigenvalue(topo) == pytest.approx(oracle, abs=1e-10)


def test_topology_validation():
    with pytest.raises(ContractViolation):
        TopologyGraph(np.array([[0, 1], [0, 0]]), np.array([1, 0]))
    with pytest.raises(ContractViolation):
        TopologyGraph(np.eye(2), np.array([1, 0]))
    with pytest.raises(ConfigurationError):
        ring(3, anchors=(5,))
    with pytest.raises(ConfigurationError):
        build_topology("star", 3)


def test_validate_gains_examples():
    assert gain_threshold(0.5, 1.0) == pytest.approx(1 / 1.5)
    assert validate_gains(20.0, 0.5, 1.0)
    assert not validate_gains(20.0, 4.0, 1.0)
    assert not validate_gains(1e9, 4.0, 1.0)
    # 1 / (4 * 0.99 * (1 - 0.99**2) * 0.01) = 1268.97
    assert gain_threshold(0.99, 0.01) == pytest.approx(1269.6, abs=1.0)
    assert not validate_gains(20.0, 0.99, 0.01)
    with pytest.raises(TopologyError):
        validate_gains(20.0, 0.5, 0.0)


def _integrate(topo, g1, g2, w0, s0, star0, rate, T):
    N = topo.size

    def f(t, z):
        dw, ds = estimator_derivatives(EstimatorState(z[:N], z[N:]), star0 + rate * t, topo, g1, g2)
        return np.concatenate([dw, ds])

    sol = solve_ivp(f, (0, T), np.concatenate([w0, s0]), method="DOP853", rtol=1e-11, atol=1e-12, dense_output=True)
    return sol


def test_consensus_manifold_is_invariant():
    topo = ring(6)
    sol = _integrate(topo, 20.0, 0.5, np.full(6, 0.3), np.full(6, -1.0), 0.3, -1.0, 10.0)
    ts = np.linspace(0, 10, 101)
    err = sol.sol(ts)[:6] - (0.3 - ts)
    assert np.abs(err).max() <= 1e-9


def test_numerical_integration_matches_matrix_exponential():
    topo = ring(4)
    rng = np.random.default_rng(3)
    w0, s0 = rng.normal(size=4), rng.normal(size=4)
    sol = _integrate(topo, 5.0, 0.5, w0, s0, 0.0, 1.0, 4.0)
    ts = np.linspace(0, 4, 9)
    exact = estimator_response(topo, 5.0, 0.5, w0, s0, 0.0, 1.0, ts)
    np.testing.assert_allclose(sol.sol(ts)[:4].T - ts[:, None], exact, atol=1e-8)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 12), st.floats(0.05, 0.95), st.floats(1.0, 50.0))
def test_valid_gains_give_converging_estimator(n, g2, scale):
    topo = ring(n)
    lam = min_eigenvalue(topo)
    g1 = scale * gain_threshold(g2, lam)
    if validate_gains(g1, g2, lam):
        assert slowest_mode(topo, g1, g2) < 0


def test_slowest_mode_ring_of_ten():
    # slow mode approaches -gamma2 when gamma1 * lambda is large
    assert slowest_mode(ring(10), 20.0, 0.5) == pytest.approx(-0.503, abs=1e-3)
