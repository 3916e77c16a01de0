import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from dgvf.coordination import (
    alpha,
    alpha_clamped,
    chain_offsets,
    dgvf_control,
    fixed_ordering_control,
    fixed_ordering_coordination,
    pairwise_repulsion,
    repulsion,
    sensing_neighbors,
    target_rate,
    usv_guidance,
)
from dgvf.errors import ConfigurationError, ContractViolation, DomainError
from dgvf.gvf import GainSet
from dgvf.paths import builtin_path, circle, lissajous3d
from dgvf.coordination import NeighborView

UNIT = GainSet(k=(1.0, 1.0), c=1.0, R=1.0, r=0.7)


def test_alpha_examples():
    assert alpha(0.85, 0.7, 1.0) == pytest.approx(1 / 0.15 - 1 / 0.3, abs=1e-12)
    assert alpha(0.85, 0.7, 1.0) == pytest.approx(3.3333, abs=1e-4)
    assert alpha(1.0, 0.7, 1.0) == pytest.approx(0.0, abs=1e-12)
    assert alpha(2.0, 0.7, 1.0) == 0.0
    with pytest.raises(DomainError):
        alpha(0.7, 0.7, 1.0)


def test_alpha_continuous_at_sensing_radius():
    vals = [alpha(1.0 - eps, 0.7, 1.0) for eps in (1e-2, 1e-4, 1e-6, 1e-8)]
    assert vals == sorted(vals, reverse=True)
    assert vals[-1] < 1e-6


@given(st.floats(0.7001, 5.0), st.floats(0.7001, 5.0))
def test_alpha_nonnegative_and_non_increasing(a, b):
    lo, hi = sorted((a, b))
    assert alpha(lo, 0.7, 1.0) >= alpha(hi, 0.7, 1.0) >= 0.0


def test_alpha_clamp_flags_and_caps():
    val, hit = alpha_clamped(np.array([0.5, 0.70001, 0.8]), 0.7, 1.0)
    cap = 1 / (1e-4 * 0.3) - 1 / 0.3
    np.testing.assert_allclose(val[:2], cap)
    assert list(hit) == [True, True, False]


def test_sensing_neighbors_examples():
    views = sensing_neighbors([0.0, 0.5, 1.2], [True] * 3, 0.6)
    assert [tuple(k for k, _ in v.neighbors) for v in views] == [(1,), (0,), ()]
    assert len(sensing_neighbors([0.3], [True], 0.6)[0]) == 0
    views = sensing_neighbors([0.0, 0.5, 1.2], [True, False, True], 0.6)
    assert all(len(v) == 0 for v in views)
    with pytest.raises(ContractViolation):
        sensing_neighbors([0.0, 1.0], [True], 0.6)


def test_repulsion_examples():
    one = NeighborView(0, 0.0, ((1, 0.8),))
    assert repulsion(one, 0.7, 1.0).eta == pytest.approx(-6.6667, abs=1e-4)
    assert repulsion(NeighborView(0, 0.0, ()), 0.7, 1.0).eta == 0.0
    sym = NeighborView(0, 0.0, ((1, 0.8), (2, -0.8)))
    assert repulsion(sym, 0.7, 1.0).eta == pytest.approx(0.0, abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 12).flatmap(lambda n: st.tuples(
    arrays(float, n, elements=st.floats(-3, 3)), arrays(bool, n))))
def test_repulsion_sums_to_zero(data):
    omega, alive = data
    eta, _, count = pairwise_repulsion(omega, alive, 0.1, 0.6)
    assert abs(eta.sum()) <= 1e-12 * max(1.0, np.abs(eta).max())
    assert np.all(eta[~alive] == 0.0)
    # the vectorised form agrees with the per-robot form
    for view, e in zip(sensing_neighbors(omega, alive, 0.6), eta):
        assert repulsion(view, 0.1, 0.6).eta == pytest.approx(e, rel=1e-12, abs=1e-9)


def test_target_rate():
    assert (target_rate(2), target_rate(3), target_rate(4)) == (1.0, -1.0, 1.0)
    with pytest.raises(ContractViolation):
        target_rate(1)


def test_dgvf_control_examples():
    c = GainSet(k=(1.0, 1.0), c=1.0, R=1.0, r=0.7)
    out = dgvf_control(circle(1.0), [1.0, 0.0], 0.0, 0.0, 0.0, [0.0, 0.0], c)
    np.testing.assert_allclose(out.u, [0, 1], atol=1e-15)
    assert out.u_omega == pytest.approx(1.0)
    assert dgvf_control(circle(1.0), [1.0, 0.0], 0.0, 0.5, 0.0, [0, 0], c).u_omega == pytest.approx(1.5)
    eta = -repulsion(NeighborView(0, 0.0, ((1, 0.8),)), 0.7, 1.0).eta
    assert dgvf_control(circle(1.0), [1.0, 0.0], 0.0, 0.0, eta, [0, 0], c).u_omega == pytest.approx(7.6667, abs=1e-4)


@settings(max_examples=200, deadline=None)
@given(st.sampled_from(["circle", "lissajous2d", "lissajous3d"]), st.floats(-30, 30))
def test_platoon_state_is_equilibrium(kind, omega):
    path = builtin_path(kind)
    n = path.dimension
    g = GainSet(k=(0.6,) * n, c=3.0, R=0.6, r=0.4)
    out = dgvf_control(path, path.value(omega), omega, omega, 0.0, np.zeros(n), g)
    sgn = (-1.0) ** n
    np.testing.assert_array_equal(out.u, sgn * path.first(omega))
    assert out.u_omega == sgn


def test_usv_guidance_examples():
    path = circle(1.0)
    e, v, uw = usv_guidance(path, [1.0, 0.0], 0.0, 0.0, 0.0, 0.0, UNIT)
    assert (e, v, uw) == pytest.approx((0.0, 1.0, 1.0), abs=1e-15)
    e, v, _ = usv_guidance(path, [1.0, 0.0], math.pi / 2, 0.0, 0.0, 0.0, UNIT)
    assert (e, v) == pytest.approx((1.0, 0.0), abs=1e-15)
    # x chosen so F - k phi = 0 at omega = 0
    e, v, uw = usv_guidance(path, [1.0, 1.0], 0.3, 0.0, 0.5, 2.0, UNIT)
    assert (e, v) == pytest.approx((0.0, 0.0), abs=1e-15)
    assert uw == pytest.approx(1.0 + 1.0 - 1.0 * (0.0 - 0.5) + 2.0)
    with pytest.raises(ConfigurationError):
        usv_guidance(lissajous3d(), [0, 0, 0], 0.0, 0.0, 0.0, 0.0, UNIT)


@settings(max_examples=200, deadline=None)
@given(arrays(float, 2, elements=st.floats(-3, 3)), st.floats(-10, 10), st.floats(-10, 10))
def test_usv_guidance_is_rotated_field(x, psi, omega):
    path = circle(0.8)
    g = GainSet(k=(3.5, 3.5), c=2.0, R=1.0, r=0.7)
    e, v, _ = usv_guidance(path, x, psi, omega, omega, 0.0, g)
    u = dgvf_control(path, x, omega, omega, 0.0, np.zeros(2), g).u
    world = np.array([e * math.cos(psi) - v * math.sin(psi), e * math.sin(psi) + v * math.cos(psi)])
    np.testing.assert_allclose(world, u, atol=1e-12)


def test_fixed_ordering_examples():
    gap = 2 * math.pi / 15
    path = circle(1.0)
    c = GainSet(k=(1.0, 1.0), c=1.0, R=1.0, r=0.7)
    out = fixed_ordering_control(path, [1.0, 0.0], 0.0, [(gap, gap)], c)
    assert out.u_omega == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(ConfigurationError):
        fixed_ordering_control(path, [1.0, 0.0], 0.0, [(gap, None)], c)
    adj, off = chain_offsets(10, gap)
    spaced = gap * np.arange(10)
    np.testing.assert_allclose(fixed_ordering_coordination(spaced, adj, off), 0.0, atol=1e-12)
    # a stale neighbour pulls on its chain partner
    stale = spaced.copy()
    stale[3] -= 1.0
    coord = fixed_ordering_coordination(stale, adj, off)
    assert coord[2] < 0 and coord[4] < 0 and coord[3] > 0
