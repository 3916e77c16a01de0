"""Distributed control laws acting on virtual coordinates.

Covers the repulsion potential over virtual coordinates, sensing
neighbourhoods, the DGVF control law, its USV variant, and a
fixed-ordering consensus baseline used only for comparisons.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, ContractViolation, DomainError
from .gvf import GainSet
from .paths import ParametricPath

#: alpha is clamped for s <= r + CLAMP_FRACTION * (R - r)
CLAMP_FRACTION = 1e-4


def target_rate(n: int) -> float:
    """Rate of the virtual target's coordinate, ``(-1)^n``."""
    if n < 2:
        raise ContractViolation("path dimension must be >= 2")
    return float((-1) ** n)


def alpha(s, r: float, R: float):
    """Repulsion magnitude ``1/(s-r) - 1/(R-r)`` on (r, R], zero beyond R."""
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr <= r):
        raise DomainError(f"alpha is undefined for s <= r (r={r})")
    out = np.where(s_arr <= R, 1.0 / (s_arr - r) - 1.0 / (R - r), 0.0)
    return float(out) if out.ndim == 0 else out


def clamp_threshold(r: float, R: float) -> float:
    return r + CLAMP_FRACTION * (R - r)


def alpha_clamped(s, r: float, R: float):
    """alpha with the discrete-time safety cap; returns ``(value, clamped_mask)``."""
    s = np.asarray(s, dtype=float)
    lim = clamp_threshold(r, R)
    clamped = s <= lim
    safe = np.maximum(s, lim)
    val = np.where(safe < R, 1.0 / (safe - r) - 1.0 / (R - r), 0.0)
    return val, clamped


def alpha_slope(s, r: float, R: float):
    """|d alpha / ds| (used for step-size control), zero outside (r, R)."""
    s = np.asarray(s, dtype=float)
    safe = np.maximum(s, clamp_threshold(r, R))
    return np.where(safe < R, 1.0 / (safe - r) ** 2, 0.0)


@dataclass(frozen=True)
class NeighborView:
    """What robot ``index`` senses: its own coordinate and its alive neighbours'."""

    index: int
    omega: float
    neighbors: tuple  # ((k, omega_k), ...)

    def __len__(self):
        return len(self.neighbors)


def sensing_neighbors(omega, alive, R: float) -> list[NeighborView]:
    omega = np.asarray(omega, dtype=float)
    alive = np.asarray(alive, dtype=bool)
    if omega.shape != alive.shape or omega.ndim != 1:
        raise ContractViolation("omega and alive must be 1-D arrays of equal length")
    views = []
    for i, wi in enumerate(omega):
        nbrs = ()
        if alive[i]:
            nbrs = tuple(
                (k, float(wk))
                for k, wk in enumerate(omega)
                if k != i and alive[k] and abs(wi - wk) < R
            )
        views.append(NeighborView(i, float(wi), nbrs))
    return views


@dataclass(frozen=True)
class Repulsion:
    eta: float
    clamped: bool


def repulsion(view: NeighborView, r: float, R: float) -> Repulsion:
    eta = 0.0
    clamped = False
    for _, wk in view.neighbors:
        diff = view.omega - wk
        a, hit = alpha_clamped(abs(diff), r, R)
        clamped = clamped or bool(hit)
        if diff != 0.0:
            eta += float(a) * np.sign(diff)
    return Repulsion(eta, clamped)


def neighbor_mask(omega: np.ndarray, alive: np.ndarray, R: float) -> np.ndarray:
    """Boolean N x N matrix, True where k is in the sensing neighbourhood of i."""
    gap = np.abs(omega[:, None] - omega[None, :])
    mask = (gap < R) & alive[:, None] & alive[None, :]
    np.fill_diagonal(mask, False)
    return mask


def pairwise_repulsion(omega: np.ndarray, alive: np.ndarray, r: float, R: float):
    """Vectorised repulsion for all robots.

    Returns ``(eta, clamped, neighbor_count)`` where ``clamped`` is the N x N
    mask of neighbour pairs whose alpha hit the safety cap. The pair matrix is
    exactly antisymmetric, so ``eta.sum()`` vanishes up to summation rounding.
    """
    diff = omega[:, None] - omega[None, :]
    gap = np.abs(diff)
    mask = neighbor_mask(omega, alive, R)
    a, clamped = alpha_clamped(gap, r, R)
    pair = np.where(mask, a * np.sign(diff), 0.0)
    return pair.sum(axis=1), clamped & mask, mask.sum(axis=1)


@dataclass(frozen=True)
class ControlOutput:
    """Velocity command ``u`` and virtual-coordinate rate ``u_omega`` (batched over leading axes)."""

    u: np.ndarray
    u_omega: np.ndarray


def _field_terms(path, x, omega, k):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != path.dimension:
        raise ContractViolation(f"position has dimension {x.shape[-1]}, path has {path.dimension}")
    phi = x - path.value(omega)
    F = path.first(omega)
    return phi, F, np.sum(k * phi * F, axis=-1)


def dgvf_control(path: ParametricPath, x, omega, omega_hat, eta, d_hat, gains: GainSet) -> ControlOutput:
    n = path.dimension
    k = gains.for_dimension(n)
    sgn = target_rate(n)
    phi, F, along = _field_terms(path, x, omega, k)
    u = sgn * F - k * phi + np.asarray(d_hat, dtype=float)
    u_omega = sgn + along - gains.c * (np.asarray(omega) - np.asarray(omega_hat)) + np.asarray(eta)
    return ControlOutput(u, u_omega)


def usv_guidance(path: ParametricPath, x, psi, omega, omega_hat, eta, gains: GainSet):
    """Surge/sway guidance velocities and virtual-coordinate rate for planar vessels.

    Returns ``(eps_r, v_r, u_omega)``.
    """
    if path.dimension != 2:
        raise ConfigurationError("USV guidance requires a planar (n = 2) path")
    k = gains.for_dimension(2)
    phi, F, along = _field_terms(path, x, omega, k)
    g = F - k * phi
    c, s = np.cos(psi), np.sin(psi)
    eps_r = g[..., 0] * c + g[..., 1] * s
    v_r = -g[..., 0] * s + g[..., 1] * c
    u_omega = 1.0 + along - gains.c * (np.asarray(omega) - np.asarray(omega_hat)) + np.asarray(eta)
    return eps_r, v_r, u_omega


def fixed_ordering_control(
    path: ParametricPath, x, omega: float, neighbors: Sequence, gains: GainSet, d_hat=None
) -> ControlOutput:
    """Baseline law for one robot with a prescribed neighbour set.

    ``neighbors`` holds ``(omega_j, offset_ij)`` pairs, ``offset_ij`` being
    the desired value of ``omega_j - omega_i``. No repulsion, no target.
    """
    n = path.dimension
    k = gains.for_dimension(n)
    sgn = target_rate(n)
    phi, F, along = _field_terms(path, x, omega, k)
    coord = 0.0
    for item in neighbors:
        if len(item) != 2 or item[1] is None:
            raise ConfigurationError("every fixed neighbour needs a desired offset")
        wj, offset = item
        coord += (wj - omega) - offset
    u = sgn * F - k * phi + (0.0 if d_hat is None else np.asarray(d_hat, dtype=float))
    return ControlOutput(u, sgn + along + coord)


def chain_offsets(count: int, gap: float):
    """Adjacency and offset matrices for a fixed chain 0-1-...-(N-1) with ``omega_{i+1} - omega_i = gap``."""
    adj = np.zeros((count, count), dtype=bool)
    off = np.zeros((count, count))
    for i in range(count - 1):
        adj[i, i + 1] = adj[i + 1, i] = True
        off[i, i + 1] = gap
        off[i + 1, i] = -gap
    return adj, off


def fixed_ordering_coordination(omega: np.ndarray, adjacency: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    """Batched coordination term sum_j a_ij ((omega_j - omega_i) - offset_ij)."""
    diff = omega[None, :] - omega[:, None]
    return np.where(adjacency, diff - offsets, 0.0).sum(axis=1)
