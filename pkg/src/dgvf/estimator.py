"""Distributed estimator of the target virtual coordinate.

Each robot keeps an estimate of the target coordinate and of its rate and
corrects both with the same innovation: disagreement with communication
neighbours plus, for anchored robots, the error to the target itself.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np
from scipy.linalg import expm
from scipy.sparse.csgraph import connected_components

from .errors import ConfigurationError, ContractViolation, TopologyError

#: eigenvalues below this are treated as zero (disconnected / unanchored)
EIG_TOL = 1e-12


@dataclass(frozen=True)
class TopologyGraph:
    """Undirected communication graph with target-access flags ``anchors`` (b_i)."""

    adjacency: np.ndarray
    anchors: np.ndarray

    def __post_init__(self):
        adj = np.asarray(self.adjacency, dtype=float)
        b = np.asarray(self.anchors, dtype=float)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise ContractViolation("adjacency must be square")
        if b.shape != (adj.shape[0],):
            raise ContractViolation("need one anchor flag per robot")
        if not np.array_equal(adj, adj.T):
            raise ContractViolation("adjacency must be symmetric")
        if np.any(np.diag(adj) != 0):
            raise ContractViolation("adjacency must have a zero diagonal")
        if not np.all(np.isin(b, (0.0, 1.0))):
            raise ContractViolation("anchor flags must be 0 or 1")
        object.__setattr__(self, "adjacency", adj)
        object.__setattr__(self, "anchors", b)

    @property
    def size(self) -> int:
        return self.adjacency.shape[0]

    @property
    def laplacian(self) -> np.ndarray:
        return np.diag(self.adjacency.sum(axis=1)) - self.adjacency

    @property
    def B(self) -> np.ndarray:
        return np.diag(self.anchors)

    def without(self, removed: Iterable[int]) -> "TopologyGraph":
        """Same-size graph with every edge and anchor of the removed robots dropped."""
        keep = np.ones(self.size, dtype=bool)
        keep[list(removed)] = False
        adj = self.adjacency * keep[:, None] * keep[None, :]
        return TopologyGraph(adj, self.anchors * keep)

    def connected(self, among: Optional[np.ndarray] = None) -> bool:
        idx = np.arange(self.size) if among is None else np.flatnonzero(among)
        if idx.size <= 1:
            return True
        sub = self.adjacency[np.ix_(idx, idx)]
        ncomp, _ = connected_components(sub, directed=False)
        return ncomp == 1

    def anchored(self, among: Optional[np.ndarray] = None) -> bool:
        b = self.anchors if among is None else self.anchors[np.asarray(among, dtype=bool)]
        return bool(np.any(b > 0))


def _topology(adj, count, anchors):
    b = np.zeros(count)
    for a in anchors:
        if not 0 <= a < count:
            raise ConfigurationError(f"anchor index {a} out of range")
        b[a] = 1.0
    return TopologyGraph(adj, b)


def ring(count: int, anchors=(0,)) -> TopologyGraph:
    adj = np.zeros((count, count))
    if count == 2:
        adj[0, 1] = adj[1, 0] = 1
    elif count > 2:
        for i in range(count):
            j = (i + 1) % count
            adj[i, j] = adj[j, i] = 1
    return _topology(adj, count, anchors)


def complete(count: int, anchors=(0,)) -> TopologyGraph:
    return _topology(np.ones((count, count)) - np.eye(count), count, anchors)


def path_graph(count: int, anchors=(0,)) -> TopologyGraph:
    adj = np.zeros((count, count))
    for i in range(count - 1):
        adj[i, i + 1] = adj[i + 1, i] = 1
    return _topology(adj, count, anchors)


def from_edges(count: int, edges, anchors=(0,)) -> TopologyGraph:
    adj = np.zeros((count, count))
    for i, j in edges:
        if i == j or not (0 <= i < count and 0 <= j < count):
            raise ConfigurationError(f"bad edge ({i}, {j})")
        adj[i, j] = adj[j, i] = 1
    return _topology(adj, count, anchors)


def build_topology(kind: str, count: int, anchors=(0,), edges=()) -> TopologyGraph:
    if kind == "ring":
        return ring(count, anchors)
    if kind == "complete":
        return complete(count, anchors)
    if kind == "path":
        return path_graph(count, anchors)
    if kind == "edges":
        return from_edges(count, edges, anchors)
    raise ConfigurationError(f"unknown topology {kind!r}; expected ring, complete, path or edges")


@dataclass
class EstimatorState:
    omega_hat: np.ndarray
    sigma_hat: np.ndarray = field(default=None)

    def __post_init__(self):
        self.omega_hat = np.asarray(self.omega_hat, dtype=float)
        if self.sigma_hat is None:
            self.sigma_hat = np.zeros_like(self.omega_hat)
        self.sigma_hat = np.asarray(self.sigma_hat, dtype=float)


def innovation(omega_hat, omega_star: float, topo: TopologyGraph) -> np.ndarray:
    """sum_j a_ij (w_j - w_i) + b_i (w* - w_i), vectorised."""
    omega_hat = np.asarray(omega_hat, dtype=float)
    return topo.adjacency @ omega_hat - topo.adjacency.sum(axis=1) * omega_hat + topo.anchors * (omega_star - omega_hat)


def estimator_derivatives(state: EstimatorState, omega_star: float, topo: TopologyGraph, gamma1: float, gamma2: float):
    """Return ``(d omega_hat / dt, d sigma_hat / dt)``."""
    if not (gamma1 > 0 and gamma2 > 0):
        raise ContractViolation("estimator gains must be positive")
    nu = gamma1 * innovation(state.omega_hat, omega_star, topo)
    return nu + state.sigma_hat, gamma2 * nu


def min_eigenvalue(topo: TopologyGraph) -> float:
    """Smallest eigenvalue of L + B."""
    M = topo.laplacian + topo.B
    if not np.allclose(M, M.T):
        raise ContractViolation("L + B must be symmetric")
    return float(np.linalg.eigvalsh(M)[0])


def gain_threshold(gamma2: float, lam: float) -> float:
    """Lower bound on gamma1: 1 / (4 gamma2 (1 - gamma2^2) lam)."""
    return 1.0 / (4.0 * gamma2 * (1.0 - gamma2**2) * lam)


def validate_gains(gamma1: float, gamma2: float, lam: float) -> bool:
    if not lam > EIG_TOL:
        raise TopologyError("smallest eigenvalue of L + B is not positive: graph disconnected or no robot sees the target")
    if not 0 < gamma2 < 1:
        return False
    return gamma1 > gain_threshold(gamma2, lam)


def estimator_response(topo: TopologyGraph, gamma1: float, gamma2: float, omega_hat0, sigma_hat0, omega_star0: float, rate: float, times):
    """Exact estimation error ``omega_hat - omega*`` at ``times`` for a target moving at constant ``rate``.

    The error pair (e, s - rate) obeys a linear time-invariant system, solved
    with the matrix exponential.
    """
    M = topo.laplacian + topo.B
    N = topo.size
    A = np.block([[-gamma1 * M, np.eye(N)], [-gamma1 * gamma2 * M, np.zeros((N, N))]])
    z0 = np.concatenate([np.asarray(omega_hat0, dtype=float) - omega_star0, np.asarray(sigma_hat0, dtype=float) - rate])
    return np.array([(expm(A * t) @ z0)[:N] for t in np.atleast_1d(times)])


def slowest_mode(topo: TopologyGraph, gamma1: float, gamma2: float) -> float:
    """Largest real part among the estimator error-system eigenvalues (negative when it converges)."""
    M = topo.laplacian + topo.B
    N = topo.size
    A = np.block([[-gamma1 * M, np.eye(N)], [-gamma1 * gamma2 * M, np.zeros((N, N))]])
    return float(np.linalg.eigvals(A).real.max())
