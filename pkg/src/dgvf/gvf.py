"""Higher-dimensional guiding vector field for a single robot."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, ContractViolation
from .paths import ParametricPath, error_gradient

MAX_WEDGE_DIM = 8


@dataclass(frozen=True)
class GainSet:
    """Controller and estimator gains.

    ``k`` holds the per-axis field gains (diagonal of K). ``gamma2`` is only
    range-checked by :func:`dgvf.estimator.validate_gains`, so that configs
    reproducing out-of-range published values can still be built and flagged.
    """

    k: tuple
    c: float
    R: float
    r: float
    gamma1: float = 20.0
    gamma2: float = 0.5

    def __post_init__(self):
        k = tuple(float(v) for v in np.atleast_1d(self.k))
        object.__setattr__(self, "k", k)
        if min(k) <= 0:
            raise ConfigurationError(f"field gains must be positive, got {k}")
        if not self.c > 0:
            raise ConfigurationError(f"consensus gain c must be positive, got {self.c}")
        if not (0 < self.r < self.R):
            raise ConfigurationError(f"radii must satisfy 0 < r < R, got r={self.r}, R={self.R}")
        if not (self.gamma1 > 0 and self.gamma2 > 0):
            raise ConfigurationError("estimator gains must be positive")

    @property
    def K(self) -> np.ndarray:
        return np.asarray(self.k)

    def for_dimension(self, n: int) -> np.ndarray:
        if len(self.k) == 1:
            return np.full(n, self.k[0])
        if len(self.k) != n:
            raise ContractViolation(f"{len(self.k)} field gains given for an {n}-dimensional path")
        return self.K


def wedge(vectors) -> np.ndarray:
    """Generalised cross product of n vectors in R^(n+1).

    Component m is ``(-1)^m det`` of the input rows with column m removed
    (0-based m), i.e. the cofactors of a first row placed above the inputs.
    """
    v = np.asarray(vectors, dtype=float)
    if v.ndim != 2 or v.shape[1] != v.shape[0] + 1:
        raise ContractViolation(f"wedge needs n vectors of length n+1, got shape {v.shape}")
    n = v.shape[0]
    if n > MAX_WEDGE_DIM:
        raise ContractViolation(f"wedge supports n <= {MAX_WEDGE_DIM}")
    out = np.empty(n + 1)
    # singular minors are legitimate (det = 0); LAPACK flags them as division by zero
    with np.errstate(divide="ignore", invalid="ignore"):
        for m in range(n + 1):
            minor = np.delete(v, m, axis=1)
            out[m] = (-1) ** m * np.linalg.det(minor)
    return out


def _check_x(path, x):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != path.dimension:
        raise ContractViolation(f"position has dimension {x.shape[-1]}, path has {path.dimension}")
    return x


def chi(path: ParametricPath, x, omega, gains: GainSet) -> np.ndarray:
    """Closed-form field; batched over leading axes of ``x`` and ``omega``."""
    x = _check_x(path, x)
    n = path.dimension
    k = gains.for_dimension(n)
    sgn = (-1.0) ** n
    phi = x - path.value(omega)
    F = path.first(omega)
    head = sgn * F - k * phi
    tail = sgn + np.sum(k * phi * F, axis=-1)
    return np.concatenate([head, np.expand_dims(tail, -1)], axis=-1)


def chi_generic(path: ParametricPath, x, omega: float, gains: GainSet) -> np.ndarray:
    """Field assembled from the wedge of the error gradients (single point)."""
    x = _check_x(path, x)
    if x.ndim != 1:
        raise ContractViolation("chi_generic evaluates a single point")
    k = gains.for_dimension(path.dimension)
    grads = error_gradient(path, omega)
    phi = x - path.value(float(omega))
    return wedge(grads) - (k * phi) @ grads


def singularity_margin(path: ParametricPath, gains: GainSet, x_low, x_high, omega_range, samples: int, rng=None) -> float:
    """Minimum ||chi|| over uniform samples of a box in (x, omega)."""
    if samples < 1:
        raise ContractViolation("samples must be >= 1")
    lo = np.asarray(x_low, dtype=float)
    hi = np.asarray(x_high, dtype=float)
    w_lo, w_hi = omega_range
    if lo.shape != (path.dimension,) or hi.shape != lo.shape or np.any(hi < lo) or w_hi < w_lo:
        raise ContractViolation("empty or malformed sample box")
    rng = np.random.default_rng(rng)
    x = lo + (hi - lo) * rng.random((samples, path.dimension))
    w = w_lo + (w_hi - w_lo) * rng.random(samples)
    return float(np.linalg.norm(chi(path, x, w, gains), axis=-1).min())
