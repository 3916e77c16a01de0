"""Parametric desired paths, path-following errors and their gradients.

A path is a map omega -> (f_1(omega), ..., f_n(omega)). Evaluators are
vectorised: given omega of shape ``S`` they return an array of shape
``S + (n,)``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate

from .errors import ConfigurationError, ContractViolation

Evaluator = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ParametricPath:
    """An n-dimensional parametric curve with analytic first and second derivatives.

    ``period`` is the parameter period of a closed path (``None`` for open paths).
    """

    dimension: int
    value: Evaluator
    first: Evaluator
    second: Evaluator
    name: str = "custom"
    period: Optional[float] = None

    def __post_init__(self):
        if int(self.dimension) != self.dimension or self.dimension < 2:
            raise ConfigurationError(f"path dimension must be an integer >= 2, got {self.dimension}")
        if self.period is not None and not self.period > 0:
            raise ConfigurationError(f"period must be positive, got {self.period}")

    @classmethod
    def from_components(
        cls,
        f: Sequence[Callable[[float], float]],
        df: Sequence[Callable[[float], float]],
        d2f: Sequence[Callable[[float], float]],
        name: str = "custom",
        period: Optional[float] = None,
    ) -> "ParametricPath":
        """Build a path from per-component scalar callables (slow, but convenient)."""
        if not (len(f) == len(df) == len(d2f)):
            raise ConfigurationError("f, df and d2f must have the same number of components")

        def stack(funcs):
            vec = [np.vectorize(g, otypes=[float]) for g in funcs]

            def evaluate(w):
                w = np.asarray(w, dtype=float)
                return np.stack([g(w) for g in vec], axis=-1)

            return evaluate

        return cls(len(f), stack(f), stack(df), stack(d2f), name=name, period=period)

    @property
    def closed(self) -> bool:
        return self.period is not None


def circle(scale: float = 1.0) -> ParametricPath:
    a = float(scale)
    if not a > 0:
        raise ConfigurationError(f"circle scale must be positive, got {scale}")

    def value(w):
        w = np.asarray(w, dtype=float)
        return np.stack([a * np.cos(w), a * np.sin(w)], axis=-1)

    def first(w):
        w = np.asarray(w, dtype=float)
        return np.stack([-a * np.sin(w), a * np.cos(w)], axis=-1)

    def second(w):
        w = np.asarray(w, dtype=float)
        return np.stack([-a * np.cos(w), -a * np.sin(w)], axis=-1)

    return ParametricPath(2, value, first, second, name="circle", period=2 * math.pi)


def lissajous2d(scale: float = 800.0, squash: float = 0.3) -> ParametricPath:
    """Figure-eight ``(a cos w, a sin w cos w) / (1 + b sin^2 w)``; self-intersects at the origin."""
    a, b = float(scale), float(squash)
    if not a > 0:
        raise ConfigurationError(f"lissajous2d scale must be positive, got {scale}")
    if not b > -1:
        raise ConfigurationError(f"lissajous2d squash must be > -1, got {squash}")

    def parts(w):
        w = np.asarray(w, dtype=float)
        s, c = np.sin(w), np.cos(w)
        s2, c2 = np.sin(2 * w), np.cos(2 * w)
        den = 1.0 + b * s * s
        dden = b * s2
        d2den = 2.0 * b * c2
        g = (a * c, 0.5 * a * s2)
        dg = (-a * s, a * c2)
        d2g = (-a * c, -2.0 * a * s2)
        return den, dden, d2den, g, dg, d2g

    def value(w):
        den, _, _, g, _, _ = parts(w)
        return np.stack([g[0] / den, g[1] / den], axis=-1)

    def first(w):
        den, dden, _, g, dg, _ = parts(w)
        return np.stack([(dg[j] * den - g[j] * dden) / den**2 for j in range(2)], axis=-1)

    def second(w):
        den, dden, d2den, g, dg, d2g = parts(w)
        out = [
            d2g[j] / den
            - 2.0 * dg[j] * dden / den**2
            - g[j] * d2den / den**2
            + 2.0 * g[j] * dden**2 / den**3
            for j in range(2)
        ]
        return np.stack(out, axis=-1)

    return ParametricPath(2, value, first, second, name="lissajous2d", period=2 * math.pi)


def lissajous3d(amplitudes: Sequence[float] = (16.0, 6.0, 2.0)) -> ParametricPath:
    """``(A1 cos(w/2), A2 cos(w + pi/2), A3 cos w)``; parameter period 4*pi."""
    a1, a2, a3 = (float(v) for v in amplitudes)
    if min(a1, a2, a3) <= 0:
        raise ConfigurationError(f"lissajous3d amplitudes must be positive, got {amplitudes}")
    h = 0.5 * math.pi

    def value(w):
        w = np.asarray(w, dtype=float)
        return np.stack([a1 * np.cos(0.5 * w), a2 * np.cos(w + h), a3 * np.cos(w)], axis=-1)

    def first(w):
        w = np.asarray(w, dtype=float)
        return np.stack([-0.5 * a1 * np.sin(0.5 * w), -a2 * np.sin(w + h), -a3 * np.sin(w)], axis=-1)

    def second(w):
        w = np.asarray(w, dtype=float)
        return np.stack([-0.25 * a1 * np.cos(0.5 * w), -a2 * np.cos(w + h), -a3 * np.cos(w)], axis=-1)

    return ParametricPath(3, value, first, second, name="lissajous3d", period=4 * math.pi)


BUILTIN_KINDS = ("circle", "lissajous2d", "lissajous3d")


def builtin_path(kind: str, **params) -> ParametricPath:
    """Construct one of the built-in paths by name.

    circle: ``scale``; lissajous2d: ``scale``, ``squash``; lissajous3d: ``amplitudes``.
    """
    try:
        if kind == "circle":
            return circle(**params)
        if kind == "lissajous2d":
            return lissajous2d(**params)
        if kind == "lissajous3d":
            return lissajous3d(**params)
    except TypeError as exc:
        raise ConfigurationError(f"bad parameters for path {kind!r}: {exc}") from exc
    raise ConfigurationError(f"unknown path kind {kind!r}; expected one of {BUILTIN_KINDS}")


def evaluate(path: ParametricPath, omega) -> np.ndarray:
    return path.value(omega)


def jet(path: ParametricPath, omega):
    """Return ``(f, F, F2)``: value, first and second derivative at ``omega``."""
    return path.value(omega), path.first(omega), path.second(omega)


def path_error(path: ParametricPath, x, omega) -> np.ndarray:
    """phi_j = x_j - f_j(omega); batched over leading axes."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != path.dimension:
        raise ContractViolation(f"position has dimension {x.shape[-1]}, path has {path.dimension}")
    return x - path.value(omega)


def error_gradient(path: ParametricPath, omega: float) -> np.ndarray:
    """Gradients of phi_j w.r.t. (x, omega), stacked as rows of an n x (n+1) array."""
    n = path.dimension
    grads = np.zeros((n, n + 1))
    grads[:, :n] = np.eye(n)
    grads[:, n] = -path.first(float(omega))
    return grads


def speed(path: ParametricPath, omega) -> np.ndarray:
    return np.linalg.norm(path.first(omega), axis=-1)


def arc_length(path: ParametricPath, start: float, stop: float, tol: float = 1e-8) -> float:
    """Adaptive quadrature of the path speed over [start, stop]."""
    if stop == start:
        return 0.0
    val, _ = integrate.quad(lambda s: float(speed(path, s)), start, stop, epsabs=tol, epsrel=1e-10, limit=500)
    return float(val)


@dataclass(frozen=True)
class CapacityCheck:
    passed: bool
    slack: float
    platoon_length: float
    path_length: float
    skipped: bool = False
    message: str = ""


def check_capacity(path: ParametricPath, count: int, sensing_radius: float) -> CapacityCheck:
    """Compare the closed path's length with the arc length spanned by ``count * sensing_radius``."""
    if count < 0:
        raise ContractViolation("robot count must be non-negative")
    if not sensing_radius > 0:
        raise ContractViolation("sensing radius must be positive")
    if not path.closed:
        msg = f"path {path.name!r} declares no period; capacity check skipped"
        warnings.warn(msg, stacklevel=2)
        return CapacityCheck(True, math.nan, math.nan, math.nan, skipped=True, message=msg)
    total = arc_length(path, 0.0, path.period)
    used = arc_length(path, 0.0, count * sensing_radius)
    slack = total - used
    return CapacityCheck(slack > 0, slack, used, total)


def derivative_bounds(path: ParametricPath, samples: int = 4096):
    """Sampled max |df_j| and |d2f_j| over one period (or [-10, 10] for open paths)."""
    span = path.period if path.closed else 20.0
    start = 0.0 if path.closed else -10.0
    w = start + span * np.arange(samples) / samples
    return float(np.abs(path.first(w)).max()), float(np.abs(path.second(w)).max())
