"""Robot models: single integrators with disturbances, and planar surface vessels.

Also provides the disturbance/observer models and the error-dynamics
diagnostic used to cross-check logged path-following errors.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigurationError, ContractViolation
from .paths import ParametricPath


@dataclass
class RobotState:
    x: np.ndarray
    omega: float
    omega_hat: float = 0.0
    sigma_hat: float = 0.0
    d_hat: Optional[np.ndarray] = None
    alive: bool = True

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        if self.d_hat is None:
            self.d_hat = np.zeros_like(self.x)


def robot_derivative(state: RobotState, control, d) -> tuple:
    """``(dx/dt, d omega/dt)`` for a single integrator; zero for a dead robot."""
    d = np.asarray(d, dtype=float)
    u = np.asarray(control.u, dtype=float)
    if u.shape != state.x.shape or d.shape != state.x.shape:
        raise ContractViolation("control, disturbance and position dimensions differ")
    if not state.alive:
        return np.zeros_like(state.x), 0.0
    return u + d, float(control.u_omega)


# --- disturbances and observers ------------------------------------------------


@dataclass(frozen=True)
class DisturbanceModel:
    """Additive disturbance on the physical channels.

    kind: ``none``, ``constant`` (``value``), or ``sinusoidal``
    (``amplitude * sin(frequency * t + phase)`` per axis). ``beta1`` and
    ``beta2`` are the declared bounds on ||d|| and ||d'||; when given, they
    are checked against the analytic worst case at construction.
    """

    kind: str = "none"
    value: tuple = ()
    amplitude: tuple = ()
    frequency: tuple = ()
    phase: tuple = ()
    beta1: Optional[float] = None
    beta2: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("none", "constant", "sinusoidal"):
            raise ConfigurationError(f"unknown disturbance kind {self.kind!r}")
        for name in ("value", "amplitude", "frequency", "phase"):
            object.__setattr__(self, name, tuple(float(v) for v in np.atleast_1d(getattr(self, name))))
        if self.kind == "sinusoidal":
            n = len(self.amplitude)
            if not (len(self.frequency) == n and len(self.phase) in (0, n)):
                raise ConfigurationError("sinusoidal disturbance needs amplitude, frequency (and phase) per axis")
        b1, b2 = self.worst_case()
        if self.beta1 is not None and b1 > self.beta1 + 1e-12:
            raise ConfigurationError(f"disturbance norm bound {b1:.6g} exceeds declared beta1={self.beta1}")
        if self.beta2 is not None and b2 > self.beta2 + 1e-12:
            raise ConfigurationError(f"disturbance rate bound {b2:.6g} exceeds declared beta2={self.beta2}")

    def worst_case(self):
        """Analytic upper bounds of (||d||, ||d'||) over all t."""
        if self.kind == "constant":
            return float(np.linalg.norm(self.value)), 0.0
        if self.kind == "sinusoidal":
            amp = np.abs(self.amplitude)
            return float(np.linalg.norm(amp)), float(np.linalg.norm(amp * np.abs(self.frequency)))
        return 0.0, 0.0

    @property
    def bounded(self) -> bool:
        return self.beta1 is not None and self.beta2 is not None

    def at(self, t: float, n: int) -> np.ndarray:
        if self.kind == "none":
            return np.zeros(n)
        if self.kind == "constant":
            return _broadcast(self.value, n)
        amp = _broadcast(self.amplitude, n)
        freq = _broadcast(self.frequency, n)
        ph = _broadcast(self.phase, n) if self.phase else np.zeros(n)
        return amp * np.sin(freq * t + ph)


def _broadcast(v, n):
    v = np.asarray(v, dtype=float)
    if v.size == 1:
        return np.full(n, float(v.reshape(-1)[0]))
    if v.size != n:
        raise ConfigurationError(f"expected {n} disturbance components, got {v.size}")
    return v


@dataclass(frozen=True)
class ObserverModel:
    """Stand-in for a disturbance observer.

    ``perfect_after``: exact estimate from ``settle_time`` on, zero before.
    ``exponential``: estimate error decays as ``exp(-rate t)`` from ``initial``.
    ``off``: no compensation.
    """

    kind: str = "off"
    settle_time: float = 0.0
    rate: float = 1.0
    initial: tuple = ()

    def __post_init__(self):
        if self.kind not in ("off", "perfect_after", "exponential"):
            raise ConfigurationError(f"unknown observer kind {self.kind!r}")
        if self.kind == "exponential" and not self.rate > 0:
            raise ConfigurationError("exponential observer needs a positive rate")
        if self.settle_time < 0:
            raise ConfigurationError("observer settle time must be non-negative")
        object.__setattr__(self, "initial", tuple(float(v) for v in np.atleast_1d(self.initial)))


def observer_output(model: ObserverModel, d_true, t: float) -> np.ndarray:
    d_true = np.asarray(d_true, dtype=float)
    if model.kind == "off":
        return np.zeros_like(d_true)
    if model.kind == "perfect_after":
        return d_true.copy() if t >= model.settle_time else np.zeros_like(d_true)
    d0 = _broadcast(model.initial, d_true.shape[-1]) if model.initial else np.zeros_like(d_true)
    return d_true + (d0 - d_true) * math.exp(-model.rate * t)


def error_dynamics_diagnostic(path: ParametricPath, omega, u, u_omega, d):
    """Rates ``(dPhi/dt, d omega/dt) = D (u + d, u_omega)`` with D unit upper-triangular."""
    F = path.first(omega)
    v = np.asarray(u, dtype=float) + np.asarray(d, dtype=float)
    u_omega = np.asarray(u_omega, dtype=float)
    return v - F * u_omega[..., None], u_omega


# --- surface vessels -------------------------------------------------------------


@dataclass
class UsvState:
    """Planar vessel: position q=(x, y), unwrapped yaw psi, body velocities and virtual states."""

    q: np.ndarray
    psi: float = 0.0
    surge: float = 0.0
    sway: float = 0.0
    yaw_rate: float = 0.0
    omega: float = 0.0
    omega_hat: float = 0.0
    sigma_hat: float = 0.0
    alive: bool = True

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=float)


@dataclass(frozen=True)
class UsvParams:
    """Coefficients of the surge/yaw/sway model.

    The defaults are placeholder stable values, not identified ones.
    """

    l1: float = -0.5
    l2: float = 0.1
    l3: float = 1.0
    l4: float = -1.0
    l5: float = 1.0
    l6: float = -2.0
    l7: float = 0.05
    tau_limit: Optional[tuple] = None


def usv_derivative(state: UsvState, tau: Sequence[float], params: UsvParams) -> np.ndarray:
    """Derivative of ``(x, y, psi, surge, sway, yaw_rate)``; fields may be arrays (stacked on axis 0)."""
    t1, t2 = _saturate(tau, params)
    e, v, r, psi = state.surge, state.sway, state.yaw_rate, state.psi
    c, s = np.cos(psi), np.sin(psi)
    return np.array([
        e * c - v * s,
        e * s + v * c,
        r,
        params.l1 * e + params.l2 * v * r + params.l3 * t1,
        params.l6 * v + params.l7 * e * r,
        params.l4 * r + params.l5 * t2,
    ])


def _saturate(tau, params):
    t1, t2 = np.asarray(tau[0], dtype=float), np.asarray(tau[1], dtype=float)
    if params.tau_limit is not None:
        lim1, lim2 = params.tau_limit
        t1, t2 = np.clip(t1, -lim1, lim1), np.clip(t2, -lim2, lim2)
    return t1, t2


@dataclass(frozen=True)
class TrackerMode:
    """Low-level velocity tracking.

    ``ideal_exponential`` replaces the vessel dynamics by exact exponential
    decay (rate ``rate``) of the surge and sway tracking errors.
    ``proportional`` feedback-linearises surge and yaw; sway is unactuated,
    so it is only shaped indirectly by aligning the heading with the
    guidance direction (gain ``k_psi``).
    """

    kind: str = "ideal_exponential"
    rate: float = 5.0
    k_surge: float = 2.0
    k_yaw: float = 4.0
    k_psi: float = 2.0

    def __post_init__(self):
        if self.kind not in ("ideal_exponential", "proportional"):
            raise ConfigurationError(f"unknown tracker mode {self.kind!r}")
        if min(self.rate, self.k_surge, self.k_yaw, self.k_psi) <= 0:
            raise ConfigurationError("tracker gains must be positive")


def heading_rate_reference(eps_r, v_r, k_psi: float):
    """Yaw-rate command turning the bow towards the guidance velocity."""
    return k_psi * np.arctan2(v_r, eps_r)


def velocity_tracker(mode: TrackerMode, state: UsvState, eps_r: float, v_r: float, params: UsvParams = UsvParams()):
    """Ideal mode: error rates ``(d eps~/dt, d v~/dt)``; proportional mode: inputs ``(tau1, tau2)``."""
    if mode.kind == "ideal_exponential":
        return -mode.rate * (state.surge - eps_r), -mode.rate * (state.sway - v_r)
    e, v, r = state.surge, state.sway, state.yaw_rate
    tau1 = (-mode.k_surge * (e - eps_r) - params.l1 * e - params.l2 * v * r) / params.l3
    r_ref = heading_rate_reference(eps_r, v_r, mode.k_psi)
    tau2 = (-mode.k_yaw * (r - r_ref) - params.l4 * r) / params.l5
    return tau1, tau2


def tracking_error_world(err_surge, err_sway, psi):
    """Rotate body-frame tracking errors into the world frame."""
    c, s = np.cos(psi), np.sin(psi)
    return err_surge * c - err_sway * s, err_surge * s + err_sway * c
