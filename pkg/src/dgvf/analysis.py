"""Post-hoc verification of platoon claims and Lyapunov diagnostics.

Claims checked on a trajectory log:

1. path-following errors vanish (|phi| <= eps_phi over the steady window);
2. all virtual coordinates move at a common rate equal to the target rate;
3. adjacent virtual coordinates (in sorted order) are separated by a gap in (r, R);
4. no two alive robots ever come within r of each other in virtual coordinates.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .coordination import pairwise_repulsion, target_rate
from .errors import AnalysisError, DomainError
from .gvf import GainSet
from .paths import ParametricPath


@dataclass(frozen=True)
class Tolerances:
    eps_phi: float = 1e-2
    eps_omega: float = 1e-2
    window: float = 0.2
    band: float = 0.1


def ordering(omega, alive=None) -> np.ndarray:
    """0-based indices of alive robots sorted by virtual coordinate (ties by index)."""
    omega = np.asarray(omega, dtype=float)
    alive = np.ones(omega.shape, dtype=bool) if alive is None else np.asarray(alive, dtype=bool)
    idx = np.flatnonzero(alive)
    if idx.size == 0:
        raise AnalysisError("ordering needs at least one alive robot")
    return idx[np.lexsort((idx, omega[idx]))]


def has_ties(omega, alive=None) -> bool:
    s = ordering(omega, alive)
    w = np.asarray(omega, dtype=float)[s]
    return bool(np.any(np.diff(w) == 0))


# --- Lyapunov diagnostics ----------------------------------------------------------


def barrier_integral(s, r: float, R: float):
    """Closed-form integral of alpha from s to R."""
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr <= r):
        raise DomainError("barrier integral diverges for s <= r")
    inside = np.minimum(s_arr, R)
    out = np.where(s_arr <= R, np.log((R - r) / (inside - r)) - (R - inside) / (R - r), 0.0)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class LyapunovTerms:
    V: float
    Omega: float
    a: np.ndarray
    valid: bool = True


def lyapunov_diagnostics(path: ParametricPath, x, omega, omega_hat, omega_star: float, gains: GainSet, alive=None) -> LyapunovTerms:
    """Lyapunov function value V, its dissipation bound Omega (<= 0) and the a_i terms.

    The barrier part sums each unordered neighbour pair once. With exact
    estimates and no disturbance, dV/dt = -sum(|K phi|^2 + a^2) <= Omega.
    """
    x = np.asarray(x, dtype=float)
    omega = np.asarray(omega, dtype=float)
    omega_hat = np.asarray(omega_hat, dtype=float)
    alive = np.ones(omega.shape, dtype=bool) if alive is None else np.asarray(alive, dtype=bool)
    k = gains.for_dimension(path.dimension)
    c, r, R = gains.c, gains.r, gains.R

    phi = x - path.value(omega)
    F = path.first(omega)
    w_err = omega - omega_star
    e = c * (omega_hat - omega_star)
    eta, _, _ = pairwise_repulsion(omega, alive, r, R)

    gap = np.abs(omega[:, None] - omega[None, :])
    pair = np.triu(alive[:, None] & alive[None, :], 1) & (gap < R)
    gaps = gap[pair]
    valid = bool(np.all(gaps > r))
    a = np.sum(phi * k * F, axis=-1) - c * w_err + eta + 0.5 * e
    quad = 0.5 * np.sum(k * phi * phi, axis=-1) + 0.5 * c * w_err**2
    diss = 0.5 * np.sum((k * phi) ** 2, axis=-1) + a**2
    Omega = -float(np.sum(diss[alive]))
    if valid:
        V = float(np.sum(quad[alive]) + np.sum(barrier_integral(gaps, r, R)))
    else:
        V = math.inf
    return LyapunovTerms(V, Omega, np.where(alive, a, 0.0), valid)


# --- claims ---------------------------------------------------------------------


def convergence_time(t, phi, alive, band: float) -> Optional[float]:
    """Earliest t* after which every alive |phi_ij| stays within ``band``; None if never."""
    if not band > 0:
        raise AnalysisError("band must be positive")
    t = np.asarray(t)
    err = np.abs(np.asarray(phi)).max(axis=-1)
    ok = np.all((err <= band) | ~np.asarray(alive, dtype=bool), axis=1)
    if not ok[-1]:
        return None
    bad = np.flatnonzero(~ok)
    return float(t[0]) if bad.size == 0 else float(t[bad[-1] + 1])


def _pairwise_min(values, alive):
    """Min over alive pairs of |v_i - v_k| (rows: ticks). values: (T, N) or (T, N, n)."""
    T = values.shape[0]
    out = np.full(T, math.inf)
    for ti in range(T):
        idx = np.flatnonzero(alive[ti])
        if idx.size < 2:
            continue
        v = values[ti, idx]
        if v.ndim == 1:
            s = np.sort(v)
            out[ti] = float(np.min(np.diff(s)))
        else:
            d = np.linalg.norm(v[:, None, :] - v[None, :, :], axis=-1)
            out[ti] = float(d[np.triu_indices(idx.size, 1)].min())
    return out


def min_omega_gap(omega, alive):
    return _pairwise_min(np.asarray(omega, dtype=float), np.asarray(alive, dtype=bool))


def min_distance(x, alive):
    return _pairwise_min(np.asarray(x, dtype=float), np.asarray(alive, dtype=bool))


def _none_if_inf(v):
    return None if v is None or not math.isfinite(v) else float(v)


@dataclass
class PlatoonReport:
    claim1_max_phi: dict
    claim1_pass: bool
    claim2_spread: float
    claim2_consensus: float
    claim2_deviation: float
    claim2_pass: bool
    claim3_gaps: list
    claim3_min_gap: Optional[float]
    claim3_max_gap: Optional[float]
    claim3_pass: bool
    claim4_min_gap: Optional[float]
    claim4_pass: bool
    ordering: list  # 1-based robot ids, ascending virtual coordinate
    ordering_stationary: bool
    convergence_time: Optional[float]
    min_physical_distance: Optional[float]
    survivors: list
    target_rate: float
    tolerances: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.claim1_pass and self.claim2_pass and self.claim3_pass and self.claim4_pass

    def claims(self) -> dict:
        return {1: self.claim1_pass, 2: self.claim2_pass, 3: self.claim3_pass, 4: self.claim4_pass}

    def to_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d

    def summary(self) -> str:
        mark = {True: "PASS", False: "FAIL"}
        worst_phi = max(self.claim1_max_phi.values()) if self.claim1_max_phi else 0.0
        lines = [
            f"claim 1 (path convergence)   {mark[self.claim1_pass]}  max|phi| = {worst_phi:.4g}",
            f"claim 2 (common rate)        {mark[self.claim2_pass]}  rate = {self.claim2_consensus:.4g}"
            f" (target {self.target_rate:+.0f}), spread = {self.claim2_spread:.3g}",
            f"claim 3 (adjacent gaps)      {mark[self.claim3_pass]}  gaps in "
            f"[{_fmt(self.claim3_min_gap)}, {_fmt(self.claim3_max_gap)}]",
            f"claim 4 (no overlap)         {mark[self.claim4_pass]}  min gap = {_fmt(self.claim4_min_gap)}",
            f"ordering: {self.ordering}" + ("" if self.ordering_stationary else " (not stationary)"),
            f"convergence time: {_fmt(self.convergence_time)}",
            f"min physical distance: {_fmt(self.min_physical_distance)}",
            f"platoon: {'PASS' if self.passed else 'FAIL'}",
        ]
        return "\n".join(lines)


def _fmt(v):
    return "n/a" if v is None else f"{v:.4g}"


def verify_platoon(log, tolerances: Tolerances = Tolerances()) -> PlatoonReport:
    """Check the four platoon claims on a :class:`~dgvf.sim.TrajectoryLog`.

    Rates are central differences of the logged virtual coordinates, so the
    check does not reuse the controller's own rate computation.
    """
    t = np.asarray(log.t, dtype=float)
    omega = np.asarray(log.omega, dtype=float)
    phi = np.asarray(log.phi, dtype=float)
    alive = np.asarray(log.alive, dtype=bool)
    r, R = float(log.meta["r"]), float(log.meta["R"])
    n = phi.shape[-1]
    goal = target_rate(n)

    span = t[-1] - t[0]
    start = t[-1] - tolerances.window * span
    win = np.flatnonzero(t >= start - 1e-9)
    if t.size < 3 or win.size < 3:
        raise AnalysisError("log too short for the steady window")
    members = np.flatnonzero(alive[win].all(axis=0))
    if members.size == 0:
        raise AnalysisError("no robot is alive throughout the steady window")

    err = np.abs(phi[win][:, members]).max(axis=(0, 2))
    claim1 = {str(int(i) + 1): float(e) for i, e in zip(members, err)}
    c1 = bool(np.all(err <= tolerances.eps_phi))

    rate = np.gradient(omega[:, members], t, axis=0)
    inner = win[(win > 0) & (win < t.size - 1)]
    rw = rate[inner]
    spread = float((rw.max(axis=1) - rw.min(axis=1)).max())
    consensus = float(rw.mean())
    deviation = float(np.abs(rw - goal).max())
    c2 = spread <= tolerances.eps_omega and deviation <= tolerances.eps_omega

    gaps_all = []
    orders = set()
    for ti in win:
        s = members[np.lexsort((members, omega[ti, members]))]
        orders.add(tuple(s))
        gaps_all.append(np.diff(omega[ti, s]))
    gaps_all = np.concatenate(gaps_all) if members.size > 1 else np.array([])
    final = ordering(omega[-1], alive[-1] & np.isin(np.arange(omega.shape[1]), members))
    final_gaps = [float(g) for g in np.diff(omega[-1, final])]
    c3 = bool(np.all((gaps_all > r) & (gaps_all < R)))

    pair_min = min_omega_gap(omega, alive)
    claim4 = float(pair_min.min())
    c4 = bool(claim4 > r)

    conv = convergence_time(t, phi, alive, tolerances.band)
    dist = float(min_distance(log.x, alive).min())

    return PlatoonReport(
        claim1_max_phi=claim1,
        claim1_pass=c1,
        claim2_spread=spread,
        claim2_consensus=consensus,
        claim2_deviation=deviation,
        claim2_pass=bool(c2),
        claim3_gaps=final_gaps,
        claim3_min_gap=float(gaps_all.min()) if gaps_all.size else None,
        claim3_max_gap=float(gaps_all.max()) if gaps_all.size else None,
        claim3_pass=c3,
        claim4_min_gap=_none_if_inf(claim4),
        claim4_pass=c4,
        ordering=[int(i) + 1 for i in final],
        ordering_stationary=len(orders) == 1,
        convergence_time=conv,
        min_physical_distance=_none_if_inf(dist),
        survivors=[int(i) + 1 for i in members],
        target_rate=goal,
        tolerances=asdict(tolerances),
    )
