"""Scenario engine: initial conditions, condition checks, integration, events, logging.

Fixed-step methods (RK4, Euler) advance the coupled state (robots,
estimator, target coordinate) on a grid of ``dt``, splitting each step into
equal sub-steps when the repulsion makes the virtual-coordinate dynamics
stiff; the sub-step count depends only on the state, so runs stay
deterministic. Adaptive methods (BDF, Radau, LSODA) integrate between
control ticks and events with scipy's implicit solvers and sample the
dense output on the ``dt`` grid.

Control is either held between control ticks (``control_period > 0``) or
evaluated at every right-hand-side call (``control_period == 0``).
"""
from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp

from . import analysis
from .config import ScenarioConfig
from .coordination import (
    alpha_slope,
    chain_offsets,
    dgvf_control,
    fixed_ordering_coordination,
    neighbor_mask,
    pairwise_repulsion,
    target_rate,
    usv_guidance,
)
from .dynamics import UsvState, heading_rate_reference, observer_output, usv_derivative, velocity_tracker
from .errors import ConfigurationError, SimulationError, TopologyError
from .estimator import TopologyGraph, build_topology, innovation, min_eigenvalue, validate_gains, gain_threshold
from .paths import ParametricPath, check_capacity, derivative_bounds

MAX_STORED_CLAMPS = 1000
FIXED_METHODS = ("rk4", "euler")
#: implicit adaptive solvers from scipy, for the stiff repulsion dynamics
ADAPTIVE_METHODS = ("bdf", "radau", "lsoda")
_SCIPY_NAMES = {"bdf": "BDF", "radau": "Radau", "lsoda": "LSODA"}
#: fraction of the remaining clearance gap - r a pair may close within one sub-step
CLOSING_FRACTION = 0.2


# --- condition checks -----------------------------------------------------------------


@dataclass(frozen=True)
class CheckResult:
    condition: str
    status: str  # pass | warn | fail | skip
    hard: bool
    message: str

    @property
    def blocking(self) -> bool:
        return self.hard and self.status == "fail"

    def line(self) -> str:
        return f"{self.condition:<12} {self.status.upper():<5} {self.message}"


def _ticks(value: float, dt: float, what: str) -> int:
    m = value / dt
    if abs(m - round(m)) > 1e-9 * max(1.0, m):
        raise ConfigurationError(f"{what} ({value}) must be an integer multiple of dt ({dt})")
    return int(round(m))


def _check_integration(cfg: ScenarioConfig):
    it = cfg.integration
    if it.method not in FIXED_METHODS + ADAPTIVE_METHODS:
        raise ConfigurationError(f"unknown integration method {it.method!r}")
    if not it.dt > 0 or not it.duration > 0:
        raise ConfigurationError("dt and duration must be positive")
    if it.control_period < 0:
        raise ConfigurationError("control_period must be >= 0")
    if it.control_period > 0:
        if it.dt > it.control_period:
            raise ConfigurationError("dt must not exceed control_period")
        _ticks(it.control_period, it.dt, "control_period")
    _ticks(it.duration, it.dt, "duration")
    _ticks(log_period(cfg), it.dt, "log_period")
    if it.substeps != "auto" and not (isinstance(it.substeps, int) and it.substeps >= 1):
        raise ConfigurationError("substeps must be 'auto' or a positive integer")
    rb = cfg.robots
    if rb.count < 1:
        raise ConfigurationError("need at least one robot")
    if rb.model not in ("integrator", "usv"):
        raise ConfigurationError(f"unknown robot model {rb.model!r}")
    if rb.controller not in ("dgvf", "fixed_ordering"):
        raise ConfigurationError(f"unknown controller {rb.controller!r}")
    if rb.model == "usv" and rb.controller != "dgvf":
        raise ConfigurationError("the fixed-ordering baseline is only available for integrator robots")
    if cfg.output.format not in ("csv", "jsonl"):
        raise ConfigurationError(f"unknown output format {cfg.output.format!r}")
    for b in cfg.events.breakdown:
        if not 0 <= b.time <= it.duration:
            raise ConfigurationError(f"breakdown time {b.time} outside the run")
        for rid in b.robots:
            if not 1 <= rid <= rb.count:
                raise ConfigurationError(f"breakdown robot id {rid} out of range 1..{rb.count}")


def log_period(cfg: ScenarioConfig) -> float:
    it = cfg.integration
    if it.log_period is not None:
        return it.log_period
    return it.control_period if it.control_period > 0 else 0.1


def estimator_topology(cfg: ScenarioConfig) -> TopologyGraph:
    e = cfg.estimator
    anchors = [a - 1 for a in e.anchors]
    edges = [(i - 1, j - 1) for i, j in e.edges]
    return build_topology(e.topology, cfg.robots.count, anchors, edges)


def validate_config(cfg: ScenarioConfig) -> list:
    """Check the five standing conditions (plus radii/integration sanity) on a scenario."""
    results = []
    try:
        _check_integration(cfg)
        path = cfg.path.build()
        gains = cfg.gain_set(path.dimension)
        if cfg.robots.model == "usv" and path.dimension != 2:
            raise ConfigurationError("USV scenarios need a planar path")
    except ConfigurationError as exc:
        return [CheckResult("config", "fail", True, str(exc))]
    results.append(CheckResult("radii", "pass", True, f"0 < r={gains.r} < R={gains.R}"))

    try:
        init = initial_conditions(cfg, path)
    except ConfigurationError as exc:
        results.append(CheckResult("C1", "fail", True, str(exc)))
    else:
        results.append(_check_c1(init, gains.r))

    d1, d2 = derivative_bounds(path)
    ok = math.isfinite(d1) and math.isfinite(d2)
    results.append(CheckResult("C2", "pass" if ok else "fail", False, f"max|f'| = {d1:.4g}, max|f''| = {d2:.4g} over one period"))

    results.append(_check_c3(cfg))

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        cap = check_capacity(path, cfg.robots.count, gains.R)
    if cap.skipped:
        results.append(CheckResult("C4", "warn", False, cap.message))
    else:
        results.append(CheckResult(
            "C4", "pass" if cap.passed else "fail", False,
            f"path length {cap.path_length:.6g} vs platoon length {cap.platoon_length:.6g} (slack {cap.slack:.4g})",
        ))

    dist = cfg.disturbance.model()
    if dist.kind == "none":
        results.append(CheckResult("C5", "pass", False, "no disturbance"))
    elif dist.bounded:
        results.append(CheckResult("C5", "pass", False, f"declared bounds beta1={dist.beta1}, beta2={dist.beta2} hold"))
    else:
        b1, b2 = dist.worst_case()
        results.append(CheckResult("C5", "warn", False, f"bounds not declared (analytic worst case |d|<={b1:.4g}, |d'|<={b2:.4g})"))
    return results


def _check_c1(init, r) -> CheckResult:
    x, w = init.x, init.omega
    N = w.size
    if N < 2:
        return CheckResult("C1", "pass", True, "single robot")
    gap = float(np.min(np.diff(np.sort(w))))
    dist = float(analysis.min_distance(x[None], np.ones((1, N), dtype=bool))[0])
    ok = gap > r and dist > 0
    return CheckResult("C1", "pass" if ok else "fail", True, f"min |omega_ik(0)| = {gap:.4g} (r = {r}), min |x_i(0) - x_k(0)| = {dist:.4g}")


def _check_c3(cfg) -> CheckResult:
    if cfg.robots.controller != "dgvf":
        return CheckResult("C3", "skip", False, "fixed-ordering baseline uses no target estimator")
    e = cfg.estimator
    topo = estimator_topology(cfg)
    lam = min_eigenvalue(topo)
    try:
        ok = validate_gains(e.gamma1, e.gamma2, lam)
    except TopologyError as exc:
        return CheckResult("C3", "fail", False, str(exc))
    if ok:
        return CheckResult("C3", "pass", False, f"gamma1={e.gamma1} > {gain_threshold(e.gamma2, lam):.4g}, 0 < gamma2={e.gamma2} < 1, lambda_min(L+B)={lam:.4g}")
    if not 0 < e.gamma2 < 1:
        why = f"gamma2={e.gamma2} violates 0 < gamma2 < 1"
    else:
        why = f"gamma1={e.gamma1} <= 1/(4 gamma2 (1-gamma2^2) lambda) = {gain_threshold(e.gamma2, lam):.4g}"
    return CheckResult("C3", "fail", False, f"exponential estimator convergence not guaranteed: {why}")


# --- initial conditions -------------------------------------------------------------------


def robot_streams(seed: int, count: int):
    """One independent counter-based generator per robot, so draws do not depend on evaluation order."""
    children = np.random.SeedSequence(seed).spawn(count)
    return [np.random.Generator(np.random.Philox(c)) for c in children]


@dataclass
class InitialState:
    x: np.ndarray
    omega: np.ndarray
    omega_hat: np.ndarray
    sigma_hat: np.ndarray
    omega_star: float
    psi: np.ndarray


def separate(values, min_gap: float) -> np.ndarray:
    """Smallest (least-squares) change of ``values`` making all sorted gaps >= ``min_gap``.

    Sorted order is kept (ties by index); solved exactly by isotonic regression
    of ``v_(k) - k * min_gap`` with pool-adjacent-violators.
    """
    v = np.asarray(values, dtype=float)
    order = np.lexsort((np.arange(v.size), v))
    z = v[order] - min_gap * np.arange(v.size)
    blocks = []  # [mean, weight]
    for val in z:
        blocks.append([val, 1])
        while len(blocks) > 1 and blocks[-2][0] > blocks[-1][0]:
            m2, w2 = blocks.pop()
            m1, w1 = blocks.pop()
            blocks.append([(m1 * w1 + m2 * w2) / (w1 + w2), w1 + w2])
    fitted = np.concatenate([np.full(w, m) for m, w in blocks])
    out = np.empty_like(v)
    out[order] = fitted + min_gap * np.arange(v.size)
    return out


def project_to_path(path: ParametricPath, points, centre: float = 0.0, samples: int = 4096) -> np.ndarray:
    """Grid projection: parameter of the nearest sampled path point (smallest parameter on ties).

    The grid covers one period centred on ``centre``, so the result is the
    branch of the parameter closest to it.
    """
    if not path.closed:
        raise ConfigurationError("projected initialisation needs a closed path with a declared period")
    grid = centre + path.period * (np.arange(samples) / samples - 0.5)
    curve = path.value(grid)
    d2 = ((np.asarray(points)[:, None, :] - curve[None, :, :]) ** 2).sum(axis=-1)
    return grid[np.argmin(d2, axis=1)]


def initial_conditions(cfg: ScenarioConfig, path: Optional[ParametricPath] = None) -> InitialState:
    path = path or cfg.path.build()
    rb, n, N = cfg.robots, path.dimension, cfg.robots.count
    streams = robot_streams(cfg.integration.seed, N)

    if rb.initial_positions == "random":
        lo, hi = np.asarray(rb.box_min, dtype=float), np.asarray(rb.box_max, dtype=float)
        if lo.shape != (n,) or hi.shape != (n,) or np.any(hi <= lo):
            raise ConfigurationError(f"position box must have {n} increasing bounds")
        x = np.array([lo + (hi - lo) * g.random(n) for g in streams])
    elif rb.initial_positions == "explicit":
        x = np.asarray(rb.positions, dtype=float)
        if x.shape != (N, n):
            raise ConfigurationError(f"explicit positions must be {N} x {n}")
    else:
        raise ConfigurationError(f"unknown initial_positions mode {rb.initial_positions!r}")

    if rb.initial_heading == "random":
        psi = np.array([g.uniform(-math.pi, math.pi) for g in streams])
    elif rb.initial_heading == "explicit":
        psi = np.asarray(rb.headings, dtype=float)
        if psi.shape != (N,):
            raise ConfigurationError("need one explicit heading per robot")
    else:
        raise ConfigurationError(f"unknown initial_heading mode {rb.initial_heading!r}")

    r = cfg.gains.r
    if rb.omega_init == "projected":
        w = project_to_path(path, x, cfg.estimator.omega_star0)
        min_gap = rb.omega_min_gap if rb.omega_min_gap is not None else 0.5 * (r + cfg.gains.R)
        if min_gap <= r:
            raise ConfigurationError("omega_min_gap must exceed r")
        w = separate(w, min_gap)
    elif rb.omega_init == "spaced":
        w = rb.omega_gap * np.arange(N, dtype=float)
    elif rb.omega_init == "explicit":
        w = np.asarray(rb.omega_values, dtype=float)
        if w.shape != (N,):
            raise ConfigurationError("need one explicit omega per robot")
    else:
        raise ConfigurationError(f"unknown omega_init mode {rb.omega_init!r}")

    e = cfg.estimator
    w_star = float(e.omega_star0)
    if e.init == "zero":
        wh, sh = np.zeros(N), np.zeros(N)
    elif e.init == "exact":
        wh, sh = np.full(N, w_star), np.full(N, target_rate(n))
    elif e.init == "random":
        wh = w_star + np.array([g.uniform(-e.init_spread, e.init_spread) for g in streams])
        sh = np.zeros(N)
    else:
        raise ConfigurationError(f"unknown estimator init {e.init!r}")
    return InitialState(x, w, wh, sh, w_star, psi)


# --- breakdown events ------------------------------------------------------------------


def apply_breakdown(alive, topology: TopologyGraph, robots, t: float):
    """Mark ``robots`` (0-based) dead and drop them from the estimator graph.

    Returns ``(alive, topology, warnings)``; the survivors' graph is re-checked
    for connectivity and anchoring, which only produces warnings.
    """
    alive = np.array(alive, dtype=bool)
    robots = list(robots)
    if any(not 0 <= i < alive.size for i in robots):
        raise ConfigurationError("breakdown robot index out of range")
    alive[robots] = False
    topo = topology.without(np.flatnonzero(~alive))
    notes = []
    if alive.any():
        if not topo.connected(alive):
            notes.append(f"t={t:g}: survivor communication graph is disconnected")
        if not topo.anchored(alive):
            notes.append(f"t={t:g}: no surviving robot observes the target coordinate")
    return alive, topo, notes


# --- trajectory log -----------------------------------------------------------------------


@dataclass
class TrajectoryLog:
    t: np.ndarray
    x: np.ndarray
    omega: np.ndarray
    omega_hat: np.ndarray
    phi: np.ndarray
    u: np.ndarray
    u_omega: np.ndarray
    eta: np.ndarray
    alive: np.ndarray
    neighbor_count: np.ndarray
    omega_star: np.ndarray
    V: np.ndarray
    Omega: np.ndarray
    min_gap: np.ndarray
    min_distance: np.ndarray
    extra: dict = field(default_factory=dict)
    events: list = field(default_factory=list)
    clamp_events: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    @property
    def dimension(self) -> int:
        return self.x.shape[-1]

    @property
    def count(self) -> int:
        return self.x.shape[1]

    @property
    def clamp_count(self) -> int:
        return int(self.meta.get("clamp_count", len(self.clamp_events)))


@dataclass
class _Control:
    u: np.ndarray
    u_omega: np.ndarray
    eta: np.ndarray
    neighbors: np.ndarray
    eps_r: Optional[np.ndarray] = None
    v_r: Optional[np.ndarray] = None


class Simulation:
    """One scenario run. Use :func:`run` unless step-level access is needed."""

    def __init__(self, cfg: ScenarioConfig):
        _check_integration(cfg)
        self.cfg = cfg
        self.path = cfg.path.build()
        self.n = n = self.path.dimension
        self.N = N = cfg.robots.count
        self.gains = cfg.gain_set(n)
        self.k = self.gains.for_dimension(n)
        self.sgn = target_rate(n)
        self.model = cfg.robots.model
        self.controller = cfg.robots.controller
        if self.model == "usv" and n != 2:
            raise ConfigurationError("USV scenarios need a planar path")
        self.topo = estimator_topology(cfg)
        self.disturbance = cfg.disturbance.model()
        self.observer = cfg.disturbance.observer_model()
        self.tracker = cfg.robots.tracker_mode()
        self.vessel = cfg.robots.vessel_params()
        if self.controller == "fixed_ordering":
            self.fixed_adj, self.fixed_off = chain_offsets(N, cfg.robots.fixed_offset)
        self.alive = np.ones(N, dtype=bool)
        self.notes = []
        self.clamps = []
        self.clamp_count = 0
        self.eta_sum_max = 0.0
        self.max_substeps_used = 1
        self.total_substeps = 0

        if self.model == "integrator":
            robot_blocks = [("x", N * n), ("w", N), ("wh", N), ("sh", N)]
        elif self.tracker.kind == "ideal_exponential":
            robot_blocks = [("x", N * 2), ("psi", N), ("es", N), ("ev", N), ("w", N), ("wh", N), ("sh", N)]
        else:
            robot_blocks = [("x", N * 2), ("psi", N), ("surge", N), ("sway", N), ("yaw", N), ("w", N), ("wh", N), ("sh", N)]
        self._robot_blocks = [b for b, _ in robot_blocks]
        self._slices = {}
        pos = 0
        for name, size in robot_blocks + [("ws", 1)]:
            self._slices[name] = slice(pos, pos + size)
            pos += size
        self.size = pos

        init = initial_conditions(cfg, self.path)
        c1 = _check_c1(init, self.gains.r)
        if c1.blocking:
            raise ConfigurationError(f"initial condition check failed: {c1.message}")
        self.y = np.zeros(self.size)
        S = self.unpack(self.y)
        S["x"][:] = init.x
        S["w"][:] = init.omega
        S["wh"][:] = init.omega_hat
        S["sh"][:] = init.sigma_hat
        S["ws"][0] = init.omega_star
        if self.model == "usv":
            S["psi"][:] = init.psi

    # state layout
    def unpack(self, y) -> dict:
        out = {name: y[s] for name, s in self._slices.items()}
        out["x"] = out["x"].reshape(self.N, self.n)
        return out

    # control laws
    def control(self, t: float, S: dict, record: bool = False) -> _Control:
        x, w = S["x"], S["w"]
        g = self.gains
        if self.controller == "dgvf":
            eta, clamped, nbr = pairwise_repulsion(w, self.alive, g.r, g.R)
            if record:
                self._note(t, eta, clamped, w)
        else:
            eta = np.zeros(self.N)
            nbr = self.fixed_adj.sum(axis=1)
        if self.model == "integrator":
            d_hat = observer_output(self.observer, self.disturbance.at(t, self.n), t)
            if self.controller == "dgvf":
                out = dgvf_control(self.path, x, w, S["wh"], eta, d_hat, g)
                return _Control(out.u, out.u_omega, eta, nbr)
            out = dgvf_control(self.path, x, w, w, 0.0, d_hat, g)
            u_omega = out.u_omega + fixed_ordering_coordination(w, self.fixed_adj, self.fixed_off)
            return _Control(out.u, u_omega, eta, nbr)
        psi = S["psi"]
        eps_r, v_r, u_omega = usv_guidance(self.path, x, psi, w, S["wh"], eta, g)
        c, s = np.cos(psi), np.sin(psi)
        u = np.stack([eps_r * c - v_r * s, eps_r * s + v_r * c], axis=-1)
        return _Control(u, u_omega, eta, nbr, eps_r, v_r)

    def _note(self, t, eta, clamped, w):
        self.eta_sum_max = max(self.eta_sum_max, abs(float(eta.sum())))
        if clamped.any():
            ii, kk = np.nonzero(np.triu(clamped, 1))
            self.clamp_count += ii.size
            for i, k in zip(ii, kk):
                if len(self.clamps) < MAX_STORED_CLAMPS:
                    self.clamps.append({"t": float(t), "robots": [int(i) + 1, int(k) + 1], "gap": float(abs(w[i] - w[k]))})

    def rates(self, t: float, y: np.ndarray, held: Optional[_Control] = None, record: bool = True) -> np.ndarray:
        S = self.unpack(y)
        ctrl = held if held is not None else self.control(t, S, record=record)
        dy = np.zeros_like(y)
        D = self.unpack(dy)
        d = self.disturbance.at(t, self.n)
        if self.model == "integrator":
            D["x"][:] = ctrl.u + d
        else:
            psi = S["psi"]
            tr = self.tracker
            D["psi"][:] = heading_rate_reference(ctrl.eps_r, ctrl.v_r, tr.k_psi)
            if tr.kind == "ideal_exponential":
                surge = ctrl.eps_r + S["es"]
                sway = ctrl.v_r + S["ev"]
                D["es"][:] = -tr.rate * S["es"]
                D["ev"][:] = -tr.rate * S["ev"]
            else:
                vessel = UsvState(S["x"], psi, S["surge"], S["sway"], S["yaw"])
                tau = velocity_tracker(tr, vessel, ctrl.eps_r, ctrl.v_r, self.vessel)
                full = usv_derivative(vessel, tau, self.vessel)
                surge, sway = S["surge"], S["sway"]
                D["psi"][:] = full[2]
                D["surge"][:], D["sway"][:], D["yaw"][:] = full[3], full[4], full[5]
            c, s = np.cos(psi), np.sin(psi)
            D["x"][:, 0] = surge * c - sway * s + d[0]
            D["x"][:, 1] = surge * s + sway * c + d[1]
        D["w"][:] = ctrl.u_omega
        nu = self.gains.gamma1 * innovation(S["wh"], S["ws"][0], self.topo)
        D["wh"][:] = nu + S["sh"]
        D["sh"][:] = self.gains.gamma2 * nu
        D["ws"][0] = self.sgn
        if not self.alive.all():
            dead = ~self.alive
            for name in self._robot_blocks:
                D[name][dead] = 0.0
        return dy

    def stiffness(self, y: np.ndarray, held: Optional[_Control]) -> float:
        """Conservative bound on the fastest decay rate of the linearised dynamics."""
        S = self.unpack(y)
        g = self.gains
        deg = self.topo.adjacency.sum(axis=1) + self.topo.anchors
        lam = g.gamma1 * (1.0 + g.gamma2) * float(2 * deg.max() if deg.size else 1.0)
        tr = self.tracker
        if self.model == "usv":
            if tr.kind == "ideal_exponential":
                lam = max(lam, tr.rate)
            else:
                p = self.vessel
                lam = max(lam, tr.k_surge + abs(p.l1), tr.k_yaw + abs(p.l4), abs(p.l6))
            lam = max(lam, tr.k_psi)
        if held is not None:
            return lam
        w = S["w"]
        F = self.path.first(w)
        F2 = self.path.second(w)
        phi = S["x"] - self.path.value(w)
        kmax = float(self.k.max())
        field = kmax * (1.0 + (F * F).sum(-1) + np.linalg.norm(phi, axis=-1) * np.linalg.norm(F2, axis=-1))
        if self.controller == "dgvf":
            gap = np.abs(w[:, None] - w[None, :])
            mask = neighbor_mask(w, self.alive, g.R)
            coord = g.c + 2.0 * np.where(mask, alpha_slope(gap, g.r, g.R), 0.0).sum(axis=1)
        else:
            coord = 2.0 * self.fixed_adj.sum(axis=1)
        per_robot = field + coord
        if self.alive.any():
            lam = max(lam, float(per_robot[self.alive].max()))
        return lam

    def closing_limit(self, t: float, y: np.ndarray, held: Optional[_Control]) -> float:
        """Largest step letting no pair of virtual coordinates close more than a fraction of its clearance."""
        if self.controller != "dgvf" or self.alive.sum() < 2:
            return math.inf
        S = self.unpack(y)
        w = S["w"]
        rate = (held if held is not None else self.control(t, S)).u_omega
        diff = w[:, None] - w[None, :]
        closing = -np.sign(diff) * (rate[:, None] - rate[None, :])
        clear = np.abs(diff) - self.gains.r
        pair = np.triu(self.alive[:, None] & self.alive[None, :], 1) & (closing > 0) & (clear > 0)
        if not pair.any():
            return math.inf
        return float(np.min(CLOSING_FRACTION * clear[pair] / closing[pair]))

    def substeps(self, t, y, held) -> int:
        it = self.cfg.integration
        if it.substeps != "auto":
            return int(it.substeps)
        lam = self.stiffness(y, held)
        reach = 2.0 if it.method == "rk4" else 1.0
        m = max(it.dt * lam / reach, it.dt / self.closing_limit(t, y, held))
        return int(min(max(1, math.ceil(m)), it.max_substeps))

    def _segment(self, t0: float, t1: float, y: np.ndarray, held):
        it = self.cfg.integration
        sol = solve_ivp(
            lambda tt, yy: self.rates(tt, yy, held, record=False), (t0, t1), y,
            method=_SCIPY_NAMES[it.method],
            rtol=it.rtol, atol=it.atol, dense_output=True,
        )
        if sol.status != 0:
            raise SimulationError(f"stiff solver failed on [{t0:g}, {t1:g}]: {sol.message}", tick=None, robot=None)
        self.total_substeps += sol.t.size - 1
        return sol

    def step(self, t: float, y: np.ndarray, h: float, held) -> np.ndarray:
        f = self.rates
        if self.cfg.integration.method == "euler":
            return y + h * f(t, y, held)
        k1 = f(t, y, held)
        k2 = f(t + 0.5 * h, y + 0.5 * h * k1, held)
        k3 = f(t + 0.5 * h, y + 0.5 * h * k2, held)
        k4 = f(t + h, y + h * k3, held)
        return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    def run(self) -> TrajectoryLog:
        cfg, it = self.cfg, self.cfg.integration
        dt = it.dt
        steps = _ticks(it.duration, dt, "duration")
        ctrl_every = _ticks(it.control_period, dt, "control_period") if it.control_period > 0 else 0
        log_every = _ticks(log_period(cfg), dt, "log_period")
        schedule = {}
        for b in cfg.events.breakdown:
            schedule.setdefault(_ticks_round(b.time, dt), []).append(b)
        rows = []
        events = []
        adaptive = it.method in ADAPTIVE_METHODS
        boundaries = sorted(set(schedule) | set(range(0, steps + 1, ctrl_every or steps)) | {steps})
        held = None
        segment, seg_end = None, -1
        start = time.perf_counter()
        y = self.y
        for tick in range(steps + 1):
            t = tick * dt
            for b in schedule.get(tick, []):
                self.alive, self.topo, notes = apply_breakdown(self.alive, self.topo, [r - 1 for r in b.robots], t)
                self.notes.extend(notes)
                events.append({"t": t, "kind": "breakdown", "robots": list(b.robots)})
                held, segment = None, None
            if ctrl_every and (held is None or tick % ctrl_every == 0):
                held = self.control(t, self.unpack(y), record=True)
            elif adaptive and not ctrl_every:
                self.control(t, self.unpack(y), record=True)
            if tick % log_every == 0 or tick == steps:
                rows.append(self._snapshot(t, y))
            if tick == steps:
                break
            u_held = held if ctrl_every else None
            if adaptive:
                if segment is None or tick >= seg_end:
                    seg_end = next(b for b in boundaries if b > tick)
                    segment = self._segment(t, seg_end * dt, y, u_held)
                y = segment.y[:, -1].copy() if tick + 1 == seg_end else segment.sol((tick + 1) * dt)
            else:
                m = self.substeps(t, y, u_held)
                self.max_substeps_used = max(self.max_substeps_used, m)
                self.total_substeps += m
                h = dt / m
                for j in range(m):
                    y = self.step(t + j * h, y, h, u_held)
            if not np.all(np.isfinite(y)):
                bad = self._offender(y)
                raise SimulationError(f"non-finite state after tick {tick} (robot {bad})", tick=tick, robot=bad)
        self.y = y
        return self._assemble(rows, events, time.perf_counter() - start)

    def _offender(self, y):
        S = self.unpack(y)
        for name in self._robot_blocks:
            v = S[name].reshape(self.N, -1)
            bad = np.flatnonzero(~np.all(np.isfinite(v), axis=1))
            if bad.size:
                return int(bad[0]) + 1
        return None

    def _snapshot(self, t, y):
        S = self.unpack(y)
        ctrl = self.control(t, S)
        x, w = S["x"].copy(), S["w"].copy()
        phi = x - self.path.value(w)
        lyap = analysis.lyapunov_diagnostics(self.path, x, w, S["wh"], S["ws"][0], self.gains, self.alive)
        alive = self.alive.copy()
        row = {
            "t": t, "x": x, "omega": w, "omega_hat": S["wh"].copy(), "phi": phi,
            "u": ctrl.u.copy(), "u_omega": np.asarray(ctrl.u_omega, dtype=float).copy(), "eta": ctrl.eta.copy(),
            "alive": alive, "neighbors": np.asarray(ctrl.neighbors).copy(), "omega_star": float(S["ws"][0]),
            "V": lyap.V, "Omega": lyap.Omega,
            "min_gap": float(analysis.min_omega_gap(w[None], alive[None])[0]),
            "min_distance": float(analysis.min_distance(x[None], alive[None])[0]),
        }
        if self.model == "usv":
            row["psi"] = S["psi"].copy()
            if self.tracker.kind == "ideal_exponential":
                row["surge_error"], row["sway_error"] = S["es"].copy(), S["ev"].copy()
            else:
                row["surge_error"] = S["surge"] - ctrl.eps_r
                row["sway_error"] = S["sway"] - ctrl.v_r
        return row

    def _assemble(self, rows, events, runtime):
        def col(key, dtype=float):
            return np.array([r[key] for r in rows], dtype=dtype)

        extra = {}
        for key in ("psi", "surge_error", "sway_error"):
            if key in rows[0]:
                extra[key] = col(key)
        cfg = self.cfg
        meta = {
            "name": cfg.name,
            "negative": cfg.negative,
            "n": self.n,
            "N": self.N,
            "r": self.gains.r,
            "R": self.gains.R,
            "k": list(self.k),
            "c": self.gains.c,
            "gamma1": self.gains.gamma1,
            "gamma2": self.gains.gamma2,
            "path": cfg.path.kind,
            "model": self.model,
            "controller": self.controller,
            "method": cfg.integration.method,
            "dt": cfg.integration.dt,
            "control_period": cfg.integration.control_period,
            "log_period": log_period(cfg),
            "duration": cfg.integration.duration,
            "seed": cfg.integration.seed,
            "target_rate": self.sgn,
            "tolerances": dict(vars(cfg.analysis)),
            "clamp_count": self.clamp_count,
            "eta_sum_max": self.eta_sum_max,
            "max_substeps": self.max_substeps_used,
            "total_substeps": self.total_substeps,
            "warnings": list(self.notes),
            "runtime_s": runtime,
        }
        return TrajectoryLog(
            t=col("t"), x=col("x"), omega=col("omega"), omega_hat=col("omega_hat"), phi=col("phi"),
            u=col("u"), u_omega=col("u_omega"), eta=col("eta"), alive=col("alive", bool),
            neighbor_count=col("neighbors", int), omega_star=col("omega_star"), V=col("V"), Omega=col("Omega"),
            min_gap=col("min_gap"), min_distance=col("min_distance"), extra=extra, events=events,
            clamp_events=list(self.clamps), meta=meta,
        )


def _ticks_round(value, dt):
    return int(round(value / dt))


def run(cfg: ScenarioConfig) -> TrajectoryLog:
    """Validate hard conditions, then integrate the scenario and return its log."""
    for check in validate_config(cfg):
        if check.blocking:
            raise ConfigurationError(f"{check.condition}: {check.message}")
    return Simulation(cfg).run()
