"""Scenario configuration: dataclasses plus a strict TOML loader.

Robot indices in config files, logs and reports are 1-based; the library
works 0-based internally.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .dynamics import DisturbanceModel, ObserverModel, TrackerMode, UsvParams
from .errors import ConfigurationError
from .gvf import GainSet
from .paths import ParametricPath, builtin_path


@dataclass
class PathSpec:
    kind: str = "lissajous3d"
    scale: Optional[float] = None
    squash: Optional[float] = None
    amplitudes: Optional[tuple] = None

    def build(self) -> ParametricPath:
        params = {}
        if self.kind == "circle":
            if self.scale is not None:
                params["scale"] = self.scale
        elif self.kind == "lissajous2d":
            if self.scale is not None:
                params["scale"] = self.scale
            if self.squash is not None:
                params["squash"] = self.squash
        elif self.kind == "lissajous3d":
            if self.amplitudes is not None:
                params["amplitudes"] = tuple(self.amplitudes)
        return builtin_path(self.kind, **params)


@dataclass
class RobotsSpec:
    count: int = 10
    model: str = "integrator"  # integrator | usv
    controller: str = "dgvf"  # dgvf | fixed_ordering
    initial_positions: str = "random"  # random | explicit
    box_min: tuple = (-18.0, -8.0, -4.0)
    box_max: tuple = (18.0, 8.0, 4.0)
    positions: tuple = ()
    initial_heading: str = "random"  # random | explicit
    headings: tuple = ()
    omega_init: str = "projected"  # projected | spaced | explicit
    omega_gap: float = 0.5
    omega_values: tuple = ()
    omega_min_gap: Optional[float] = None
    fixed_offset: float = 2 * math.pi / 15
    tracker: str = "ideal_exponential"
    tracker_rate: float = 5.0
    k_surge: float = 2.0
    k_yaw: float = 4.0
    k_psi: float = 2.0
    usv_params: dict = field(default_factory=dict)

    def tracker_mode(self) -> TrackerMode:
        return TrackerMode(self.tracker, self.tracker_rate, self.k_surge, self.k_yaw, self.k_psi)

    def vessel_params(self) -> UsvParams:
        try:
            return UsvParams(**self.usv_params)
        except TypeError as exc:
            raise ConfigurationError(f"bad usv_params: {exc}") from exc


@dataclass
class GainsSpec:
    k: tuple = (0.6, 0.6, 0.6)
    c: float = 3.0
    R: float = 0.6
    r: float = 0.4


@dataclass
class EstimatorSpec:
    gamma1: float = 20.0
    gamma2: float = 0.5
    topology: str = "ring"  # ring | complete | path | edges
    edges: tuple = ()
    anchors: tuple = (1,)
    init: str = "zero"  # zero | exact | random
    init_spread: float = 1.0
    omega_star0: float = 0.0


@dataclass
class DisturbanceSpec:
    kind: str = "none"
    value: tuple = ()
    amplitude: tuple = ()
    frequency: tuple = ()
    phase: tuple = ()
    beta1: Optional[float] = None
    beta2: Optional[float] = None
    observer: str = "off"  # off | perfect_after | exponential
    observer_settle: float = 0.0
    observer_rate: float = 1.0
    observer_initial: tuple = ()

    def model(self) -> DisturbanceModel:
        return DisturbanceModel(self.kind, self.value, self.amplitude, self.frequency, self.phase, self.beta1, self.beta2)

    def observer_model(self) -> ObserverModel:
        return ObserverModel(self.observer, self.observer_settle, self.observer_rate, self.observer_initial)


@dataclass
class Breakdown:
    time: float
    robots: tuple  # 1-based ids


@dataclass
class EventsSpec:
    breakdown: list = field(default_factory=list)


@dataclass
class IntegrationSpec:
    method: str = "rk4"  # rk4 | euler (fixed step) or bdf | radau | lsoda (adaptive, stiff)
    dt: float = 0.01
    control_period: float = 0.1  # 0 = feedback evaluated at every integrator stage
    duration: float = 40.0
    log_period: Optional[float] = None
    substeps: object = "auto"  # "auto" or a positive int
    max_substeps: int = 4000
    rtol: float = 1e-8  # adaptive methods only
    atol: float = 1e-10
    seed: int = 0


@dataclass
class OutputSpec:
    dir: Optional[str] = None
    format: str = "csv"  # csv | jsonl
    compress: bool = False


@dataclass
class AnalysisSpec:
    eps_phi: float = 1e-2
    eps_omega: float = 1e-2
    window: float = 0.2
    band: float = 0.1


@dataclass
class ScenarioConfig:
    name: str = "scenario"
    description: str = ""
    negative: bool = False  # expected to fail some claims (comparison / threshold studies)
    path: PathSpec = field(default_factory=PathSpec)
    robots: RobotsSpec = field(default_factory=RobotsSpec)
    gains: GainsSpec = field(default_factory=GainsSpec)
    estimator: EstimatorSpec = field(default_factory=EstimatorSpec)
    disturbance: DisturbanceSpec = field(default_factory=DisturbanceSpec)
    events: EventsSpec = field(default_factory=EventsSpec)
    integration: IntegrationSpec = field(default_factory=IntegrationSpec)
    output: OutputSpec = field(default_factory=OutputSpec)
    analysis: AnalysisSpec = field(default_factory=AnalysisSpec)

    def gain_set(self, n: int) -> GainSet:
        g, e = self.gains, self.estimator
        gs = GainSet(g.k, g.c, g.R, g.r, e.gamma1, e.gamma2)
        gs.for_dimension(n)
        return gs

    def replace(self, **sections) -> "ScenarioConfig":
        """Copy with some sections or top-level fields replaced."""
        return dataclasses.replace(self, **sections)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


SECTIONS = {
    "path": PathSpec,
    "robots": RobotsSpec,
    "gains": GainsSpec,
    "estimator": EstimatorSpec,
    "disturbance": DisturbanceSpec,
    "events": EventsSpec,
    "integration": IntegrationSpec,
    "output": OutputSpec,
    "analysis": AnalysisSpec,
}
TOP_LEVEL = ("name", "description", "negative")


def _freeze(value):
    if isinstance(value, list):
        return tuple(_freeze(v) for v in value)
    return value


def _section(cls, data: dict, section: str):
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigurationError(f"unknown key(s) in [{section}]: {', '.join(unknown)}")
    kwargs = {}
    for key, value in data.items():
        if section == "events" and key == "breakdown":
            kwargs[key] = [_breakdown(item) for item in value]
        elif key == "usv_params":
            kwargs[key] = dict(value)
        else:
            kwargs[key] = _freeze(value)
    return cls(**kwargs)


def _breakdown(item) -> Breakdown:
    if not isinstance(item, dict) or set(item) != {"time", "robots"}:
        raise ConfigurationError("each breakdown needs exactly 'time' and 'robots'")
    return Breakdown(float(item["time"]), tuple(int(r) for r in item["robots"]))


def config_from_dict(data: dict) -> ScenarioConfig:
    unknown = sorted(set(data) - set(SECTIONS) - set(TOP_LEVEL))
    if unknown:
        raise ConfigurationError(f"unknown section(s) or key(s): {', '.join(unknown)}")
    kwargs = {k: data[k] for k in TOP_LEVEL if k in data}
    for name, cls in SECTIONS.items():
        if name in data:
            if not isinstance(data[name], dict):
                raise ConfigurationError(f"[{name}] must be a table")
            kwargs[name] = _section(cls, data[name], name)
    return ScenarioConfig(**kwargs)


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        with path.open("rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"malformed config {path}: {exc}") from exc
    cfg = config_from_dict(data)
    if "name" not in data:
        cfg.name = path.stem
    return cfg
