"""Named scenarios.

Integrator scenarios integrate with an implicit adaptive solver and
continuous feedback: near the platoon equilibrium the repulsion makes the
virtual-coordinate dynamics stiff (decay rates around 2000/s), which a
sampled 10 Hz loop cannot stabilise and explicit RK4 only handles with
~1 ms steps. Vessel scenarios are in metres.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from .config import (
    AnalysisSpec,
    Breakdown,
    DisturbanceSpec,
    EstimatorSpec,
    EventsSpec,
    GainsSpec,
    IntegrationSpec,
    PathSpec,
    RobotsSpec,
    ScenarioConfig,
)
from .errors import ConfigurationError


@dataclass(frozen=True)
class Preset:
    name: str
    description: str
    build: Callable[[], ScenarioConfig]
    negative: bool = False

    def config(self) -> ScenarioConfig:
        return self.build()


def _lissajous3d_10(name="lissajous3d-10", description="10 integrator robots on the 3D Lissajous path", **sections):
    base = dict(
        path=PathSpec(kind="lissajous3d"),
        robots=RobotsSpec(count=10, box_min=(4.0, -7.0, -3.0), box_max=(20.0, 7.0, 3.0)),
        gains=GainsSpec(k=(0.6, 0.6, 0.6), c=3.0, R=0.6, r=0.4),
        estimator=EstimatorSpec(gamma1=20.0, gamma2=0.5, topology="ring", anchors=(1,)),
        integration=IntegrationSpec(method="bdf", dt=0.01, control_period=0.0, duration=40.0, log_period=0.1),
    )
    base.update(sections)
    negative = base.pop("negative", False)
    return ScenarioConfig(name=name, description=description, negative=negative, **base)


def _breakdown():
    return _lissajous3d_10(
        "breakdown-10", "lissajous3d-10 with robots 2-5 breaking down at t = 2 s",
        events=EventsSpec(breakdown=[Breakdown(2.0, (2, 3, 4, 5))]),
    )


def _fixed_ordering_breakdown():
    return _lissajous3d_10(
        "fixed-ordering-breakdown-10",
        "fixed-ordering baseline (chain offsets 2*pi/15) with robots 2-5 breaking down at t = 2 s",
        robots=RobotsSpec(
            count=10, controller="fixed_ordering", box_min=(4.0, -7.0, -3.0), box_max=(20.0, 7.0, 3.0),
            omega_init="spaced", omega_gap=2 * math.pi / 15, fixed_offset=2 * math.pi / 15,
        ),
        events=EventsSpec(breakdown=[Breakdown(2.0, (2, 3, 4, 5))]),
        negative=True,
    )


def _disturbance(level: float, negative: bool):
    label = f"{level:g}"
    return lambda: _lissajous3d_10(
        f"disturbance-{label}",
        f"lissajous3d-10 with constant disturbance {label} per axis, no observer",
        disturbance=DisturbanceSpec(kind="constant", value=(level,) * 3, beta1=math.sqrt(3) * level, beta2=0.0),
        negative=negative,
    )


def _uncompliant_gains():
    return _lissajous3d_10(
        "lissajous3d-10-gamma2-4",
        "lissajous3d-10 with estimator gains gamma1=20, gamma2=4 (outside 0 < gamma2 < 1)",
        estimator=EstimatorSpec(gamma1=20.0, gamma2=4.0, topology="ring", anchors=(1,)),
        negative=True,
    )


def _usv(name, description, path, k, duration):
    return ScenarioConfig(
        name=name,
        description=description,
        path=path,
        robots=RobotsSpec(
            count=3, model="usv", box_min=(-1.4, -1.4), box_max=(1.4, 1.4),
            tracker="ideal_exponential", tracker_rate=5.0, k_psi=2.0,
        ),
        gains=GainsSpec(k=(k, k), c=2.0, R=1.0, r=0.7),
        estimator=EstimatorSpec(gamma1=20.0, gamma2=0.5, topology="ring", anchors=(1,)),
        integration=IntegrationSpec(method="bdf", dt=0.01, control_period=0.0, duration=duration, log_period=0.1),
        analysis=AnalysisSpec(eps_phi=0.1, eps_omega=1e-2, window=0.2, band=0.1),
    )


def _circle_usv():
    return _usv("circle-usv-3", "3 vessels on a circle of radius 0.8 m (tolerance 100 mm)",
                PathSpec(kind="circle", scale=0.8), 3.5, 60.0)


def _lissajous2d_usv():
    return _usv("lissajous2d-usv-3", "3 vessels on a figure-eight waterway of scale 0.8 m (tolerance 100 mm)",
                PathSpec(kind="lissajous2d", scale=0.8, squash=0.3), 2.0, 40.0)


PRESETS = {
    p.name: p
    for p in (
        Preset("circle-usv-3", "3 vessels on a 0.8 m circle, k=3.5, c=2, R=1.0, r=0.7", _circle_usv),
        Preset("lissajous2d-usv-3", "3 vessels on a 0.8 m figure eight, k=2, c=2", _lissajous2d_usv),
        Preset("lissajous3d-10", "10 robots on the 3D Lissajous path, k=0.6, c=3, R=0.6, r=0.4", _lissajous3d_10),
        Preset("breakdown-10", "lissajous3d-10, robots 2-5 break down at t=2 s", _breakdown),
        Preset("fixed-ordering-breakdown-10", "fixed-ordering baseline with the same breakdown", _fixed_ordering_breakdown, True),
        Preset("disturbance-0.1", "lissajous3d-10 with d=(0.1,0.1,0.1), no observer", _disturbance(0.1, False)),
        Preset("disturbance-1", "lissajous3d-10 with d=(1,1,1), no observer (informational)", _disturbance(1.0, True), True),
        Preset("disturbance-3", "lissajous3d-10 with d=(3,3,3), no observer (expected to fail)", _disturbance(3.0, True), True),
        Preset("lissajous3d-10-gamma2-4", "lissajous3d-10 with gamma2=4, violating the estimator gain condition", _uncompliant_gains, True),
    )
}


def get_preset(name: str) -> ScenarioConfig:
    try:
        return PRESETS[name].config()
    except KeyError:
        raise ConfigurationError(f"unknown preset {name!r}; available: {', '.join(PRESETS)}") from None


def preset_table() -> list:
    return [(p.name, p.negative, p.description) for p in PRESETS.values()]
