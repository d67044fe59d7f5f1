"""Built-in case studies: a heated rod with per-point thermostats and a
two-speed kinematic traffic model.
"""
from __future__ import annotations

from dataclasses import dataclass

from .automaton import (
    DiscretizationSpec,
    Dspdha,
    GuardDecl,
    InitSpec,
    ModelDescription,
    ModePde,
    RegionDecl,
    affine_source,
    discretize_model,
)
from .mesh import SpaceDomain
from .schemes import OUTFLOW, dirichlet

BUILTIN_NAMES = ("heater", "traffic")


@dataclass(frozen=True)
class HeaterConfig:
    """Heated rod on [0, length], ends clamped to zero.

    Each grid point carries its own heater: ON adds amplitude*(length - x)
    of heat, OFF adds nothing. A point switches OFF when its value reaches
    off_above and back ON when it drops to on_below. m_interior counts the
    unknowns between the clamped ends.
    """

    length: float = 10.0
    m_interior: int = 9
    alpha: float = 1.0
    amplitude: float = 1.0
    on_below: float = 0.4
    off_above: float = 0.7
    init_value: float = 0.2

    def __post_init__(self):
        if not (0 < self.on_below < self.off_above):
            raise ValueError("thresholds must satisfy 0 < on_below < off_above")
        if self.m_interior < 2:
            raise ValueError("need at least 2 interior points")


def heater_description(cfg: HeaterConfig = HeaterConfig()) -> ModelDescription:
    domain = SpaceDomain(0.0, cfg.length)
    return ModelDescription(
        name="heater",
        domain=domain,
        modes=(
            ModePde(
                name="on",
                kind="diffusion",
                alpha=cfg.alpha,
                source=affine_source(slope=-cfg.amplitude, intercept=cfg.amplitude * cfg.length),
            ),
            ModePde(name="off", kind="diffusion", alpha=cfg.alpha),
        ),
        boundary=(dirichlet(0.0), dirichlet(0.0)),
        regions=(RegionDecl(lower=0.0, upper=cfg.length, mode="on", closed_right=True),),
        init=InitSpec(kind="constant", value=cfg.init_value),
        guards=(
            GuardDecl(mode="on", event="turn_off", direction="rising",
                      threshold=cfg.off_above, target="off"),
            GuardDecl(mode="off", event="turn_on", direction="falling",
                      threshold=cfg.on_below, target="on"),
        ),
        discretization=DiscretizationSpec(m=cfg.m_interior + 2, scheme="second_central"),
    )


def heater_model(cfg: HeaterConfig = HeaterConfig()) -> Dspdha:
    """Two-mode thermostat automaton; the clamped ends become ghosts, so
    the state holds cfg.m_interior unknowns."""
    return discretize_model(heater_description(cfg), m=cfg.m_interior + 2, scheme="second_central")


@dataclass(frozen=True)
class TrafficConfig:
    """Kinematic traffic on [0, length]: free traffic rides forward at
    v_free, congestion waves ride backward at v_back, and forward parcels
    reaching a congestion block merge into its upstream edge.

    congested_blocks lists (first_cell, last_cell) positions that start as
    unit-density congestion. forward_parcels are (position, density<u_c)
    free-flow loads; the defaults place one at 1.5 (it merges into the
    second block at t = 0.5) and a pair at 3.9/4.0 that runs off the right
    end. omega is the declared triangular-flux roof; it plays no dynamic
    role here and is stored for completeness.
    """

    length: float = 10.0
    h: float = 0.1
    v_free: float = 3.0
    v_back: float = 1.0
    omega: float = 4.0
    u_c: float = 1.0
    congested_blocks: tuple[tuple[float, float], ...] = ((1.0, 1.2), (3.5, 3.7))
    forward_parcels: tuple[tuple[float, float], ...] = ((1.5, 0.5), (3.9, 0.5), (4.0, 0.5))

    def __post_init__(self):
        if self.v_free <= 0 or self.v_back <= 0 or self.u_c <= 0 or self.h <= 0:
            raise ValueError("speeds, u_c, and h must be positive")

    @property
    def m(self) -> int:
        return int(round(self.length / self.h)) + 1


def traffic_description(cfg: TrafficConfig = TrafficConfig()) -> ModelDescription:
    domain = SpaceDomain(0.0, cfg.length)
    half = 0.5 * cfg.h
    blocks = sorted(cfg.congested_blocks)

    regions: list[RegionDecl] = []
    cursor = 0.0
    for lo, hi in blocks:
        a, b = lo - half, hi + half
        if cursor < a:
            regions.append(RegionDecl(lower=cursor, upper=a, mode="free"))
        regions.append(RegionDecl(lower=a, upper=b, mode="congested"))
        cursor = b
    regions.append(RegionDecl(lower=cursor, upper=cfg.length, mode="free", closed_right=True))

    samples = [0.0] * cfg.m
    for lo, hi in blocks:
        for c in range(int(round(lo / cfg.h)), int(round(hi / cfg.h)) + 1):
            samples[c] = 1.0
    for x, density in cfg.forward_parcels:
        samples[int(round(x / cfg.h))] = density

    return ModelDescription(
        name="traffic",
        domain=domain,
        modes=(
            ModePde(name="free", kind="advection", speed=cfg.v_free),
            ModePde(name="congested", kind="advection", speed=-cfg.v_back),
        ),
        boundary=(OUTFLOW, OUTFLOW),
        regions=tuple(regions),
        init=InitSpec(kind="samples", values=tuple(samples)),
        guards=(
            GuardDecl(mode="free", event="merge:congested", direction="rising",
                      threshold=cfg.u_c, target="congested"),
            GuardDecl(mode="congested", event="leave:congested", direction="falling",
                      threshold=0.5 * cfg.u_c, target="free"),
        ),
        discretization=DiscretizationSpec(m=cfg.m, scheme="characteristic"),
    )


def traffic_model(cfg: TrafficConfig = TrafficConfig()) -> Dspdha:
    """Free/congested wave automaton on a 0.1-spaced grid by default."""
    return discretize_model(traffic_description(cfg), m=cfg.m, scheme="characteristic")


def builtin_description(name: str) -> ModelDescription:
    if name == "heater":
        return heater_description()
    if name == "traffic":
        return traffic_description()
    raise ValueError(f"unknown builtin {name!r}; available: {', '.join(BUILTIN_NAMES)}")
