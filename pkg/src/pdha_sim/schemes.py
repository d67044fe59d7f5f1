"""Finite-difference stencils, exact transport by characteristics, and
reduction of higher-order-in-time equations to first-order systems.

Everything here is a pure function over immutable inputs.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from .errors import StepSizeError, UnsupportedCombinationError
from .mesh import DiscreteDomain, DiscretePartition, DiscreteState, FieldValues

HOP_COMMENSURATE_TOL = 1e-9


@dataclass(frozen=True)
class BoundaryCondition:
    """Ghost-value rule for one domain end.

    kinds:
      dirichlet  ghost holds a fixed value
      mirror     ghost copies the nearest interior value
      outflow    ghost copies the boundary cell (zero gradient); material
                 crossing the end leaves the system
    """

    kind: str
    value: float = 0.0

    def __post_init__(self):
        if self.kind not in ("dirichlet", "mirror", "outflow"):
            raise ValueError(f"unknown boundary condition kind {self.kind!r}")
        if self.kind == "dirichlet" and not np.isfinite(self.value):
            raise ValueError("dirichlet boundary value must be finite")


def dirichlet(value: float) -> BoundaryCondition:
    return BoundaryCondition("dirichlet", float(value))


MIRROR = BoundaryCondition("mirror")
OUTFLOW = BoundaryCondition("outflow")

BcPair = tuple[BoundaryCondition, BoundaryCondition]


@dataclass(frozen=True)
class StencilKind:
    """Spatial scheme selector: 'second_central' or 'first_upwind'."""

    name: str
    direction: str = "auto"  # forward | backward | auto, upwind only

    def __post_init__(self):
        if self.name not in ("second_central", "first_upwind"):
            raise ValueError(f"unknown stencil {self.name!r}")


def _values(u) -> np.ndarray:
    if isinstance(u, FieldValues):
        return u.values
    return np.asarray(u, dtype=float)


def _ghost(bc: BoundaryCondition, nearest: float, allow_outflow: bool) -> float:
    if bc.kind == "dirichlet":
        return bc.value
    if bc.kind == "mirror":
        return nearest
    if allow_outflow:
        return nearest
    raise UnsupportedCombinationError("outflow boundary has no second-difference ghost")


def second_difference(u, h: float, bc: BcPair) -> np.ndarray:
    """Three-point approximation of u_xx with ghost-value boundaries.

    Args:
        u: field values, length m.
        h: grid spacing, > 0.
        bc: (left, right) boundary conditions; dirichlet or mirror only.

    Returns:
        (g[i-1] - 2 u[i] + g[i+1]) / h**2 at every point, where g extends
        u by one ghost value at each end.
    """
    v = _values(u)
    if h <= 0:
        raise ValueError("h must be positive")
    left, right = bc
    g = np.empty(v.size + 2)
    g[1:-1] = v
    g[0] = _ghost(left, v[0], allow_outflow=False)
    g[-1] = _ghost(right, v[-1], allow_outflow=False)
    return (g[:-2] - 2.0 * g[1:-1] + g[2:]) / (h * h)


def upwind_first_difference(u, h: float, speed: float, bc: BcPair) -> np.ndarray:
    """One-sided approximation of u_x, differenced against the wind.

    speed > 0 uses the backward difference (u[i] - g[i-1]) / h, speed < 0
    the forward difference (g[i+1] - u[i]) / h. Outflow ends copy the
    boundary cell into the ghost (zero gradient).
    """
    v = _values(u)
    if h <= 0:
        raise ValueError("h must be positive")
    if speed == 0:
        raise ValueError("upwind differencing needs a nonzero speed")
    left, right = bc
    out = np.empty_like(v)
    if speed > 0:
        ghost = _ghost(left, v[0], allow_outflow=True)
        out[0] = (v[0] - ghost) / h
        out[1:] = (v[1:] - v[:-1]) / h
    else:
        ghost = _ghost(right, v[-1], allow_outflow=True)
        out[-1] = (ghost - v[-1]) / h
        out[:-1] = (v[1:] - v[:-1]) / h
    return out


# ---------------------------------------------------------------------------
# Transport by characteristics


def integer_hops(speed: float, dt: float, h: float) -> int:
    """Number of whole cells a wave at `speed` crosses in dt.

    Raises StepSizeError unless |speed| * dt is an integer multiple of h
    within HOP_COMMENSURATE_TOL * h. Movement is exact on the grid by
    construction; interpolation would smear the waves.
    """
    cells = speed * dt / h
    n = round(cells)
    if abs(cells - n) > HOP_COMMENSURATE_TOL:
        raise StepSizeError(
            f"speed {speed} and dt {dt} move {cells} cells of width {h}; "
            "an integer cell count is required"
        )
    return int(n)


def hop_schedule(
    speed_of_mode: Mapping[int, float], h: float, t_total: float
) -> list[tuple[float, tuple[int, ...]]]:
    """Times at which each mode's waves advance one cell, grouped.

    Returns (time, modes) pairs in increasing time order. Modes due at the
    same instant are ordered by signed speed ascending, so backward waves
    move before forward movers.
    """
    raw: list[tuple[float, int]] = []
    periods = [h / abs(v) for v in speed_of_mode.values() if v != 0.0]
    if not periods or t_total <= 0:
        return []
    tol = HOP_COMMENSURATE_TOL * min(periods)
    for q, v in speed_of_mode.items():
        if v == 0.0:
            continue
        period = h / abs(v)
        n = int(np.floor(t_total / period + HOP_COMMENSURATE_TOL))
        raw.extend((k * period, q) for k in range(1, n + 1))
    raw.sort(key=lambda tq: tq[0])
    grouped: list[tuple[float, tuple[int, ...]]] = []
    i = 0
    while i < len(raw):
        t0 = raw[i][0]
        j = i
        while j < len(raw) and raw[j][0] - t0 <= tol:
            j += 1
        modes = sorted({q for _, q in raw[i:j]}, key=lambda q: speed_of_mode[q])
        grouped.append((t0, tuple(modes)))
        i = j
    return grouped


def resolve_collision_winner(arriving: int, occupant: int, speed_of_mode: Mapping[int, float]) -> int:
    """Mode that owns a cell after two waves meet.

    When exactly one of the two modes travels backward it wins: forward
    traffic merges into the backward wave and moves back with it. In all
    other pairings the cell's occupant wins.
    """
    arr_back = speed_of_mode.get(arriving, 0.0) < 0
    occ_back = speed_of_mode.get(occupant, 0.0) < 0
    if arr_back and not occ_back:
        return arriving
    return occupant


def advance_mode_one_cell(
    u: np.ndarray,
    p: np.ndarray,
    mode: int,
    speed_of_mode: Mapping[int, float],
    default_mode: int,
) -> list[int]:
    """Move every occupied cell of `mode` one cell along its wind, in place.

    Cells leaving the domain are discarded. A parcel arriving at an
    occupied cell deposits its load there (values add); the receiving
    cell's mode follows resolve_collision_winner. Vacated cells revert to
    the default (background) mode.

    Returns the indices where deposits happened (collision merges).
    """
    v = speed_of_mode[mode]
    if v == 0.0:
        return []
    d = 1 if v > 0 else -1
    m = u.size
    cells = np.flatnonzero((p == mode) & (u != 0.0))
    if d > 0:
        cells = cells[::-1]
    merges: list[int] = []
    for c in cells:
        b = c + d
        if b < 0 or b >= m:
            u[c] = 0.0
            if p[c] != default_mode:
                p[c] = default_mode
            continue
        if u[b] == 0.0:
            u[b] = u[c]
            u[c] = 0.0
            if p[b] != mode:
                p[b] = mode
            if p[c] != default_mode:
                p[c] = default_mode
        else:
            winner = resolve_collision_winner(mode, int(p[b]), speed_of_mode)
            u[b] += u[c]
            u[c] = 0.0
            if p[b] != winner:
                p[b] = winner
            if p[c] != default_mode:
                p[c] = default_mode
            merges.append(int(b))
    return merges


def characteristic_shift(
    state: DiscreteState,
    dt: float,
    speed_of_mode: Mapping[int, float],
    mesh: DiscreteDomain,
    merge_rule: str = "deposit_left_edge",
) -> DiscreteState:
    """Translate every occupied cell along its mode's characteristic.

    Each mode's wave moves round(speed * dt / h) whole cells; dt must be
    commensurate with every speed. Collisions deposit the arriving load
    onto the receiving block edge (values add, cell count preserved);
    material crossing either domain end is discarded.

    Args:
        state: partition and field to advance.
        dt: elapsed time, >= 0.
        speed_of_mode: signed speed per mode id (domain units per time).
        mesh: grid the state lives on.
        merge_rule: collision convention; only 'deposit_left_edge' exists.

    Returns:
        The advanced DiscreteState; dt = 0 returns an identical state.
    """
    if merge_rule != "deposit_left_edge":
        raise ValueError(f"unknown merge rule {merge_rule!r}")
    if dt < 0:
        raise ValueError("dt must be non-negative")
    if state.m != mesh.m:
        raise ValueError("state and mesh sizes differ")
    for q, v in speed_of_mode.items():
        integer_hops(v, dt, mesh.spacing)
    u = state.field.values.copy()
    p = state.partition.modes.copy()
    if dt == 0:
        return DiscreteState(DiscretePartition(p), FieldValues(u))
    default_mode = min(speed_of_mode) if 0 not in speed_of_mode else 0
    for _, modes in hop_schedule(speed_of_mode, mesh.spacing, dt):
        for q in modes:
            advance_mode_one_cell(u, p, q, speed_of_mode, default_mode)
    return DiscreteState(DiscretePartition(p), FieldValues(u))


# ---------------------------------------------------------------------------
# Order reduction of higher-order-in-time equations


@dataclass(frozen=True)
class FirstOrderSystem:
    """A chain u' = v1, v1' = v2, ..., v_{n-1}' = f(u, u_x, u_xx, t).

    `rhs` is the original right-hand side, called as f(u, u_x, u_xx, t)
    with per-point arrays. Order 1 keeps the single equation as-is.
    """

    order: int
    rhs: Callable[..., np.ndarray]
    equations: tuple[str, ...]

    @property
    def chain_flags(self) -> tuple[bool, ...]:
        """True for the pure bookkeeping equations v_k' = v_{k+1}."""
        return tuple(i < self.order - 1 for i in range(self.order))


def order_reduce(n: int, rhs: Callable[..., np.ndarray]) -> FirstOrderSystem:
    """Rewrite an order-n-in-time equation as n first-order equations.

    Args:
        n: order of the highest time derivative, >= 1.
        rhs: f in u^(n) = f(u, u_x, u_xx, t).
    """
    if n < 1:
        raise ValueError(f"time-derivative order must be >= 1, got {n}")
    if n == 1:
        return FirstOrderSystem(order=1, rhs=rhs, equations=("du/dt = f(u, u_x, u_xx, t)",))
    eqs = ["du/dt = v1"]
    eqs += [f"dv{k}/dt = v{k + 1}" for k in range(1, n - 1)]
    eqs.append(f"dv{n - 1}/dt = f(u, u_x, u_xx, t)")
    return FirstOrderSystem(order=n, rhs=rhs, equations=tuple(eqs))


@dataclass(frozen=True)
class SemiDiscreteSystem:
    """A first-order system sampled on a grid: one scalar ODE per
    (equation, grid point) pair, n*m in total."""

    size: int
    blocks: int
    m: int
    rhs: Callable[[np.ndarray, float], np.ndarray]


def semi_discretize(system: FirstOrderSystem, mesh: DiscreteDomain, bc: BcPair) -> SemiDiscreteSystem:
    """Sample a FirstOrderSystem on a mesh.

    The stacked state holds n blocks of m values: (u, v1, ..., v_{n-1}).
    Spatial derivatives of u use the central stencils with the given
    boundary conditions.
    """
    n, m, h = system.order, mesh.m, mesh.spacing

    def rhs(y: np.ndarray, t: float) -> np.ndarray:
        if y.size != n * m:
            raise ValueError(f"expected stacked state of size {n * m}, got {y.size}")
        blocks = y.reshape(n, m)
        u = blocks[0]
        g = np.empty(m + 2)
        g[1:-1] = u
        g[0] = _ghost(bc[0], u[0], allow_outflow=False)
        g[-1] = _ghost(bc[1], u[-1], allow_outflow=False)
        u_x = (g[2:] - g[:-2]) / (2 * h)
        u_xx = (g[:-2] - 2.0 * g[1:-1] + g[2:]) / (h * h)
        out = np.empty_like(blocks)
        out[:-1] = blocks[1:]
        out[-1] = system.rhs(u, u_x, u_xx, t)
        return out.reshape(-1)

    return SemiDiscreteSystem(size=n * m, blocks=n, m=m, rhs=rhs)
