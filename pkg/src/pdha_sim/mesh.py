"""Spatial domain, uniform 1-D meshes, and per-point mode partitions.

All types here are immutable after construction (frozen dataclasses with
read-only numpy buffers), so they can be shared freely across concurrent
simulation runs.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import PartitionError

UNIFORMITY_RTOL = 1e-12


def _frozen_array(values, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class SpaceDomain:
    """Closed 1-D interval [lower, upper] the automaton lives on."""

    lower: float
    upper: float

    def __post_init__(self):
        if not np.isfinite(self.lower) or not np.isfinite(self.upper):
            raise ValueError("domain bounds must be finite")
        if not self.upper > self.lower:
            raise ValueError(f"domain upper bound {self.upper} must exceed lower bound {self.lower}")

    @property
    def length(self) -> float:
        return self.upper - self.lower

    def contains(self, x: float, tol: float = 0.0) -> bool:
        return self.lower - tol <= x <= self.upper + tol


@dataclass(frozen=True, eq=False)
class DiscreteDomain:
    """Uniformly spaced grid points inside a SpaceDomain.

    The points need not touch the domain ends: a model with fixed-value
    boundaries keeps only the interior unknowns here while the ends live
    on as ghost values.
    """

    points: np.ndarray
    spacing: float
    domain: SpaceDomain

    def __post_init__(self):
        pts = _frozen_array(self.points, float)
        object.__setattr__(self, "points", pts)
        if pts.ndim != 1 or pts.size < 2:
            raise ValueError("a discrete domain needs at least 2 points")
        if self.spacing <= 0:
            raise ValueError("grid spacing must be positive")
        diffs = np.diff(pts)
        if not (diffs > 0).all():
            raise ValueError("grid points must be strictly increasing")
        if np.abs(diffs - self.spacing).max() > UNIFORMITY_RTOL * self.spacing:
            raise ValueError("grid points must be uniformly spaced")
        slack = UNIFORMITY_RTOL * max(1.0, abs(self.domain.lower), abs(self.domain.upper))
        if pts[0] < self.domain.lower - slack or pts[-1] > self.domain.upper + slack:
            raise ValueError("grid points must lie inside the domain")

    @property
    def m(self) -> int:
        return int(self.points.size)

    def index_of(self, x: float) -> int:
        """Index of the grid point at position x (within half a cell)."""
        i = int(round((x - self.points[0]) / self.spacing))
        if i < 0 or i >= self.m or abs(self.points[i] - x) > 0.5 * self.spacing:
            raise ValueError(f"no grid point at x={x}")
        return i

    def __eq__(self, other):
        if not isinstance(other, DiscreteDomain):
            return NotImplemented
        return (
            self.domain == other.domain
            and self.spacing == other.spacing
            and np.array_equal(self.points, other.points)
        )


def discretize_domain(domain: SpaceDomain, m: int) -> DiscreteDomain:
    """Place m equally spaced points across the domain, ends included.

    Args:
        domain: interval to discretize.
        m: number of grid points, at least 2.

    Returns:
        DiscreteDomain with x_1 = lower, x_m = upper and spacing
        (upper - lower) / (m - 1).
    """
    if m < 2:
        raise ValueError(f"need at least 2 grid points, got m={m}")
    pts = np.linspace(domain.lower, domain.upper, m)
    h = (domain.upper - domain.lower) / (m - 1)
    return DiscreteDomain(points=pts, spacing=h, domain=domain)


@dataclass(frozen=True, eq=False)
class DiscretePartition:
    """One mode id per grid point."""

    modes: np.ndarray

    def __post_init__(self):
        arr = _frozen_array(self.modes, np.int64)
        if arr.ndim != 1 or arr.size < 1:
            raise ValueError("partition must be a non-empty 1-D vector of mode ids")
        if (arr < 0).any():
            raise ValueError("mode ids must be non-negative")
        object.__setattr__(self, "modes", arr)

    @property
    def m(self) -> int:
        return int(self.modes.size)

    def as_tuple(self) -> tuple[int, ...]:
        return tuple(int(q) for q in self.modes)

    def __eq__(self, other):
        if not isinstance(other, DiscretePartition):
            return NotImplemented
        return np.array_equal(self.modes, other.modes)


@dataclass(frozen=True, eq=False)
class FieldValues:
    """One real field value per grid point (temperature, density, ...)."""

    values: np.ndarray

    def __post_init__(self):
        arr = _frozen_array(self.values, float)
        if arr.ndim != 1 or arr.size < 1:
            raise ValueError("field must be a non-empty 1-D vector")
        if not np.isfinite(arr).all():
            raise ValueError("field values must be finite")
        object.__setattr__(self, "values", arr)

    @property
    def m(self) -> int:
        return int(self.values.size)

    def __eq__(self, other):
        if not isinstance(other, FieldValues):
            return NotImplemented
        return np.array_equal(self.values, other.values)


@dataclass(frozen=True)
class DiscreteState:
    """Mode vector plus field vector: the unit of simulation state."""

    partition: DiscretePartition
    field: FieldValues

    def __post_init__(self):
        if self.partition.m != self.field.m:
            raise ValueError(
                f"partition has {self.partition.m} entries but field has {self.field.m}"
            )

    @property
    def m(self) -> int:
        return self.partition.m


def make_state(modes: Iterable[int], values: Iterable[float]) -> DiscreteState:
    return DiscreteState(DiscretePartition(np.asarray(modes)), FieldValues(np.asarray(values)))


@dataclass(frozen=True)
class DiscretizationRecord:
    """Audit trail: which scheme produced a grid automaton from which model."""

    scheme_name: str
    h: float
    m: int
    source_model: str


@dataclass(frozen=True)
class Region:
    """An interval with per-end open/closed flags, mapped to one mode."""

    lower: float
    upper: float
    mode: int
    closed_left: bool = True
    closed_right: bool = False

    def __post_init__(self):
        if self.lower > self.upper:
            raise ValueError(f"region [{self.lower}, {self.upper}] is reversed")
        if self.lower == self.upper and not (self.closed_left and self.closed_right):
            raise ValueError("a degenerate region must be closed on both ends")

    def contains(self, x: float) -> bool:
        if x < self.lower or x > self.upper:
            return False
        if x == self.lower and not self.closed_left:
            return False
        if x == self.upper and not self.closed_right:
            return False
        return True


RegionSpec = Sequence[Region]


def validate_regions(regions: RegionSpec, domain: SpaceDomain) -> list[str]:
    """Check that the regions are nonempty, pairwise disjoint, and cover
    the domain exactly. Returns a list of problems, empty when valid."""
    problems: list[str] = []
    if not regions:
        return ["no regions declared"]
    ordered = sorted(regions, key=lambda r: (r.lower, r.upper))
    first, last = ordered[0], ordered[-1]
    if first.lower != domain.lower or not first.closed_left:
        problems.append(f"domain lower bound {domain.lower} is not covered")
    if last.upper != domain.upper or not last.closed_right:
        problems.append(f"domain upper bound {domain.upper} is not covered")
    for a, b in zip(ordered, ordered[1:]):
        if a.upper != b.lower:
            if a.upper > b.lower:
                problems.append(f"regions overlap between x={b.lower} and x={min(a.upper, b.upper)}")
            else:
                problems.append(f"gap between x={a.upper} and x={b.lower}")
        elif a.closed_right and b.closed_left:
            problems.append(f"boundary point x={a.upper} belongs to two regions")
        elif not a.closed_right and not b.closed_left:
            problems.append(f"boundary point x={a.upper} belongs to no region")
    return problems


def partition_from_regions(regions: RegionSpec, mesh: DiscreteDomain) -> DiscretePartition:
    """Assign each grid point the mode of the unique region containing it.

    Raises:
        PartitionError: some grid point is uncovered or doubly covered.
    """
    modes = np.empty(mesh.m, dtype=np.int64)
    bad: list[str] = []
    for i, x in enumerate(mesh.points):
        hits = [r.mode for r in regions if r.contains(float(x))]
        if len(hits) == 1:
            modes[i] = hits[0]
        else:
            bad.append(f"grid point x={x} covered by {len(hits)} regions")
    if bad:
        raise PartitionError("; ".join(bad))
    return DiscretePartition(modes)


def regions_from_partition(p: DiscretePartition, mesh: DiscreteDomain) -> tuple[Region, ...]:
    """Group maximal runs of equal mode into half-open cells.

    Interior boundaries sit halfway between adjacent grid points; the
    two outermost edges are clipped to the domain, the last one closed so
    the upper bound stays covered. This is a reporting convention only and
    never feeds back into dynamics.
    """
    if p.m != mesh.m:
        raise ValueError(f"partition has {p.m} entries for a mesh of {mesh.m} points")
    half = 0.5 * mesh.spacing
    runs: list[tuple[int, int]] = []  # (start index, end index) inclusive
    start = 0
    for i in range(1, p.m):
        if p.modes[i] != p.modes[start]:
            runs.append((start, i - 1))
            start = i
    runs.append((start, p.m - 1))

    out: list[Region] = []
    for k, (i, j) in enumerate(runs):
        lo = mesh.domain.lower if k == 0 else float(mesh.points[i] - half)
        is_last = k == len(runs) - 1
        hi = mesh.domain.upper if is_last else float(mesh.points[j] + half)
        out.append(
            Region(
                lower=lo,
                upper=hi,
                mode=int(p.modes[i]),
                closed_left=True,
                closed_right=is_last,
            )
        )
    return tuple(out)
