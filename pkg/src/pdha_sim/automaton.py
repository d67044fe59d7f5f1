"""The automaton tuple: per-mode flows, guards, transitions, resets, and
invariants over a discrete grid, plus discretization of a declarative
continuous model into a runnable automaton.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

import numpy as np

from .errors import ValidationError
from .mesh import (
    DiscreteDomain,
    DiscretePartition,
    DiscreteState,
    DiscretizationRecord,
    FieldValues,
    Region,
    SpaceDomain,
    discretize_domain,
    partition_from_regions,
)
from .schemes import (
    BcPair,
    BoundaryCondition,
    StencilKind,
    second_difference,
    upwind_first_difference,
)

_EXPR_NAMES = {
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "tanh": np.tanh,
    "cosh": np.cosh,
    "sinh": np.sinh,
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
    "abs": np.abs,
    "minimum": np.minimum,
    "maximum": np.maximum,
    "where": np.where,
    "pi": math.pi,
    "e": math.e,
}


@dataclass(frozen=True)
class SourceTerm:
    """Per-point forcing f(x, t) added to a mode's right-hand side.

    kinds: zero | affine (slope*x + intercept) | tabulated (one value per
    grid point) | expression (formula over x and t) | callable.
    """

    kind: str = "zero"
    slope: float = 0.0
    intercept: float = 0.0
    values: tuple[float, ...] | None = None
    formula: str | None = None
    func: Optional[Callable[[np.ndarray, float], np.ndarray]] = None

    def __post_init__(self):
        if self.kind not in ("zero", "affine", "tabulated", "expression", "callable"):
            raise ValueError(f"unknown source kind {self.kind!r}")
        if self.kind == "tabulated" and not self.values:
            raise ValueError("tabulated source needs values")
        if self.kind == "expression" and not self.formula:
            raise ValueError("expression source needs a formula")
        if self.kind == "callable" and self.func is None:
            raise ValueError("callable source needs a function")

    def evaluate(self, x: np.ndarray, t: float) -> np.ndarray:
        if self.kind == "zero":
            return np.zeros_like(x)
        if self.kind == "affine":
            return self.slope * x + self.intercept
        if self.kind == "tabulated":
            vals = np.asarray(self.values, dtype=float)
            if vals.size != x.size:
                raise ValueError(f"tabulated source has {vals.size} values for {x.size} points")
            return vals
        if self.kind == "expression":
            ns = dict(_EXPR_NAMES)
            ns["x"] = x
            ns["t"] = t
            out = eval(self.formula, {"__builtins__": {}}, ns)  # noqa: S307 - names restricted above
            return np.broadcast_to(np.asarray(out, dtype=float), x.shape).copy()
        return np.asarray(self.func(x, t), dtype=float)


ZERO_SOURCE = SourceTerm()


def affine_source(slope: float, intercept: float) -> SourceTerm:
    return SourceTerm(kind="affine", slope=slope, intercept=intercept)


@dataclass(frozen=True)
class FlowSpec:
    """Right-hand side of one mode: diffusion or advection plus forcing.

    diffusion:  du/dt = alpha * u_xx + source
    advection:  du/dt = -speed * u_x + source   (u_t + speed u_x = source)
    """

    kind: str
    alpha: float = 0.0
    speed: float = 0.0
    source: SourceTerm = ZERO_SOURCE
    bc: BcPair = (BoundaryCondition("mirror"), BoundaryCondition("mirror"))

    def __post_init__(self):
        if self.kind not in ("diffusion", "advection"):
            raise ValueError(f"unknown flow kind {self.kind!r}")
        if self.kind == "diffusion" and (self.alpha < 0 or not np.isfinite(self.alpha)):
            raise ValueError("diffusion coefficient must be finite and >= 0")
        if self.kind == "advection" and (self.speed == 0 or not np.isfinite(self.speed)):
            raise ValueError("advection speed must be finite and nonzero")


@dataclass(frozen=True)
class Guard:
    """Pointwise threshold test attached to one source mode."""

    event: str
    direction: str  # rising: u >= threshold, falling: u <= threshold
    threshold: float
    target: int

    def __post_init__(self):
        if self.direction not in ("rising", "falling"):
            raise ValueError(f"unknown guard direction {self.direction!r}")

    def satisfied(self, value: float) -> bool:
        if self.direction == "rising":
            return value >= self.threshold
        return value <= self.threshold


@dataclass(frozen=True)
class Event:
    """A named event together with the grid indices it fires at."""

    name: str
    indices: tuple[int, ...]


@dataclass(frozen=True)
class ResetRule:
    """Rewrite applied to field values at a transition."""

    kind: str = "identity"  # identity | set_to | clamp_to_threshold
    value: float = float("nan")

    def __post_init__(self):
        if self.kind not in ("identity", "set_to", "clamp_to_threshold"):
            raise ValueError(f"unknown reset kind {self.kind!r}")
        if self.kind == "set_to" and not np.isfinite(self.value):
            raise ValueError("set_to reset needs a finite value")


IDENTITY_RESET = ResetRule()


class InvariantViolation(NamedTuple):
    index: int
    mode: int
    value: float
    box: tuple[float, float]


@dataclass(frozen=True, eq=False)
class Dspdha:
    """A runnable grid automaton.

    Immutable once validated; concurrent simulations may share one
    instance. Mode ids index `mode_names`, `flows`, `guards`, and
    `invariants`. `event_targets` realizes the transition function: firing
    an event rewrites the modes at its payload indices to one target mode.
    """

    mode_names: tuple[str, ...]
    events: tuple[str, ...]
    mesh: DiscreteDomain
    flows: tuple[FlowSpec, ...]
    guards: tuple[tuple[Guard, ...], ...]
    resets: tuple[tuple[str, ResetRule], ...]
    invariants: tuple[Optional[tuple[float, float]], ...]
    init: DiscreteState
    record: DiscretizationRecord
    extra_event_targets: tuple[tuple[str, int], ...] = ()

    def __post_init__(self):
        n = len(self.mode_names)
        if len(self.flows) != n or len(self.guards) != n or len(self.invariants) != n:
            raise ValueError("flows, guards, and invariants must have one entry per mode")
        targets: dict[str, int] = {}
        guard_by_event: dict[str, Guard] = {}
        for per_mode in self.guards:
            for g in per_mode:
                targets[g.event] = g.target
                guard_by_event[g.event] = g
        for name, target in self.extra_event_targets:
            targets.setdefault(name, target)
        object.__setattr__(self, "_event_targets", targets)
        object.__setattr__(self, "_guard_by_event", guard_by_event)
        object.__setattr__(self, "_resets", dict(self.resets))

    @property
    def n_modes(self) -> int:
        return len(self.mode_names)

    @property
    def m(self) -> int:
        return self.mesh.m

    @property
    def event_targets(self) -> dict[str, int]:
        return dict(self._event_targets)

    def guard_for_event(self, name: str) -> Optional[Guard]:
        return self._guard_by_event.get(name)

    def reset_for_event(self, name: str) -> ResetRule:
        return self._resets.get(name, IDENTITY_RESET)

    def mode_id(self, name: str) -> int:
        return self.mode_names.index(name)


# ---------------------------------------------------------------------------
# Declarative model descriptions (the continuous object that gets discretized)


@dataclass(frozen=True)
class ModePde:
    """One mode's continuous dynamics, before discretization."""

    name: str
    kind: str  # diffusion | advection
    alpha: float = 0.0
    speed: float = 0.0
    source: SourceTerm = ZERO_SOURCE
    invariant: tuple[float, float] | None = None


@dataclass(frozen=True)
class RegionDecl:
    """A declarative region keyed by mode name."""

    lower: float
    upper: float
    mode: str
    closed_left: bool = True
    closed_right: bool = False


@dataclass(frozen=True)
class GuardDecl:
    mode: str
    event: str
    direction: str
    threshold: float
    target: str


@dataclass(frozen=True)
class ResetDecl:
    event: str
    kind: str = "identity"
    value: float = float("nan")


@dataclass(frozen=True)
class InitSpec:
    """Initial field: a constant, per-point samples, a formula over x, or
    a callable of the grid positions."""

    kind: str
    value: float = 0.0
    values: tuple[float, ...] | None = None
    formula: str | None = None
    func: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        if self.kind not in ("constant", "samples", "expression", "callable"):
            raise ValueError(f"unknown init kind {self.kind!r}")

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        if self.kind == "constant":
            return np.full(points.size, float(self.value))
        if self.kind == "samples":
            vals = np.asarray(self.values, dtype=float)
            if vals.size != points.size:
                raise ValueError(
                    f"init samples have {vals.size} entries for {points.size} unknowns"
                )
            return vals.copy()
        if self.kind == "expression":
            ns = dict(_EXPR_NAMES)
            ns["x"] = points
            out = eval(self.formula, {"__builtins__": {}}, ns)  # noqa: S307
            return np.broadcast_to(np.asarray(out, dtype=float), points.shape).copy()
        return np.asarray(self.func(points), dtype=float)


@dataclass(frozen=True)
class DiscretizationSpec:
    """Preferred grid resolution and scheme carried by a model file."""

    m: int | None = None
    h: float | None = None
    scheme: str | None = None


@dataclass(frozen=True)
class ModelDescription:
    """Continuous model: domain, mode PDEs, region partition, guards."""

    name: str
    domain: SpaceDomain
    modes: tuple[ModePde, ...]
    boundary: BcPair
    regions: tuple[RegionDecl, ...]
    init: InitSpec
    guards: tuple[GuardDecl, ...] = ()
    resets: tuple[ResetDecl, ...] = ()
    discretization: DiscretizationSpec | None = None


def _derive_scheme_name(modes: tuple[ModePde, ...]) -> str:
    kinds = {mp.kind for mp in modes}
    if kinds == {"diffusion"}:
        return "second_central"
    if kinds == {"advection"}:
        return "first_upwind"
    return "second_central+first_upwind"


def discretize_model(
    model: ModelDescription,
    m: int,
    scheme: str | StencilKind | None = None,
) -> Dspdha:
    """Turn a continuous ModelDescription into a runnable automaton.

    Places m equally spaced points across the domain. Ends held by
    dirichlet boundaries are excluded from the unknowns (they persist as
    ghost values), so the state dimension may be m-1 or m-2.

    Args:
        model: the declarative description.
        m: grid points across the full domain, >= 2.
        scheme: recorded scheme name; derived from the mode kinds when
            omitted. Pass "characteristic" for exact transport models.

    Returns:
        A validated Dspdha carrying a DiscretizationRecord.
    """
    if m < 2:
        raise ValueError(f"need at least 2 grid points, got m={m}")
    full = discretize_domain(model.domain, m)
    left, right = model.boundary
    lo = 1 if left.kind == "dirichlet" else 0
    hi = full.m - 1 if right.kind == "dirichlet" else full.m
    state_points = full.points[lo:hi]
    if state_points.size < 2:
        raise ValueError(f"m={m} leaves fewer than 2 unknowns after boundary points")
    mesh = DiscreteDomain(points=state_points, spacing=full.spacing, domain=model.domain)

    mode_index = {mp.name: i for i, mp in enumerate(model.modes)}
    unknown = sorted(
        {r.mode for r in model.regions if r.mode not in mode_index}
        | {g.mode for g in model.guards if g.mode not in mode_index}
        | {g.target for g in model.guards if g.target not in mode_index}
    )
    if unknown:
        raise ValueError(f"undeclared mode names referenced: {', '.join(unknown)}")

    regions = tuple(
        Region(
            lower=r.lower,
            upper=r.upper,
            mode=mode_index[r.mode],
            closed_left=r.closed_left,
            closed_right=r.closed_right,
        )
        for r in model.regions
    )
    partition = partition_from_regions(regions, mesh)
    init_values = model.init.evaluate(mesh.points)
    init = DiscreteState(partition, FieldValues(init_values))

    flows = tuple(
        FlowSpec(
            kind=mp.kind,
            alpha=mp.alpha,
            speed=mp.speed,
            source=mp.source,
            bc=model.boundary,
        )
        for mp in model.modes
    )

    guards: list[list[Guard]] = [[] for _ in model.modes]
    events: list[str] = []
    for g in model.guards:
        guards[mode_index[g.mode]].append(
            Guard(
                event=g.event,
                direction=g.direction,
                threshold=g.threshold,
                target=mode_index[g.target],
            )
        )
        if g.event not in events:
            events.append(g.event)

    # Advection modes can flip partitions through wave motion alone, so
    # their footprint changes get first-class events the transition
    # function understands.
    extra: list[tuple[str, int]] = []
    for q, mp in enumerate(model.modes):
        if mp.kind == "advection" and q != 0:
            for name, target in (
                (f"enter:{mp.name}", q),
                (f"leave:{mp.name}", 0),
                (f"merge:{mp.name}", q),
            ):
                if name not in events:
                    events.append(name)
                extra.append((name, target))

    resets = tuple((r.event, ResetRule(kind=r.kind, value=r.value)) for r in model.resets)
    invariants = tuple(mp.invariant for mp in model.modes)

    if isinstance(scheme, StencilKind):
        scheme_name = scheme.name
    else:
        scheme_name = scheme or _derive_scheme_name(model.modes)
    record = DiscretizationRecord(
        scheme_name=scheme_name, h=mesh.spacing, m=mesh.m, source_model=model.name
    )

    a = Dspdha(
        mode_names=tuple(mp.name for mp in model.modes),
        events=tuple(events),
        mesh=mesh,
        flows=flows,
        guards=tuple(tuple(gs) for gs in guards),
        resets=resets,
        invariants=invariants,
        init=init,
        record=record,
        extra_event_targets=tuple(extra),
    )
    report = validate(a)
    if report:
        raise ValidationError(report)
    return a


# ---------------------------------------------------------------------------
# Operations on a Dspdha


def build_rhs(a: Dspdha, s: DiscreteState, t: float) -> np.ndarray:
    """Assemble du/dt, selecting each point's stencil by its mode.

    Stencil neighbors always read the shared field, also across mode
    boundaries; ghost values apply at the domain ends only.
    """
    if s.m != a.m:
        raise ValueError(f"state has {s.m} points, automaton has {a.m}")
    u = s.field.values
    p = s.partition.modes
    x = a.mesh.points
    h = a.mesh.spacing
    out = np.empty(a.m)
    for q, flow in enumerate(a.flows):
        sel = p == q
        if not sel.any():
            continue
        if flow.kind == "diffusion":
            vals = flow.alpha * second_difference(u, h, flow.bc)
        else:
            vals = -flow.speed * upwind_first_difference(u, h, flow.speed, flow.bc)
        src = flow.source.evaluate(x, t)
        out[sel] = vals[sel] + src[sel]
    return out


def eval_guards(a: Dspdha, s: DiscreteState) -> list[tuple[str, int]]:
    """All (event, index) pairs whose guard holds at the current state.

    Each point is tested only against the guards attached to its own mode,
    which is what makes hysteresis bands chatter-free.
    """
    hits: list[tuple[str, int]] = []
    u = s.field.values
    p = s.partition.modes
    for i in range(s.m):
        for g in a.guards[p[i]]:
            if g.satisfied(float(u[i])):
                hits.append((g.event, i))
    return hits


def apply_transition(a: Dspdha, s: DiscreteState, e: Event) -> DiscretePartition:
    """Rewrite the modes at the event's indices to the event's target.

    Events outside the automaton's alphabet leave the partition unchanged.
    """
    for i in e.indices:
        if i < 0 or i >= s.m:
            raise ValueError(f"event index {i} outside grid of {s.m} points")
    target = a._event_targets.get(e.name)
    if target is None or not e.indices:
        return s.partition
    modes = s.partition.modes.copy()
    modes[list(e.indices)] = target
    return DiscretePartition(modes)


def apply_reset(a: Dspdha, s: DiscreteState, e: Event) -> FieldValues:
    """Rewrite field values at the event's indices per the reset rule."""
    for i in e.indices:
        if i < 0 or i >= s.m:
            raise ValueError(f"event index {i} outside grid of {s.m} points")
    rule = a.reset_for_event(e.name)
    if rule.kind == "identity" or not e.indices:
        return s.field
    values = s.field.values.copy()
    idx = list(e.indices)
    if rule.kind == "set_to":
        values[idx] = rule.value
    else:  # clamp_to_threshold
        guard = a.guard_for_event(e.name)
        if guard is None:
            return s.field
        if guard.direction == "rising":
            values[idx] = np.minimum(values[idx], guard.threshold)
        else:
            values[idx] = np.maximum(values[idx], guard.threshold)
    return FieldValues(values)


def check_invariants(a: Dspdha, s: DiscreteState) -> list[InvariantViolation]:
    """Points whose value lies outside their mode's box, when declared."""
    out: list[InvariantViolation] = []
    u = s.field.values
    p = s.partition.modes
    for i in range(s.m):
        box = a.invariants[p[i]]
        if box is None:
            continue
        lo, hi = box
        if not (lo <= u[i] <= hi):
            out.append(InvariantViolation(index=i, mode=int(p[i]), value=float(u[i]), box=box))
    return out


def validate(a: Dspdha) -> list[str]:
    """Structural validation report; empty means the automaton is sound."""
    problems: list[str] = []
    n = a.n_modes
    if n == 0:
        problems.append("no modes declared")
    if len(set(a.mode_names)) != n:
        problems.append("duplicate mode names")
    if a.init.m != a.m:
        problems.append(f"init has {a.init.m} points but mesh has {a.m}")
    if (a.init.partition.modes >= n).any():
        problems.append("init partition references undeclared modes")
    seen_pairs: set[tuple[int, str]] = set()
    for q, per_mode in enumerate(a.guards):
        for g in per_mode:
            where = f"guard {g.event!r} on mode {a.mode_names[q]!r}"
            if g.target < 0 or g.target >= n:
                problems.append(f"{where}: target mode id {g.target} undeclared")
            if g.target == q:
                problems.append(f"{where}: source and target mode coincide")
            if g.event not in a.events:
                problems.append(f"{where}: event not in the event alphabet")
            if not np.isfinite(g.threshold):
                problems.append(f"{where}: threshold not finite")
            if (q, g.event) in seen_pairs:
                problems.append(f"{where}: duplicate (mode, event) pair")
            seen_pairs.add((q, g.event))
    for name, target in a.extra_event_targets:
        if name not in a.events:
            problems.append(f"transition event {name!r} not in the event alphabet")
        if target < 0 or target >= n:
            problems.append(f"transition event {name!r} targets undeclared mode id {target}")
    for name, _ in a.resets:
        if name not in a.events:
            problems.append(f"reset for unknown event {name!r}")
    for q, box in enumerate(a.invariants):
        if box is not None and box[0] > box[1]:
            problems.append(f"mode {a.mode_names[q]!r} invariant box is reversed")
    if a.record.m != a.m:
        problems.append(f"record says m={a.record.m} but mesh has {a.m} points")
    if a.record.h != a.mesh.spacing:
        problems.append("record spacing disagrees with the mesh")
    if not problems:
        for v in check_invariants(a, a.init):
            problems.append(
                f"init violates mode {a.mode_names[v.mode]!r} invariant at index {v.index}: "
                f"value {v.value} outside {v.box}"
            )
    return problems
