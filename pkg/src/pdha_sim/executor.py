"""Hybrid execution semantics: continuous integration with event
localization, discrete transitions, hybrid time trajectories, Zeno and
reachability bookkeeping, and structural sufficiency checks.

A single run owns its working arrays; multiple runs may share one
immutable automaton.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .automaton import (
    Dspdha,
    Event,
    Guard,
    apply_reset,
    apply_transition,
    build_rhs,
    eval_guards,
    validate,
)
from .errors import DivergenceError, StepSizeError, UnsupportedCombinationError, ValidationError
from .mesh import DiscretePartition, DiscreteState, FieldValues
from .schemes import advance_mode_one_cell, hop_schedule, integer_hops

INTEGRATORS = ("euler", "rk4", "characteristic")


@dataclass(frozen=True)
class SimOptions:
    """Run controls for simulate().

    dt is the accepted step for euler/rk4; for the characteristic backend
    it only has to be commensurate with every wave speed. Transition
    times are localized to within event_tolerance. A run is flagged as a
    Zeno suspect when zeno_count consecutive transitions fit inside
    zeno_window.
    """

    dt: float
    t_end: float
    integrator: str = "euler"
    event_tolerance: float = 1e-9
    zeno_window: float = 1e-6
    zeno_count: int = 1000
    max_transitions: int = 100_000
    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.t_end < 0:
            raise ValueError("t_end must be non-negative")
        if self.integrator not in INTEGRATORS:
            raise ValueError(f"unknown integrator {self.integrator!r}")
        if self.event_tolerance <= 0 or self.zeno_window <= 0 or self.zeno_count < 2:
            raise ValueError("tolerances must be positive and zeno_count >= 2")


@dataclass(frozen=True)
class HybridTimeTrajectory:
    """The interval skeleton [tau_i, tau_i'] of an execution."""

    intervals: tuple[tuple[float, float], ...]
    last_closed: bool

    def __post_init__(self):
        for t0, t1 in self.intervals:
            if t1 < t0:
                raise ValueError("interval end precedes start")
        for (_, a1), (b0, _) in zip(self.intervals, self.intervals[1:]):
            if a1 != b0:
                raise ValueError("interval boundaries must chain")


@dataclass(frozen=True, eq=False)
class IntervalRecord:
    """One continuous-evolution interval: constant partition, sampled field."""

    t_start: float
    t_end: float
    partition: DiscretePartition
    times: np.ndarray
    values: np.ndarray  # (len(times), m)
    closing_event: Optional[Event]


@dataclass(frozen=True, eq=False)
class Execution:
    """A hybrid trajectory with per-interval state history."""

    intervals: tuple[IntervalRecord, ...]
    last_closed: bool
    truncation: str  # horizon | max_transitions | zeno

    @property
    def trajectory(self) -> HybridTimeTrajectory:
        return HybridTimeTrajectory(
            intervals=tuple((iv.t_start, iv.t_end) for iv in self.intervals),
            last_closed=self.last_closed,
        )

    @property
    def transition_times(self) -> list[float]:
        return [iv.t_end for iv in self.intervals if iv.closing_event is not None]

    @property
    def transition_events(self) -> list[tuple[float, Event]]:
        return [(iv.t_end, iv.closing_event) for iv in self.intervals if iv.closing_event is not None]

    @property
    def transition_count(self) -> int:
        return len(self.transition_times)

    @property
    def final_state(self) -> DiscreteState:
        last = self.intervals[-1]
        return DiscreteState(last.partition, FieldValues(last.values[-1]))

    @property
    def t_final(self) -> float:
        return self.intervals[-1].t_end


@dataclass(frozen=True)
class ExecutionClass:
    """finite | infinite | zeno_suspect, with an accumulation estimate."""

    kind: str
    tau_infinity: Optional[float] = None


@dataclass(frozen=True)
class ReachRecord:
    """Distinct partitions visited plus the final state; an
    under-approximation of the reachable set by recorded samples."""

    partitions: tuple[tuple[int, ...], ...]
    final_partition: tuple[int, ...]
    final_field: tuple[float, ...]
    samples: tuple[tuple[tuple[int, ...], tuple[float, ...]], ...] | None = None

    @property
    def partition_count(self) -> int:
        return len(self.partitions)


@dataclass(frozen=True)
class StructuralReport:
    deterministic_sufficient: bool
    nonblocking_sufficient: bool
    notes: tuple[str, ...]


# ---------------------------------------------------------------------------
# Single-step integration and event localization

RhsFn = Callable[[DiscreteState, float], np.ndarray]


def integrate_step(rhs: RhsFn, s: DiscreteState, t: float, dt: float, integrator: str) -> FieldValues:
    """Advance the field one step; the partition stays fixed.

    euler: u + dt * f(u, t). rk4: the classical four-stage update. The
    caller is responsible for any stability bound on dt (see check_cfl).
    """
    u = s.field.values
    p = s.partition

    def f(vals: np.ndarray, tt: float) -> np.ndarray:
        if not np.isfinite(vals).all():
            bad = int(np.flatnonzero(~np.isfinite(vals))[0])
            raise DivergenceError(f"non-finite field value at grid index {bad}, t={tt}", index=bad)
        return np.asarray(rhs(DiscreteState(p, FieldValues(vals)), tt), dtype=float)

    with np.errstate(over="ignore", invalid="ignore"):
        if integrator == "euler":
            out = u + dt * f(u, t)
        elif integrator == "rk4":
            k1 = f(u, t)
            k2 = f(u + 0.5 * dt * k1, t + 0.5 * dt)
            k3 = f(u + 0.5 * dt * k2, t + 0.5 * dt)
            k4 = f(u + dt * k3, t + dt)
            out = u + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        else:
            raise ValueError(f"integrate_step cannot run integrator {integrator!r}")
    if not np.isfinite(out).all():
        bad = int(np.flatnonzero(~np.isfinite(out))[0])
        raise DivergenceError(f"non-finite field value at grid index {bad}, t={t + dt}", index=bad)
    return FieldValues(out)


def locate_crossing(
    u_of_t: Callable[[float], float],
    guard: Guard,
    t_lo: float,
    t_hi: float,
    tol: float = 1e-9,
) -> Optional[float]:
    """Earliest time in [t_lo, t_hi] where the guard becomes satisfied.

    Returns t_lo when the guard already holds there, None when it does not
    hold at t_hi either; otherwise bisects the bracket down to width tol
    and returns the satisfied end.
    """
    if guard.satisfied(u_of_t(t_lo)):
        return t_lo
    if not guard.satisfied(u_of_t(t_hi)):
        return None
    lo, hi = t_lo, t_hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if guard.satisfied(u_of_t(mid)):
            hi = mid
        else:
            lo = mid
    return hi


def check_cfl(a: Dspdha, opts: SimOptions) -> None:
    """Explicit-euler stability bound dt <= h^2 / (2 alpha_max)."""
    if opts.integrator != "euler":
        return
    alphas = [f.alpha for f in a.flows if f.kind == "diffusion" and f.alpha > 0]
    if not alphas:
        return
    bound = a.mesh.spacing**2 / (2.0 * max(alphas))
    if opts.dt > bound * (1.0 + 1e-12):
        raise StepSizeError(
            f"CFL violation: euler with dt={opts.dt} exceeds h^2/(2*alpha) = {bound:.6g}"
        )


def _warn_guard_band(a: Dspdha, opts: SimOptions) -> None:
    # Endpoint sign-change detection can tunnel through a hysteresis band
    # narrower than one step's travel.
    band = _narrowest_band(a)
    if band is None:
        return
    rate = float(np.abs(build_rhs(a, a.init, 0.0)).max())
    if rate * opts.dt >= band / 2.0:
        warnings.warn(
            f"dt={opts.dt} moves values up to {rate * opts.dt:.3g} per step, more than half "
            f"the narrowest guard band ({band:.3g}); crossings may be skipped",
            stacklevel=3,
        )


def _narrowest_band(a: Dspdha) -> Optional[float]:
    rising = [g.threshold for per in a.guards for g in per if g.direction == "rising"]
    falling = [g.threshold for per in a.guards for g in per if g.direction == "falling"]
    if not rising or not falling:
        return None
    width = min(r - f for r in rising for f in falling)
    return width if width > 0 else None


# ---------------------------------------------------------------------------
# simulate


def simulate(a: Dspdha, opts: SimOptions) -> tuple[Execution, ReachRecord]:
    """Run the automaton to t_end and record the hybrid execution.

    Continuous evolution runs until some guard crosses; the earliest
    crossing is localized, the interval closes there, one discrete
    transition fires (covering every point of the same event whose crossing
    time ties within event_tolerance), the reset applies, and the next
    interval opens. Stops at t_end, max_transitions, or a Zeno suspicion.

    Returns:
        (Execution, ReachRecord). The execution satisfies the hybrid
        trajectory invariants by construction and is verified before
        returning.
    """
    report = validate(a)
    if report:
        raise ValidationError(report)
    if opts.integrator == "characteristic":
        execution = _simulate_characteristic(a, opts)
    else:
        check_cfl(a, opts)
        _warn_guard_band(a, opts)
        execution = _simulate_fixed_step(a, opts)
    _verify_execution(a, execution)
    return execution, reach_record(execution)


def _enabled_event(a: Dspdha, state: DiscreteState) -> Optional[Event]:
    hits = eval_guards(a, state)
    if not hits:
        return None
    by_event: dict[str, list[int]] = {}
    for name, i in hits:
        by_event.setdefault(name, []).append(i)
    for name in a.events:  # declaration order breaks ties
        if name in by_event:
            return Event(name, tuple(sorted(by_event[name])))
    return Event(hits[0][0], (hits[0][1],))


def _simulate_fixed_step(a: Dspdha, opts: SimOptions) -> Execution:
    p = a.init.partition
    u = a.init.field.values.copy()
    t = 0.0
    intervals: list[IntervalRecord] = []
    cur_start = 0.0
    times: list[float] = [0.0]
    vals: list[np.ndarray] = [u.copy()]
    transition_times: list[float] = []
    truncation = "horizon"

    def close(event: Optional[Event]) -> None:
        intervals.append(
            IntervalRecord(
                t_start=cur_start,
                t_end=t,
                partition=p,
                times=np.asarray(times),
                values=np.asarray(vals),
                closing_event=event,
            )
        )

    def rhs(s: DiscreteState, tt: float) -> np.ndarray:
        return build_rhs(a, s, tt)

    while True:
        state = DiscreteState(p, FieldValues(u))
        fired = _enabled_event(a, state)
        if fired is not None:
            close(fired)
            u = apply_reset(a, state, fired).values.copy()
            p = apply_transition(a, state, fired)
            transition_times.append(t)
            cur_start = t
            times = [t]
            vals = [u.copy()]
            if len(transition_times) >= opts.max_transitions:
                truncation = "max_transitions"
            elif _zeno_window_hit(transition_times, opts):
                truncation = "zeno"
            if truncation != "horizon":
                close(None)
                return Execution(tuple(intervals), last_closed=False, truncation=truncation)
            continue

        if t >= opts.t_end - 1e-15 * max(1.0, opts.t_end):
            t = opts.t_end if opts.t_end > 0 else t
            if times[-1] != t:
                times.append(t)
                vals.append(u.copy())
            close(None)
            return Execution(tuple(intervals), last_closed=True, truncation="horizon")

        h_step = min(opts.dt, opts.t_end - t)
        proposed = integrate_step(rhs, state, t, h_step, opts.integrator).values
        crossings = _new_crossings(a, p, u, proposed)
        if not crossings:
            t = opts.t_end if opts.t_end - (t + h_step) < 1e-15 * max(1.0, opts.t_end) else t + h_step
            u = proposed
            times.append(t)
            vals.append(u.copy())
            continue

        sampler = _partial_step_sampler(rhs, state, t, opts.integrator)
        localized: list[tuple[float, str, int]] = []
        for i, g in crossings:
            tau = locate_crossing(
                lambda s, i=i: float(sampler(s)[i]), g, t, t + h_step, opts.event_tolerance
            )
            localized.append((tau, g.event, i))
        tau_min = min(tau for tau, _, _ in localized)
        chosen = next(name for tau, name, _ in localized if tau == tau_min)
        indices = tuple(
            sorted(
                i
                for tau, name, i in localized
                if name == chosen and tau <= tau_min + opts.event_tolerance
            )
        )
        u_at = sampler(tau_min)
        t = tau_min
        times.append(t)
        vals.append(u_at.copy())
        event = Event(chosen, indices)
        close(event)
        state = DiscreteState(p, FieldValues(u_at))
        u = apply_reset(a, state, event).values.copy()
        p = apply_transition(a, state, event)
        transition_times.append(t)
        cur_start = t
        times = [t]
        vals = [u.copy()]
        if len(transition_times) >= opts.max_transitions:
            truncation = "max_transitions"
        elif _zeno_window_hit(transition_times, opts):
            truncation = "zeno"
        if truncation != "horizon":
            close(None)
            return Execution(tuple(intervals), last_closed=False, truncation=truncation)


def _new_crossings(
    a: Dspdha, p: DiscretePartition, u: np.ndarray, proposed: np.ndarray
) -> list[tuple[int, Guard]]:
    out = []
    for i in range(u.size):
        for g in a.guards[p.modes[i]]:
            if not g.satisfied(float(u[i])) and g.satisfied(float(proposed[i])):
                out.append((i, g))
    return out


def _partial_step_sampler(
    rhs: RhsFn, state: DiscreteState, t: float, integrator: str
) -> Callable[[float], np.ndarray]:
    """Dense output over one step: the same one-step map, stopped early."""
    u0 = state.field.values

    def sample(s: float) -> np.ndarray:
        if s <= t:
            return u0.copy()
        return integrate_step(rhs, state, t, s - t, integrator).values

    return sample


def _zeno_window_hit(transition_times: list[float], opts: SimOptions) -> bool:
    k = opts.zeno_count
    if len(transition_times) < k:
        return False
    return transition_times[-1] - transition_times[-k] < opts.zeno_window


# ---------------------------------------------------------------------------
# Exact transport backend


def _simulate_characteristic(a: Dspdha, opts: SimOptions) -> Execution:
    """Move waves whole cells along their characteristics.

    Between partition changes the field follows the exact transport
    solution sampled on the grid, so those samples live inside one
    interval. Partition changes are discrete transitions: per wave hop an
    `enter:` event for cells the wave occupies, a `leave:` event for cells
    it vacates, and a `merge:` event where a collision deposits a parcel
    onto a block edge.
    """
    bad = [a.mode_names[q] for q, f in enumerate(a.flows) if f.kind != "advection"]
    if bad:
        raise UnsupportedCombinationError(
            f"characteristic integrator needs advection flows everywhere; got {bad}"
        )
    speeds = {q: f.speed for q, f in enumerate(a.flows)}
    h = a.mesh.spacing
    for q, v in speeds.items():
        integer_hops(v, opts.dt, h)
    default_mode = 0

    u = a.init.field.values.copy()
    p = a.init.partition.modes.copy()
    intervals: list[IntervalRecord] = []
    cur_start = 0.0
    times: list[float] = [0.0]
    vals: list[np.ndarray] = [u.copy()]
    cur_partition = DiscretePartition(p)

    def close(t_close: float, event: Optional[Event]) -> None:
        intervals.append(
            IntervalRecord(
                t_start=cur_start,
                t_end=t_close,
                partition=cur_partition,
                times=np.asarray(times),
                values=np.asarray(vals),
                closing_event=event,
            )
        )

    for tick, modes in hop_schedule(speeds, h, opts.t_end):
        for q in modes:
            u2 = u.copy()
            p2 = p.copy()
            merges = advance_mode_one_cell(u2, p2, q, speeds, default_mode)
            if np.array_equal(u2, u) and np.array_equal(p2, p):
                continue
            entered = np.flatnonzero((p2 == q) & (p != q))
            entered = tuple(int(i) for i in entered if i not in merges)
            vacated = tuple(int(i) for i in np.flatnonzero((p == q) & (p2 != q)))
            merge_by_target: dict[int, list[int]] = {}
            for b in merges:
                merge_by_target.setdefault(int(p2[b]), []).append(int(b))

            stages: list[Event] = []
            name = a.mode_names[q]
            if entered:
                stages.append(Event(f"enter:{name}", entered))
            if vacated:
                stages.append(Event(f"leave:{name}", vacated))
            for target, cells in sorted(merge_by_target.items()):
                stages.append(Event(f"merge:{a.mode_names[target]}", tuple(sorted(cells))))

            if not stages:
                # pure translation inside the background mode: continuous
                # evolution only; record the jump as a pre/post sample pair
                if times[-1] != tick:
                    times.append(tick)
                    vals.append(u.copy())
                u = u2
                times.append(tick)
                vals.append(u.copy())
                continue

            if times[-1] != tick:
                times.append(tick)
                vals.append(u.copy())
            for k, event in enumerate(stages):
                close(tick, event)
                new_modes = cur_partition.modes.copy()
                target = a.event_targets.get(event.name, default_mode)
                new_modes[list(event.indices)] = target
                cur_partition = DiscretePartition(new_modes)
                if k == 0:
                    u = u2  # the mass moves with the first stage
                cur_start = tick
                times = [tick]
                vals = [u.copy()]
            p = cur_partition.modes.copy()

    t_end = opts.t_end
    if times[-1] != t_end:
        times.append(t_end)
        vals.append(u.copy())
    close(t_end, None)
    return Execution(tuple(intervals), last_closed=True, truncation="horizon")


# ---------------------------------------------------------------------------
# Post-run analysis


def _verify_execution(a: Dspdha, x: Execution) -> None:
    """Assert the hybrid-trajectory invariants on the returned record."""
    x.trajectory  # interval chaining checks run in the constructor
    for iv in x.intervals:
        if iv.times[0] != iv.t_start or iv.times[-1] != iv.t_end:
            raise AssertionError("interval samples do not span the interval")
        if (np.diff(iv.times) < 0).any():
            raise AssertionError("interval samples out of order")
    for left, right in zip(x.intervals, x.intervals[1:]):
        e = left.closing_event
        if e is None:
            raise AssertionError("interior interval boundary lacks an event")
        boundary = DiscreteState(left.partition, FieldValues(left.values[-1]))
        if apply_transition(a, boundary, e) != right.partition:
            raise AssertionError(f"partition jump at t={left.t_end} does not factor through {e.name}")
        if not e.name.split(":")[0] in ("enter", "leave", "merge"):
            expected = apply_reset(a, boundary, e)
            if not np.array_equal(expected.values, right.values[0]):
                raise AssertionError(f"field jump at t={left.t_end} does not match the reset rule")


def classify_execution(x: Execution, opts: SimOptions) -> ExecutionClass:
    """finite / infinite / zeno_suspect per the trajectory shape.

    Zeno suspicion: some zeno_count consecutive transitions fit inside
    zeno_window; the accumulation time is estimated by the last recorded
    transition. Horizon-truncated but open-ended runs report 'infinite'.
    """
    times = x.transition_times
    k = opts.zeno_count
    if len(times) >= k:
        t = np.asarray(times)
        spans = t[k - 1 :] - t[: len(t) - k + 1]
        if (spans < opts.zeno_window).any():
            return ExecutionClass(kind="zeno_suspect", tau_infinity=float(t[-1]))
    if x.last_closed:
        return ExecutionClass(kind="finite")
    return ExecutionClass(kind="infinite")


def reach_record(x: Execution, include_samples: bool = False) -> ReachRecord:
    """Distinct partitions visited, in first-visit order, plus final state."""
    seen: list[tuple[int, ...]] = []
    for iv in x.intervals:
        key = iv.partition.as_tuple()
        if key not in seen:
            seen.append(key)
    final = x.final_state
    samples = None
    if include_samples:
        samples = tuple(
            (iv.partition.as_tuple(), tuple(float(v) for v in row))
            for iv in x.intervals
            for row in iv.values
        )
    return ReachRecord(
        partitions=tuple(seen),
        final_partition=final.partition.as_tuple(),
        final_field=tuple(float(v) for v in final.field.values),
        samples=samples,
    )


def structural_checks(a: Dspdha) -> StructuralReport:
    """Sufficient (not necessary) conditions for determinism/nonblocking.

    Deterministic: within every mode, the satisfied-sets of distinct
    events are disjoint intervals and resets are single-valued.
    Nonblocking: every flow is globally Lipschitz in the field (linear
    stencils with state-independent sources always are) and no declared
    invariant box can be left without an enabled guard.
    """
    notes: list[str] = []
    deterministic = True
    for q, per_mode in enumerate(a.guards):
        for i in range(len(per_mode)):
            for j in range(i + 1, len(per_mode)):
                gi, gj = per_mode[i], per_mode[j]
                if _guard_sets_overlap(gi, gj):
                    deterministic = False
                    notes.append(
                        f"mode {a.mode_names[q]!r}: guards {gi.event!r} and {gj.event!r} "
                        "can be enabled together"
                    )
    if deterministic:
        notes.append("per-mode guard intervals are pairwise disjoint; resets are single-valued")

    nonblocking = True
    notes.append("all flows are linear in the field with state-independent sources (global Lipschitz)")
    for q, box in enumerate(a.invariants):
        if box is None:
            continue
        lo, hi = box
        rising = [g.threshold for g in a.guards[q] if g.direction == "rising"]
        falling = [g.threshold for g in a.guards[q] if g.direction == "falling"]
        if hi != float("inf") and not any(thr <= hi for thr in rising):
            nonblocking = False
            notes.append(f"mode {a.mode_names[q]!r} can exceed its box with no rising guard enabled")
        if lo != float("-inf") and not any(thr >= lo for thr in falling):
            nonblocking = False
            notes.append(f"mode {a.mode_names[q]!r} can leave its box with no falling guard enabled")
    return StructuralReport(
        deterministic_sufficient=deterministic,
        nonblocking_sufficient=nonblocking,
        notes=tuple(notes),
    )


def _guard_sets_overlap(a: Guard, b: Guard) -> bool:
    if a.direction == b.direction:
        return True  # two rays in the same direction always intersect
    rising, falling = (a, b) if a.direction == "rising" else (b, a)
    return falling.threshold >= rising.threshold
