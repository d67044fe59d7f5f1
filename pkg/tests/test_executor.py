import dataclasses

import numpy as np
import pytest

import pdha_sim as ps
from pdha_sim.automaton import Event, Guard
from pdha_sim.errors import StepSizeError
from pdha_sim.executor import Execution, IntervalRecord
from pdha_sim.mesh import make_state


def decay_state():
    return make_state([0], [1.0])


def decay_rhs(s, t):
    return -2.0 * s.field.values


def test_integrate_step_euler_decay():
    out = ps.integrate_step(decay_rhs, decay_state(), 0.0, 0.1, "euler")
    np.testing.assert_allclose(out.values, [0.8])


def test_integrate_step_rk4_decay_matches_exponential():
    out = ps.integrate_step(decay_rhs, decay_state(), 0.0, 0.1, "rk4")
    assert abs(out.values[0] - np.exp(-0.2)) < 3e-6


def test_integrate_step_zero_rhs_identity():
    s = make_state([0, 0], [1.5, -2.0])
    out = ps.integrate_step(lambda s, t: np.zeros(2), s, 0.0, 0.3, "rk4")
    assert out == s.field


def test_integrate_step_flags_divergence():
    s = make_state([0], [1.0])
    big = lambda s, t: np.array([1e308])
    with pytest.raises(ps.DivergenceError) as err:
        ps.integrate_step(big, s, 0.0, 10.0, "euler")
    assert err.value.index == 0


def rising(threshold):
    return Guard(event="up", direction="rising", threshold=threshold, target=1)


def test_locate_crossing_linear():
    tau = ps.locate_crossing(lambda t: 0.6 + 0.2 * t, rising(0.7), 0.0, 1.0, tol=1e-9)
    assert abs(tau - 0.5) <= 1e-9


def test_locate_crossing_already_satisfied():
    assert ps.locate_crossing(lambda t: 0.75, rising(0.7), 2.0, 3.0) == 2.0


def test_locate_crossing_never_satisfied():
    assert ps.locate_crossing(lambda t: 0.5, rising(0.7), 0.0, 1.0) is None


def test_cfl_violation_raises(heater):
    with pytest.raises(StepSizeError):
        ps.simulate(heater, ps.SimOptions(dt=0.6, t_end=1.0, integrator="euler"))


def test_zero_horizon_gives_degenerate_interval(heater):
    x, reach = ps.simulate(heater, ps.SimOptions(dt=0.01, t_end=0.0))
    assert len(x.intervals) == 1
    iv = x.intervals[0]
    assert iv.t_start == iv.t_end == 0.0
    assert x.transition_count == 0
    assert x.final_state.field == heater.init.field
    assert reach.partitions == (heater.init.partition.as_tuple(),)


def single_mode_diffusion(bc, m=9, init="bump"):
    desc = ps.ModelDescription(
        name="plain",
        domain=ps.SpaceDomain(0.0, float(m + 1)),
        modes=(ps.ModePde(name="only", kind="diffusion", alpha=1.0),),
        boundary=bc,
        regions=(ps.RegionDecl(0.0, float(m + 1), mode="only", closed_right=True),),
        init=(
            ps.InitSpec(kind="expression", formula="exp(-(x - 5.0)**2)")
            if init == "bump"
            else ps.InitSpec(kind="constant", value=1.0)
        ),
    )
    return ps.discretize_model(desc, m=m + 2)


def test_single_mode_run_no_transitions_max_principle():
    a = single_mode_diffusion((ps.dirichlet(0.0), ps.dirichlet(0.0)))
    opts = ps.SimOptions(dt=0.4, t_end=10.0, integrator="euler")
    x, reach = ps.simulate(a, opts)
    assert x.transition_count == 0
    assert reach.partition_count == 1
    maxima = [iv.values.max(axis=1) for iv in x.intervals]
    stacked = np.concatenate(maxima)
    assert (np.diff(stacked) <= 1e-12).all()
    # cross-check the endpoint against a finer-step reference run
    fine = ps.simulate(a, ps.SimOptions(dt=0.04, t_end=10.0, integrator="euler"))[0]
    np.testing.assert_allclose(
        x.final_state.field.values, fine.final_state.field.values, atol=5e-3
    )


def test_mirror_diffusion_conserves_total():
    a = single_mode_diffusion((ps.MIRROR, ps.MIRROR))
    x, _ = ps.simulate(a, ps.SimOptions(dt=0.4, t_end=10.0, integrator="euler"))
    u0 = x.intervals[0].values[0]
    u1 = x.final_state.field.values
    assert abs(u1.sum() - u0.sum()) <= 1e-10 * abs(u0.sum())


def test_simulate_is_deterministic(heater):
    opts = ps.SimOptions(dt=0.01, t_end=5.0)
    x1, _ = ps.simulate(heater, opts)
    x2, _ = ps.simulate(heater, opts)
    assert len(x1.intervals) == len(x2.intervals)
    for a, b in zip(x1.intervals, x2.intervals):
        assert a.t_start == b.t_start and a.t_end == b.t_end
        assert np.array_equal(a.times, b.times)
        assert np.array_equal(a.values, b.values)
        assert a.partition == b.partition
        assert (a.closing_event is None) == (b.closing_event is None)
        if a.closing_event is not None:
            assert a.closing_event == b.closing_event


def synthetic_execution(boundary_times, last_closed=True):
    """Interval skeleton with the given transition times; field is scalar."""
    intervals = []
    t0 = 0.0
    for t1 in boundary_times:
        intervals.append(
            IntervalRecord(
                t_start=t0,
                t_end=t1,
                partition=ps.DiscretePartition(np.array([0])),
                times=np.array([t0, t1]),
                values=np.zeros((2, 1)),
                closing_event=Event("up", (0,)),
            )
        )
        t0 = t1
    intervals.append(
        IntervalRecord(
            t_start=t0,
            t_end=t0 + 1.0,
            partition=ps.DiscretePartition(np.array([0])),
            times=np.array([t0, t0 + 1.0]),
            values=np.zeros((2, 1)),
            closing_event=None,
        )
    )
    return Execution(tuple(intervals), last_closed=last_closed, truncation="horizon")


def test_classify_finite_by_horizon():
    x = synthetic_execution([1.0, 2.0, 3.0, 4.0, 4.5])
    opts = ps.SimOptions(dt=0.1, t_end=5.0)
    assert ps.classify_execution(x, opts).kind == "finite"


def test_classify_geometric_times_as_zeno_suspect():
    times = [1.0 - 2.0 ** (-i) for i in range(1, 1001)]
    x = synthetic_execution(times)
    opts = ps.SimOptions(dt=0.1, t_end=2.0, zeno_count=500, zeno_window=1e-6)
    out = ps.classify_execution(x, opts)
    assert out.kind == "zeno_suspect"
    assert abs(out.tau_infinity - 1.0) < 1e-3


def test_classify_evenly_spaced_not_zeno():
    x = synthetic_execution([float(k) for k in range(1, 1200)])
    opts = ps.SimOptions(dt=0.1, t_end=2000.0, zeno_count=500, zeno_window=1e-6)
    assert ps.classify_execution(x, opts).kind == "finite"


def test_reach_record_no_transitions():
    x = synthetic_execution([])
    rec = ps.reach_record(x)
    assert rec.partitions == ((0,),)


def test_reach_record_counts_distinct_partitions(heater_run):
    heater, opts, x, reach = heater_run
    revisits = [iv.partition.as_tuple() for iv in x.intervals]
    assert reach.partition_count == len(set(revisits))
    assert reach.partitions[0] == heater.init.partition.as_tuple()
    assert reach.final_partition == x.intervals[-1].partition.as_tuple()


def test_reach_record_samples_flag(heater):
    x, _ = ps.simulate(heater, ps.SimOptions(dt=0.01, t_end=1.0))
    rec = ps.reach_record(x, include_samples=True)
    assert rec.samples is not None and len(rec.samples) >= len(x.intervals)


def test_structural_checks_heater(heater):
    rep = ps.structural_checks(heater)
    assert rep.deterministic_sufficient
    assert rep.nonblocking_sufficient


def test_structural_checks_overlapping_rising_guards(heater):
    guards = (
        (
            Guard(event="a", direction="rising", threshold=0.5, target=1),
            Guard(event="b", direction="rising", threshold=0.6, target=1),
        ),
        (),
    )
    overlapping = dataclasses.replace(
        heater, guards=guards, events=("a", "b"), resets=()
    )
    rep = ps.structural_checks(overlapping)
    assert not rep.deterministic_sufficient


def test_structural_checks_box_without_guard(heater):
    boxed = dataclasses.replace(heater, invariants=((0.0, 0.7), None), guards=((), ()), events=())
    rep = ps.structural_checks(boxed)
    assert not rep.nonblocking_sufficient


def test_execution_trajectory_invariants(heater_run):
    _, _, x, _ = heater_run
    traj = x.trajectory
    assert traj.last_closed
    for (a0, a1), (b0, _) in zip(traj.intervals, traj.intervals[1:]):
        assert a0 <= a1 == b0


def test_localized_boundary_values_on_threshold(heater_run):
    heater, opts, x, _ = heater_run
    for left, right in zip(x.intervals, x.intervals[1:]):
        e = left.closing_event
        guard = heater.guard_for_event(e.name)
        u_end = left.values[-1]
        for i in e.indices:
            assert abs(u_end[i] - guard.threshold) <= 1e-6 * max(1.0, abs(guard.threshold))


def test_guard_band_warning_for_coarse_dt(heater):
    with pytest.warns(UserWarning, match="guard band"):
        ps.simulate(heater, ps.SimOptions(dt=0.05, t_end=0.2))


def ping_pong_automaton():
    """Two guards that re-enable each other at the same value."""
    desc = ps.ModelDescription(
        name="ping-pong",
        domain=ps.SpaceDomain(0.0, 3.0),
        modes=(
            ps.ModePde(name="a", kind="diffusion", alpha=0.1),
            ps.ModePde(name="b", kind="diffusion", alpha=0.1),
        ),
        boundary=(ps.MIRROR, ps.MIRROR),
        regions=(ps.RegionDecl(0.0, 3.0, mode="a", closed_right=True),),
        init=ps.InitSpec(kind="constant", value=0.6),
        guards=(
            ps.GuardDecl(mode="a", event="flip_up", direction="rising", threshold=0.5, target="b"),
            ps.GuardDecl(mode="b", event="flip_down", direction="rising", threshold=0.3, target="a"),
        ),
    )
    return ps.discretize_model(desc, m=4)


def test_zeno_loop_detected_and_aborted():
    a = ping_pong_automaton()
    opts = ps.SimOptions(dt=0.01, t_end=1.0, zeno_count=50, zeno_window=1e-6)
    x, _ = ps.simulate(a, opts)
    assert x.truncation == "zeno"
    assert not x.last_closed
    out = ps.classify_execution(x, opts)
    assert out.kind == "zeno_suspect"
    assert out.tau_infinity == 0.0  # all flips happen at the initial instant


def test_max_transitions_truncates():
    a = ping_pong_automaton()
    opts = ps.SimOptions(dt=0.01, t_end=1.0, max_transitions=7)
    x, _ = ps.simulate(a, opts)
    assert x.truncation == "max_transitions"
    assert x.transition_count == 7
    assert ps.classify_execution(x, opts).kind == "infinite"
