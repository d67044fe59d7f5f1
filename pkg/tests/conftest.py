import numpy as np
import pytest

import pdha_sim as ps


@pytest.fixture(scope="session")
def heater():
    return ps.heater_model()


@pytest.fixture(scope="session")
def heater_run(heater):
    opts = ps.SimOptions(dt=0.01, t_end=50.0, integrator="euler")
    execution, reach = ps.simulate(heater, opts)
    return heater, opts, execution, reach


@pytest.fixture(scope="session")
def heater_coarse_run():
    a = ps.heater_model(ps.HeaterConfig(m_interior=4))
    opts = ps.SimOptions(dt=0.01, t_end=50.0, integrator="euler")
    execution, reach = ps.simulate(a, opts)
    return a, opts, execution, reach


@pytest.fixture(scope="session")
def traffic():
    return ps.traffic_model()


@pytest.fixture(scope="session")
def traffic_run(traffic):
    opts = ps.SimOptions(dt=0.1, t_end=5.0, integrator="characteristic")
    execution, reach = ps.simulate(traffic, opts)
    return traffic, opts, execution, reach


def point_series(execution, index):
    """Concatenated (t, u[index]) samples across all intervals."""
    t = np.concatenate([iv.times for iv in execution.intervals])
    u = np.concatenate([iv.values[:, index] for iv in execution.intervals])
    return t, u


def transitions_at(execution, index):
    return [(t, e) for t, e in execution.transition_events if index in e.indices]


def congested_cells(automaton, execution, t):
    """Snapshot positions (rounded to the grid) currently in mode 'congested'."""
    rows = ps.export_snapshot(automaton, execution, t)
    h = automaton.mesh.spacing
    return {round(x / h) for x, _, mode in rows if mode == "congested"}


def occupied_free_cells(automaton, execution, t):
    rows = ps.export_snapshot(automaton, execution, t)
    h = automaton.mesh.spacing
    return {round(x / h) for x, u, mode in rows if mode == "free" and u != 0.0}
