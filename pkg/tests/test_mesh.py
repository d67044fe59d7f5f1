import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import pdha_sim as ps
from pdha_sim.errors import PartitionError


def test_discretize_domain_heater_grid():
    d = ps.discretize_domain(ps.SpaceDomain(0, 10), 11)
    assert d.m == 11
    assert d.spacing == 1.0
    np.testing.assert_allclose(d.points, np.arange(11.0))


def test_discretize_domain_six_points():
    d = ps.discretize_domain(ps.SpaceDomain(0, 5), 6)
    np.testing.assert_allclose(d.points, [0, 1, 2, 3, 4, 5])


def test_discretize_domain_coarse():
    d = ps.discretize_domain(ps.SpaceDomain(0, 10), 6)
    np.testing.assert_allclose(d.points, [0, 2, 4, 6, 8, 10])
    assert d.spacing == 2.0


def test_discretize_domain_rejects_tiny_m():
    with pytest.raises(ValueError):
        ps.discretize_domain(ps.SpaceDomain(0, 1), 1)


def test_domain_rejects_reversed_bounds():
    with pytest.raises(ValueError):
        ps.SpaceDomain(3.0, 3.0)


def test_discrete_domain_rejects_nonuniform():
    with pytest.raises(ValueError):
        ps.DiscreteDomain(points=np.array([0.0, 1.0, 2.5]), spacing=1.0,
                          domain=ps.SpaceDomain(0, 3))


def test_partition_from_regions_heater_example():
    mesh = ps.discretize_domain(ps.SpaceDomain(0, 5), 6)
    regions = (
        ps.Region(0.0, 3.0, mode=0, closed_left=True, closed_right=True),
        ps.Region(3.0, 5.0, mode=1, closed_left=False, closed_right=True),
    )
    p = ps.partition_from_regions(regions, mesh)
    assert p.as_tuple() == (0, 0, 0, 0, 1, 1)


def test_partition_single_region_all_same():
    mesh = ps.discretize_domain(ps.SpaceDomain(0, 5), 6)
    p = ps.partition_from_regions(
        (ps.Region(0.0, 5.0, mode=3, closed_right=True),), mesh
    )
    assert p.as_tuple() == (3,) * 6


def test_partition_traffic_cells():
    mesh = ps.discretize_domain(ps.SpaceDomain(0, 10), 101)
    regions = (
        ps.Region(0.0, 0.95, mode=0),
        ps.Region(0.95, 1.25, mode=1),
        ps.Region(1.25, 3.45, mode=0),
        ps.Region(3.45, 3.75, mode=1),
        ps.Region(3.75, 10.0, mode=0, closed_right=True),
    )
    p = ps.partition_from_regions(regions, mesh)
    assert set(np.flatnonzero(p.modes == 1)) == {10, 11, 12, 35, 36, 37}


def test_partition_uncovered_point_rejected():
    mesh = ps.discretize_domain(ps.SpaceDomain(0, 2), 3)
    with pytest.raises(PartitionError):
        ps.partition_from_regions((ps.Region(0.0, 0.5, mode=0),), mesh)


def test_partition_double_cover_rejected():
    mesh = ps.discretize_domain(ps.SpaceDomain(0, 2), 3)
    regions = (
        ps.Region(0.0, 2.0, mode=0, closed_right=True),
        ps.Region(0.5, 1.5, mode=1, closed_right=True),
    )
    with pytest.raises(PartitionError):
        ps.partition_from_regions(regions, mesh)


def test_validate_regions_gap_and_overlap():
    dom = ps.SpaceDomain(0, 2)
    gap = (ps.Region(0.0, 0.5, mode=0), ps.Region(1.0, 2.0, mode=1, closed_right=True))
    assert any("gap" in p for p in ps.validate_regions(gap, dom))
    overlap = (
        ps.Region(0.0, 1.5, mode=0),
        ps.Region(1.0, 2.0, mode=1, closed_right=True),
    )
    assert any("overlap" in p for p in ps.validate_regions(overlap, dom))
    good = (ps.Region(0.0, 1.0, mode=0), ps.Region(1.0, 2.0, mode=1, closed_right=True))
    assert ps.validate_regions(good, dom) == []


def test_regions_from_partition_three_cells():
    mesh = ps.discretize_domain(ps.SpaceDomain(0, 2), 3)
    p = ps.DiscretePartition(np.array([0, 0, 1]))
    regions = ps.regions_from_partition(p, mesh)
    assert len(regions) == 2
    assert regions[0].lower == 0.0 and regions[0].upper == 1.5 and not regions[0].closed_right
    assert regions[1].lower == 1.5 and regions[1].upper == 2.0 and regions[1].closed_right


def test_regions_from_partition_uniform_is_whole_domain():
    mesh = ps.discretize_domain(ps.SpaceDomain(0, 2), 5)
    regions = ps.regions_from_partition(ps.DiscretePartition(np.zeros(5, int)), mesh)
    assert len(regions) == 1
    assert (regions[0].lower, regions[0].upper) == (0.0, 2.0)


def test_regions_from_partition_alternating():
    mesh = ps.discretize_domain(ps.SpaceDomain(0, 2), 3)
    regions = ps.regions_from_partition(ps.DiscretePartition(np.array([0, 1, 0])), mesh)
    assert [r.mode for r in regions] == [0, 1, 0]


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(min_value=0, max_value=3), min_size=2, max_size=24))
def test_region_partition_round_trip(modes):
    mesh = ps.discretize_domain(ps.SpaceDomain(-1.0, 3.0), len(modes))
    p = ps.DiscretePartition(np.array(modes))
    back = ps.partition_from_regions(ps.regions_from_partition(p, mesh), mesh)
    assert back == p


def test_state_requires_matching_lengths():
    with pytest.raises(ValueError):
        ps.DiscreteState(ps.DiscretePartition(np.array([0, 0])),
                         ps.FieldValues(np.array([1.0])))


def test_field_rejects_nan():
    with pytest.raises(ValueError):
        ps.FieldValues(np.array([1.0, np.nan]))


def test_types_are_immutable():
    mesh = ps.discretize_domain(ps.SpaceDomain(0, 1), 4)
    with pytest.raises(ValueError):
        mesh.points[0] = 9.0
    p = ps.DiscretePartition(np.array([0, 1]))
    with pytest.raises(ValueError):
        p.modes[0] = 2
