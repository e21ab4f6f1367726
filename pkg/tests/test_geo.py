"""Geography, ingestion, demand splitting, and edge eligibility."""

import io
import math

import numpy as np
import pytest

from accessflow.errors import (
    DanglingReference,
    DuplicateId,
    InvalidCoordinate,
    MalformedRow,
)
from accessflow.geo import (
    EARTH_RADIUS_MILES,
    Region,
    Tract,
    build_groups,
    distance_miles,
    eligible_edges,
    split_demand,
    write_dataset,
    load_dataset_dir,
)

from conftest import dataset_from_rows, point_at_miles, simple_dataset


# ----------------------------------------------------------------------
# distance_miles
# ----------------------------------------------------------------------

def test_distance_identity():
    assert distance_miles((33.75, -84.39), (33.75, -84.39)) == 0.0


def test_distance_half_circumference():
    assert distance_miles((0.0, 0.0), (0.0, 180.0)) == pytest.approx(
        math.pi * EARTH_RADIUS_MILES, abs=1e-9
    )


def test_distance_one_degree_equator():
    # one degree of arc: 2*pi*R/360
    expected = 2.0 * math.pi * EARTH_RADIUS_MILES / 360.0
    assert distance_miles((0.0, 0.0), (0.0, 1.0)) == pytest.approx(expected, abs=1e-9)
    assert round(distance_miles((0.0, 0.0), (0.0, 1.0)), 2) == 69.09


def test_distance_symmetry_and_triangle(rng):
    pts = np.column_stack([rng.uniform(-89, 89, 600), rng.uniform(-180, 180, 600)])
    for i in range(0, 600, 3):
        a, b, c = pts[i], pts[i + 1], pts[i + 2]
        dab = distance_miles(a, b)
        dba = distance_miles(b, a)
        assert dab == dba  # symmetric by construction
        dac = distance_miles(a, c)
        dcb = distance_miles(c, b)
        assert dab <= dac + dcb + 1e-9 * max(1.0, dab)


def test_distance_nonnegative_and_zero_iff_equal(rng):
    for _ in range(100):
        a = (rng.uniform(-89, 89), rng.uniform(-180, 180))
        b = (rng.uniform(-89, 89), rng.uniform(-180, 180))
        d = distance_miles(a, b)
        assert d >= 0.0
        if a != b:
            assert d > 0.0


# ----------------------------------------------------------------------
# split_demand
# ----------------------------------------------------------------------

REGIONS = {"r0": Region("r0", 0.6, 0.9)}


def make_tract(pm=100.0, po=200.0):
    return Tract("t0", 33.0, -84.0, "c0", "r0", pm, po, {})


def test_split_populations_by_vehicle_rate():
    groups = split_demand(make_tract(100.0, 0.0), REGIONS)
    med = {(g.vehicle): g.population for g in groups if g.program == "medicaid"}
    assert med[True] == pytest.approx(60.0)
    assert med[False] == pytest.approx(40.0)


def test_split_conserves_population_bitwise(rng):
    for _ in range(500):
        pm, po = rng.uniform(0, 5000), rng.uniform(0, 5000)
        vm, vo = rng.uniform(0, 1), rng.uniform(0, 1)
        regions = {"r0": Region("r0", vm, vo)}
        groups = split_demand(make_tract(pm, po), regions)
        med = [g.population for g in groups if g.program == "medicaid"]
        oth = [g.population for g in groups if g.program == "other"]
        assert med[0] + med[1] == pm
        assert oth[0] + oth[1] == po
        assert all(g.population >= 0 for g in groups)


def test_split_identity_mobility_scale():
    groups = split_demand(make_tract(), REGIONS, mobility_scale=1.0)
    radii = {(g.program, g.vehicle): g.radius for g in groups}
    assert radii[("medicaid", True)] == 10.0
    assert radii[("medicaid", False)] == 25.0


def test_split_mobility_scales_medicaid_only():
    # base radii 10 (vehicle) and 25 (no vehicle); doubling mobility moves
    # only the medicaid groups to 20 and 50
    groups = split_demand(make_tract(), REGIONS, mobility_scale=2.0)
    radii = {(g.program, g.vehicle): g.radius for g in groups}
    assert radii[("medicaid", True)] == 20.0
    assert radii[("medicaid", False)] == 50.0
    assert radii[("other", True)] == 10.0
    assert radii[("other", False)] == 25.0


# ----------------------------------------------------------------------
# eligible_edges
# ----------------------------------------------------------------------

def test_no_site_within_radius():
    far_lat, far_lon = point_at_miles(33.0, -84.0, 200.0)
    ds = simple_dataset(
        [("t0", 33.0, -84.0, 100, 100)], [("s0", far_lat, far_lon, 50)]
    )
    groups = build_groups(ds)
    edges = eligible_edges(groups, ds, {"s0": True})
    assert len(edges) == 0


def test_acceptance_gates_medicaid_only():
    ds = simple_dataset([("t0", 33.0, -84.0, 100, 100)], [("s0", 33.0, -84.0, 50)])
    groups = build_groups(ds)
    edges = eligible_edges(groups, ds, {"s0": False})
    progs = [groups[g].program for g in edges.group_idx]
    assert progs.count("medicaid") == 0
    assert progs.count("other") == 2  # both vehicle groups


def test_radius_threshold():
    lat5, lon5 = point_at_miles(33.0, -84.0, 5.0)
    lat30, lon30 = point_at_miles(33.0, -84.0, 30.0)
    ds = simple_dataset(
        [("t0", 33.0, -84.0, 0, 100)],
        [("s0", lat5, lon5, 50), ("s1", lat30, lon30, 50)],
    )
    groups = build_groups(ds)
    # no-vehicle "other" group has radius 25: only the 5-mile site qualifies
    edges = eligible_edges(groups, ds, {"s0": True, "s1": True})
    noveh = [g for g in range(len(groups)) if not groups[g].vehicle and groups[g].program == "other"]
    rows = edges.group_idx == noveh[0]
    assert rows.sum() == 1
    assert edges.site_idx[rows][0] == 0


def test_edges_sorted_by_group_distance_site():
    lat2, _ = point_at_miles(33.0, -84.0, 2.0)
    lat7, _ = point_at_miles(33.0, -84.0, 7.0)
    ds = simple_dataset(
        [("t0", 33.0, -84.0, 50, 50)],
        [("s1", lat7, -84.0, 50), ("s0", lat2, -84.0, 50)],
    )
    groups = build_groups(ds)
    edges = eligible_edges(groups, ds, {"s0": True, "s1": True})
    assert list(edges.group_idx) == sorted(edges.group_idx)
    for g in set(edges.group_idx):
        d = edges.dist[edges.group_idx == g]
        assert list(d) == sorted(d)


def test_edge_monotonicity_in_radius_and_acceptance(rng):
    coords = [(33.0 + rng.uniform(-0.5, 0.5), -84.0 + rng.uniform(-0.5, 0.5)) for _ in range(6)]
    ds = simple_dataset(
        [("t0", 33.0, -84.0, 100, 100), ("t1", 33.2, -84.1, 50, 80)],
        [(f"s{j}", lat, lon, 40) for j, (lat, lon) in enumerate(coords)],
    )
    accept = {f"s{j}": bool(rng.random() < 0.5) for j in range(6)}

    def edge_pairs(mobility, acc):
        groups = build_groups(ds, mobility_scale=mobility)
        e = eligible_edges(groups, ds, acc)
        return set(zip(e.group_idx.tolist(), e.site_idx.tolist()))

    base = edge_pairs(1.0, accept)
    assert base <= edge_pairs(1.5, accept)  # larger medicaid radius only adds
    flipped = dict(accept)
    for sid, v in accept.items():
        if not v:
            flipped[sid] = True
            break
    assert base <= edge_pairs(1.0, flipped)


# ----------------------------------------------------------------------
# load_dataset
# ----------------------------------------------------------------------

def test_load_empty_supply():
    ds = simple_dataset([("t0", 33.0, -84.0, 10, 20)], [])
    assert len(ds.sites) == 0
    assert len(ds.tracts) == 1


def test_load_bad_latitude():
    with pytest.raises(InvalidCoordinate):
        simple_dataset([("t0", 95.0, -84.0, 10, 20)], [])


def test_load_unknown_county():
    with pytest.raises(DanglingReference):
        dataset_from_rows(
            [("t0", 33.0, -84.0, "nope", "r0", 1, 1, 0, 0, 0, 0, 0, 0, 0)],
            [],
            [("c0", 0.5)],
            [("r0", 0.5, 0.9)],
        )


def test_load_duplicate_tract():
    with pytest.raises(DuplicateId):
        dataset_from_rows(
            [
                ("t0", 33.0, -84.0, "c0", "r0", 1, 1, 0, 0, 0, 0, 0, 0, 0),
                ("t0", 34.0, -84.0, "c0", "r0", 1, 1, 0, 0, 0, 0, 0, 0, 0),
            ],
            [],
            [("c0", 0.5)],
            [("r0", 0.5, 0.9)],
        )


def test_load_malformed_number():
    with pytest.raises(MalformedRow):
        dataset_from_rows(
            [("t0", 33.0, "not-a-number", "c0", "r0", 1, 1, 0, 0, 0, 0, 0, 0, 0)],
            [],
            [("c0", 0.5)],
            [("r0", 0.5, 0.9)],
        )


def test_load_bad_site_type():
    with pytest.raises(MalformedRow):
        dataset_from_rows(
            [("t0", 33.0, -84.0, "c0", "r0", 1, 1, 0, 0, 0, 0, 0, 0, 0)],
            [("s0", 33.0, -84.0, "c0", "imaging_center", 10)],
            [("c0", 0.5)],
            [("r0", 0.5, 0.9)],
        )


def test_roundtrip_write_load(tmp_path, rng):
    ds = simple_dataset(
        [("t0", 33.0, -84.0, 100.25, 200.5), ("t1", 33.5, -84.2, 7.125, 0.0)],
        [("s0", 33.1, -84.05, 123.5)],
        acceptance_rate=0.625,
    )
    write_dataset(ds, tmp_path)
    back = load_dataset_dir(tmp_path)
    assert [t.id for t in back.tracts] == [t.id for t in ds.tracts]
    assert back.tracts[0].pop_medicaid == ds.tracts[0].pop_medicaid
    assert back.sites[0].capacity == ds.sites[0].capacity
    assert back.counties["c0"].acceptance_rate == 0.625
    assert back.tracts[1].covariates == ds.tracts[1].covariates
