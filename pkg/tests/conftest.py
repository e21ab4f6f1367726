"""Shared fixtures and builders for the test suite."""

import io
import math

import numpy as np
import pytest

from accessflow.assignment import SolverParams, build_network
from accessflow.geo import (
    EARTH_RADIUS_MILES,
    DemandGroup,
    EdgeSet,
    PhysicianSite,
    load_dataset,
)

from oracles import TinyInstance

MILES_PER_DEG_LAT = 2.0 * math.pi * EARTH_RADIUS_MILES / 360.0


def point_at_miles(lat, lon, miles):
    """A point `miles` due north of (lat, lon); exact under haversine."""
    return lat + miles / MILES_PER_DEG_LAT, lon


def dataset_from_rows(tract_rows, site_rows, county_rows, region_rows):
    """Build a Dataset from row tuples via the real CSV loader."""

    def csv_of(header, rows):
        lines = [header] + [",".join(str(x) for x in r) for r in rows]
        return io.StringIO("\n".join(lines) + "\n")

    return load_dataset(
        csv_of(
            "id,lat,lon,county_id,region_id,pop_medicaid,pop_other,"
            "income,education,unemployment,nonwhite,density,dist_hospital,diversity",
            tract_rows,
        ),
        csv_of("id,lat,lon,county_id,site_type,capacity", site_rows),
        csv_of("id,acceptance_rate", county_rows),
        csv_of("id,veh_rate_medicaid,veh_rate_other", region_rows),
    )


def simple_dataset(tracts, sites, acceptance_rate=1.0, veh_rates=(0.6, 0.9)):
    """Dataset with one county/region; tracts/sites are (id, lat, lon, ...) tuples.

    tracts: (id, lat, lon, pop_medicaid, pop_other)
    sites: (id, lat, lon, capacity) -> private offices in county c0
    """
    tract_rows = [
        (tid, lat, lon, "c0", "r0", pm, po, 50000, 0.3, 0.05, 0.4, 1000, 5.0, 0.5)
        for tid, lat, lon, pm, po in tracts
    ]
    site_rows = [
        (sid, lat, lon, "c0", "private_office", cap) for sid, lat, lon, cap in sites
    ]
    return dataset_from_rows(
        tract_rows, site_rows, [("c0", acceptance_rate)], [("r0", *veh_rates)]
    )


# ----------------------------------------------------------------------
# Tiny random instances for oracle comparisons
# ----------------------------------------------------------------------

def random_tiny_instance(rng, max_groups=4, max_sites=3, k_choices=(1, 2, 4)):
    """Random integer instance within the oracle-tractable envelope.

    Capacities come from {4, 8, 16} so medicaid-cap fractions are exact
    binary rationals and every K in k_choices divides the capacity.
    """
    n_groups = int(rng.integers(1, max_groups + 1))
    n_sites = int(rng.integers(1, max_sites + 1))
    pops = tuple(int(rng.integers(0, 11)) for _ in range(n_groups))
    is_med = tuple(bool(rng.random() < 0.5) for _ in range(n_groups))
    caps = tuple(int(rng.choice([4, 8, 16])) for _ in range(n_sites))
    mcaps = tuple(int(rng.integers(0, c + 1)) for c in caps)
    edges = []
    for g in range(n_groups):
        for s in range(n_sites):
            if rng.random() < 0.7:
                edges.append((g, s, float(np.round(rng.uniform(0.5, 30.0), 6))))
    mu = float(rng.choice([0.0, 0.3, 1.0, 4.0]))
    k = int(rng.choice(k_choices))
    return TinyInstance(pops, is_med, caps, mcaps, tuple(edges), mu, k)


def engine_inputs(inst, p_min=0.0):
    """FlowNetwork-ready pieces (groups, sites, edges, caps, params) for a TinyInstance."""
    groups = [
        DemandGroup(f"t{g}", "medicaid" if inst.is_med[g] else "other",
                    True, float(inst.pops[g]), 1000.0)
        for g in range(len(inst.pops))
    ]
    sites = [
        PhysicianSite(f"s{j}", 0.0, 0.0, "c0", "private_office", float(inst.caps[j]))
        for j in range(len(inst.caps))
    ]
    caps_frac = {f"s{j}": inst.mcaps[j] / inst.caps[j] for j in range(len(inst.caps))}
    if inst.edges:
        order = sorted(range(len(inst.edges)),
                       key=lambda i: (inst.edges[i][0], inst.edges[i][2], inst.edges[i][1]))
        eg = np.array([inst.edges[i][0] for i in order], dtype=np.int64)
        es = np.array([inst.edges[i][1] for i in order], dtype=np.int64)
        dd = np.array([inst.edges[i][2] for i in order], dtype=float)
    else:
        eg = np.empty(0, dtype=np.int64)
        es = np.empty(0, dtype=np.int64)
        dd = np.empty(0, dtype=float)
    edges = EdgeSet(eg, es, dd)
    params = SolverParams(mu=inst.mu, k_segments=inst.k_segments, p_min=p_min)
    return groups, sites, edges, caps_frac, params


def engine_network(inst, p_min=0.0):
    groups, sites, edges, caps_frac, params = engine_inputs(inst, p_min)
    return build_network(groups, sites, edges, caps_frac, params), params


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
