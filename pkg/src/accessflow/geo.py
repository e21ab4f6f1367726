"""Domain types for geography, demand, and supply, plus distance and edge construction.

Tract-level demand is split into four (program, vehicle) groups whose
populations are real-valued; travel cost between a tract and a physician
site is great-circle distance in miles. Eligible edges are the cross
product of groups and sites filtered by each group's travel radius and,
for medicaid groups, by the site's acceptance flag.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import (
    DanglingReference,
    DuplicateId,
    InvalidCoordinate,
    MalformedRow,
)

EARTH_RADIUS_MILES = 3958.7613

PROGRAMS = ("medicaid", "other")
SITE_TYPES = ("public_hospital", "community_clinic", "private_office")
COVARIATE_NAMES = (
    "income",
    "education",
    "unemployment",
    "nonwhite",
    "density",
    "dist_hospital",
    "diversity",
)

# Base travel radii in miles, following the stated willingness to travel:
# with a car 10 miles, without 25. Both are configuration keys downstream.
DEFAULT_RADIUS_VEHICLE = 10.0
DEFAULT_RADIUS_NO_VEHICLE = 25.0


# ----------------------------------------------------------------------
# Domain types
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class Tract:
    id: str
    lat: float
    lon: float
    county_id: str
    region_id: str
    pop_medicaid: float
    pop_other: float
    covariates: dict[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class County:
    id: str
    acceptance_rate: float


@dataclass(frozen=True)
class Region:
    id: str
    vehicle_rate_medicaid: float
    vehicle_rate_other: float


@dataclass(frozen=True)
class PhysicianSite:
    id: str
    lat: float
    lon: float
    county_id: str
    site_type: str
    capacity: float


@dataclass(frozen=True)
class DemandGroup:
    tract_id: str
    program: str          # "medicaid" | "other"
    vehicle: bool
    population: float
    radius: float         # effective miles, after mobility scaling


class Dataset:
    """Validated, immutable bundle of tracts, sites, counties, and regions.

    Construction happens through load_dataset or synth generation; the
    instance is treated as read-only afterwards, so it is safe to share
    across worker processes. Tract/site order is the input row order and
    is the canonical order for everything downstream.
    """

    def __init__(self, tracts, sites, counties, regions):
        self.tracts: tuple[Tract, ...] = tuple(tracts)
        self.sites: tuple[PhysicianSite, ...] = tuple(sites)
        self.counties: dict[str, County] = dict(counties)
        self.regions: dict[str, Region] = dict(regions)
        self.tract_index = {t.id: i for i, t in enumerate(self.tracts)}
        self.site_index = {s.id: i for i, s in enumerate(self.sites)}

    @cached_property
    def tract_coords(self) -> np.ndarray:
        return np.array([[t.lat, t.lon] for t in self.tracts], dtype=float).reshape(-1, 2)

    @cached_property
    def site_coords(self) -> np.ndarray:
        return np.array([[s.lat, s.lon] for s in self.sites], dtype=float).reshape(-1, 2)

    @cached_property
    def site_capacities(self) -> np.ndarray:
        return np.array([s.capacity for s in self.sites], dtype=float)

    @cached_property
    def distance_matrix(self) -> np.ndarray:
        """Tract-to-site great-circle distances, miles, shape (n_tracts, n_sites)."""
        return haversine_matrix(self.tract_coords, self.site_coords)

    @cached_property
    def _site_id_rank(self) -> np.ndarray:
        """Rank of each site's id in lexicographic order (distance tie-break)."""
        order = sorted(range(len(self.sites)), key=lambda j: self.sites[j].id)
        rank = np.empty(len(self.sites), dtype=np.int64)
        for r, j in enumerate(order):
            rank[j] = r
        return rank


# ----------------------------------------------------------------------
# Distance
# ----------------------------------------------------------------------

def distance_miles(a, b) -> float:
    """Great-circle distance in miles between two (lat, lon) points.

    Haversine with mean Earth radius 3958.7613 miles; symmetric, zero iff
    the points coincide.
    """
    lat1, lon1 = math.radians(a[0]), math.radians(a[1])
    lat2, lon2 = math.radians(b[0]), math.radians(b[1])
    s_lat = math.sin(0.5 * (lat2 - lat1))
    s_lon = math.sin(0.5 * (lon2 - lon1))
    h = s_lat * s_lat + math.cos(lat1) * math.cos(lat2) * s_lon * s_lon
    return 2.0 * EARTH_RADIUS_MILES * math.asin(min(1.0, math.sqrt(h)))


def haversine_matrix(points_a: np.ndarray, points_b: np.ndarray) -> np.ndarray:
    """Pairwise great-circle miles between two (n, 2) arrays of (lat, lon)."""
    a = np.radians(np.asarray(points_a, dtype=float))
    b = np.radians(np.asarray(points_b, dtype=float))
    lat1 = a[:, 0][:, None]
    lat2 = b[:, 0][None, :]
    s_lat = np.sin(0.5 * (lat2 - lat1))
    s_lon = np.sin(0.5 * (b[:, 1][None, :] - a[:, 1][:, None]))
    h = s_lat ** 2 + np.cos(lat1) * np.cos(lat2) * s_lon ** 2
    return 2.0 * EARTH_RADIUS_MILES * np.arcsin(np.minimum(1.0, np.sqrt(h)))


# ----------------------------------------------------------------------
# CSV ingestion
# ----------------------------------------------------------------------

TRACT_HEADER = (
    "id,lat,lon,county_id,region_id,pop_medicaid,pop_other,"
    "income,education,unemployment,nonwhite,density,dist_hospital,diversity"
).split(",")
SITE_HEADER = "id,lat,lon,county_id,site_type,capacity".split(",")
COUNTY_HEADER = "id,acceptance_rate".split(",")
REGION_HEADER = "id,veh_rate_medicaid,veh_rate_other".split(",")


def _open_source(source):
    if hasattr(source, "read"):
        return source, False
    return open(source, "r", encoding="utf-8", newline=""), True


def _rows(source, header, label):
    stream, owned = _open_source(source)
    try:
        reader = csv.reader(stream)
        try:
            got = next(reader)
        except StopIteration:
            raise MalformedRow(label, 1, "missing header row")
        if [h.strip() for h in got] != header:
            raise MalformedRow(label, 1, f"expected header {','.join(header)}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise MalformedRow(label, lineno, f"expected {len(header)} fields, got {len(row)}")
            yield lineno, row
    finally:
        if owned:
            stream.close()


def _parse_float(value, label, lineno, name):
    try:
        x = float(value)
    except ValueError:
        raise MalformedRow(label, lineno, f"{name}={value!r} is not a number")
    if not math.isfinite(x):
        raise MalformedRow(label, lineno, f"{name}={value!r} is not finite")
    return x


def _check_coord(id_, lat, lon):
    if not (-90.0 <= lat <= 90.0 and -180.0 <= lon <= 180.0):
        raise InvalidCoordinate(id_, lat, lon)


def load_dataset(tracts_source, physicians_source, counties_source, regions_source) -> Dataset:
    """Load and validate the four CSV inputs into an immutable Dataset.

    Sources may be paths or open text streams. Raises MalformedRow,
    DuplicateId, DanglingReference, or InvalidCoordinate; a returned
    Dataset has every foreign key resolved.
    """
    counties = {}
    for lineno, row in _rows(counties_source, COUNTY_HEADER, "counties.csv"):
        cid = row[0].strip()
        if cid in counties:
            raise DuplicateId("county", cid)
        rate = _parse_float(row[1], "counties.csv", lineno, "acceptance_rate")
        if not (0.0 <= rate <= 1.0):
            raise MalformedRow("counties.csv", lineno, f"acceptance_rate={rate} outside [0,1]")
        counties[cid] = County(cid, rate)

    regions = {}
    for lineno, row in _rows(regions_source, REGION_HEADER, "regions.csv"):
        rid = row[0].strip()
        if rid in regions:
            raise DuplicateId("region", rid)
        vm = _parse_float(row[1], "regions.csv", lineno, "veh_rate_medicaid")
        vo = _parse_float(row[2], "regions.csv", lineno, "veh_rate_other")
        for name, v in (("veh_rate_medicaid", vm), ("veh_rate_other", vo)):
            if not (0.0 <= v <= 1.0):
                raise MalformedRow("regions.csv", lineno, f"{name}={v} outside [0,1]")
        regions[rid] = Region(rid, vm, vo)

    tracts = []
    seen_tracts = set()
    for lineno, row in _rows(tracts_source, TRACT_HEADER, "tracts.csv"):
        tid = row[0].strip()
        if tid in seen_tracts:
            raise DuplicateId("tract", tid)
        seen_tracts.add(tid)
        lat = _parse_float(row[1], "tracts.csv", lineno, "lat")
        lon = _parse_float(row[2], "tracts.csv", lineno, "lon")
        _check_coord(tid, lat, lon)
        county_id, region_id = row[3].strip(), row[4].strip()
        if county_id not in counties:
            raise DanglingReference("tract", tid, county_id)
        if region_id not in regions:
            raise DanglingReference("tract", tid, region_id)
        pm = _parse_float(row[5], "tracts.csv", lineno, "pop_medicaid")
        po = _parse_float(row[6], "tracts.csv", lineno, "pop_other")
        if pm < 0 or po < 0:
            raise MalformedRow("tracts.csv", lineno, "populations must be >= 0")
        covs = {
            name: _parse_float(row[7 + i], "tracts.csv", lineno, name)
            for i, name in enumerate(COVARIATE_NAMES)
        }
        tracts.append(Tract(tid, lat, lon, county_id, region_id, pm, po, covs))

    sites = []
    seen_sites = set()
    for lineno, row in _rows(physicians_source, SITE_HEADER, "physicians.csv"):
        sid = row[0].strip()
        if sid in seen_sites:
            raise DuplicateId("site", sid)
        seen_sites.add(sid)
        lat = _parse_float(row[1], "physicians.csv", lineno, "lat")
        lon = _parse_float(row[2], "physicians.csv", lineno, "lon")
        _check_coord(sid, lat, lon)
        county_id = row[3].strip()
        if county_id not in counties:
            raise DanglingReference("site", sid, county_id)
        site_type = row[4].strip()
        if site_type not in SITE_TYPES:
            raise MalformedRow("physicians.csv", lineno, f"unknown site_type {site_type!r}")
        capacity = _parse_float(row[5], "physicians.csv", lineno, "capacity")
        if capacity <= 0:
            raise MalformedRow("physicians.csv", lineno, "capacity must be > 0")
        sites.append(PhysicianSite(sid, lat, lon, county_id, site_type, capacity))

    return Dataset(tracts, sites, counties, regions)


def _fmt(x) -> str:
    """Shortest round-trip decimal for a float; plain text for the rest."""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def write_dataset(dataset: Dataset, out_dir) -> dict[str, Path]:
    """Write the four CSV schemas into out_dir; returns name -> path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {}

    def write(name, header, rows):
        path = out_dir / name
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([_fmt(x) for x in row])
        paths[name] = path

    write("tracts.csv", TRACT_HEADER, (
        [t.id, t.lat, t.lon, t.county_id, t.region_id, t.pop_medicaid, t.pop_other]
        + [t.covariates[name] for name in COVARIATE_NAMES]
        for t in dataset.tracts
    ))
    write("physicians.csv", SITE_HEADER, (
        [s.id, s.lat, s.lon, s.county_id, s.site_type, s.capacity] for s in dataset.sites
    ))
    write("counties.csv", COUNTY_HEADER, (
        [c.id, c.acceptance_rate] for c in dataset.counties.values()
    ))
    write("regions.csv", REGION_HEADER, (
        [r.id, r.vehicle_rate_medicaid, r.vehicle_rate_other] for r in dataset.regions.values()
    ))
    return paths


def load_dataset_dir(data_dir) -> Dataset:
    data_dir = Path(data_dir)
    return load_dataset(
        data_dir / "tracts.csv",
        data_dir / "physicians.csv",
        data_dir / "counties.csv",
        data_dir / "regions.csv",
    )


# ----------------------------------------------------------------------
# Demand groups and eligible edges
# ----------------------------------------------------------------------

def split_demand(
    tract: Tract,
    regions: dict[str, Region],
    mobility_scale: float = 1.0,
    radius_vehicle: float = DEFAULT_RADIUS_VEHICLE,
    radius_no_vehicle: float = DEFAULT_RADIUS_NO_VEHICLE,
) -> tuple[DemandGroup, DemandGroup, DemandGroup, DemandGroup]:
    """Split a tract's two program populations into four (program, vehicle) groups.

    Vehicle populations are tract population times the region's
    program-specific vehicle rate; the no-vehicle population is the exact
    remainder so the four groups always conserve the tract totals.
    mobility_scale multiplies the radii of the medicaid groups only.
    """
    region = regions[tract.region_id]
    groups = []
    for program, pop, rate in (
        ("medicaid", tract.pop_medicaid, region.vehicle_rate_medicaid),
        ("other", tract.pop_other, region.vehicle_rate_other),
    ):
        # re-derive the vehicle population from the rounded remainder so the
        # pair sums back to the tract total bit-exactly (<= 1 ulp nudge)
        no_veh_pop = pop - pop * rate
        veh_pop = pop - no_veh_pop
        scale = mobility_scale if program == "medicaid" else 1.0
        groups.append(DemandGroup(tract.id, program, True, veh_pop, radius_vehicle * scale))
        groups.append(DemandGroup(tract.id, program, False, no_veh_pop, radius_no_vehicle * scale))
    return tuple(groups)


def build_groups(
    dataset: Dataset,
    mobility_scale: float = 1.0,
    radius_vehicle: float = DEFAULT_RADIUS_VEHICLE,
    radius_no_vehicle: float = DEFAULT_RADIUS_NO_VEHICLE,
) -> list[DemandGroup]:
    """All demand groups of a dataset in canonical order (tract order, 4 per tract)."""
    out = []
    for tract in dataset.tracts:
        out.extend(
            split_demand(tract, dataset.regions, mobility_scale, radius_vehicle, radius_no_vehicle)
        )
    return out


@dataclass(frozen=True)
class EdgeSet:
    """Eligible group-to-site edges in canonical order.

    Arrays are parallel: edge e runs from groups[group_idx[e]] to
    sites[site_idx[e]] at great-circle distance dist[e] miles. Order is
    (group, distance, site id), which downstream solvers rely on for
    reproducibility.
    """

    group_idx: np.ndarray
    site_idx: np.ndarray
    dist: np.ndarray

    def __len__(self):
        return int(self.group_idx.size)

    def as_tuples(self, groups, sites):
        return [
            (groups[g], sites[s], float(d))
            for g, s, d in zip(self.group_idx, self.site_idx, self.dist)
        ]


def eligible_edges(
    groups: list[DemandGroup],
    dataset: Dataset,
    acceptance: dict[str, bool],
) -> EdgeSet:
    """Edges (g, j, d) with d <= the group's radius, medicaid gated by acceptance.

    acceptance must cover every site id. Enlarging a radius or flipping an
    acceptance flag false -> true can only add edges.
    """
    n_sites = len(dataset.sites)
    if n_sites == 0:
        empty = np.empty(0)
        return EdgeSet(empty.astype(np.int64), empty.astype(np.int64), empty.astype(float))
    accept_vec = np.array([bool(acceptance[s.id]) for s in dataset.sites])
    dist_m = dataset.distance_matrix
    id_rank = dataset._site_id_rank

    g_parts, s_parts, d_parts = [], [], []
    for gi, group in enumerate(groups):
        row = dist_m[dataset.tract_index[group.tract_id]]
        mask = row <= group.radius
        if group.program == "medicaid":
            mask = mask & accept_vec
        sites_j = np.nonzero(mask)[0]
        if sites_j.size == 0:
            continue
        d = row[sites_j]
        order = np.lexsort((id_rank[sites_j], d))
        sites_j = sites_j[order]
        g_parts.append(np.full(sites_j.size, gi, dtype=np.int64))
        s_parts.append(sites_j.astype(np.int64))
        d_parts.append(d[order])

    if not g_parts:
        empty = np.empty(0)
        return EdgeSet(empty.astype(np.int64), empty.astype(np.int64), empty.astype(float))
    return EdgeSet(
        np.concatenate(g_parts), np.concatenate(s_parts), np.concatenate(d_parts)
    )
