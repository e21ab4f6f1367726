"""Deterministic synthetic geography: urban cores, rural periphery, scarce supply.

Generates Georgia-like instances: counties on a grid over a state-sized
bounding box, tract centroids clustered around a few urban cores with a
rural background, physician sites concentrated where density is high
(probability proportional to density^gamma), and tract covariates built
from the density surface plus smooth spatial noise. Everything is drawn
from one seeded generator in a fixed order, so a seed pins the dataset
bit-for-bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .geo import (
    COVARIATE_NAMES,
    County,
    Dataset,
    PhysicianSite,
    Region,
    Tract,
    haversine_matrix,
)

# Bounding box, roughly Georgia's extent
LAT_MIN, LAT_MAX = 30.6, 35.0
LON_MIN, LON_MAX = -85.6, -81.0

# Urban core positions as (lon fraction, lat fraction) of the box, with
# sampling weights; the first core is the dominant metro.
CORE_FRACTIONS = ((0.33, 0.68), (0.82, 0.55), (0.80, 0.12), (0.10, 0.38),
                  (0.55, 0.30), (0.25, 0.10))
CORE_WEIGHTS = (0.33, 0.25, 0.23, 0.19, 0.10, 0.08)

SITE_TYPE_SHARES = (("public_hospital", 0.08), ("community_clinic", 0.22),
                    ("private_office", 0.70))


@dataclass(frozen=True)
class SynthParams:
    n_counties: int = 159
    n_tracts: int = 2000
    n_physicians: int = 768
    n_urban_cores: int = 4
    n_regions: int = 63
    density_decay_miles: float = 30.0   # core cluster spread (std dev)
    supply_exponent: float = 3.0        # gamma: site probability ~ density^gamma
    medicaid_gradient: float = 0.45     # extra medicaid share in low-density tracts
    acceptance_mean: float = 0.65
    urban_fraction: float = 0.62        # share of tracts attached to a core
    rural_site_share: float = 0.22      # sites scattered uniformly over counties
    mean_tract_pop: float = 1100.0
    capacity_mean: float = 2800.0
    seed: int = 0

    def __post_init__(self):
        if min(self.n_counties, self.n_tracts, self.n_urban_cores, self.n_regions) <= 0:
            raise ValueError("counts must be positive")
        if self.n_physicians < 0:
            raise ValueError("n_physicians must be >= 0")
        if self.supply_exponent < 1.0:
            raise ValueError("supply_exponent must be >= 1")


def georgia_preset() -> SynthParams:
    """Shipped preset: 159 counties, ~2000 tracts, 768 physicians, 4 cores.

    The supply exponent is tuned so roughly a third of the counties end
    up with no physician at the default seed.
    """
    return SynthParams()


# ----------------------------------------------------------------------
# helpers
# ----------------------------------------------------------------------

def _miles_per_deg(lat):
    lat_scale = 2.0 * math.pi * 3958.7613 / 360.0
    return lat_scale, lat_scale * math.cos(math.radians(lat))


def _smooth_field(rng, lon_frac, lat_frac, n_waves=6):
    """Random smooth surface over the unit square, scaled to [0, 1]."""
    out = np.zeros(lon_frac.shape)
    for _ in range(n_waves):
        u, v = rng.uniform(0.5, 2.5, 2)
        phase = rng.uniform(0, 2 * math.pi)
        amp = rng.uniform(0.4, 1.0)
        out += amp * np.cos(2 * math.pi * (u * lon_frac + v * lat_frac) + phase)
    lo, hi = out.min(), out.max()
    if hi - lo < 1e-12:
        return np.full(out.shape, 0.5)
    return (out - lo) / (hi - lo)


def _grid_shape(n_counties):
    """Columns x rows covering n_counties in row-major scan order."""
    n_cols = max(1, int(round(math.sqrt(n_counties * (LON_MAX - LON_MIN) * 0.85
                                        / (LAT_MAX - LAT_MIN)))))
    n_rows = math.ceil(n_counties / n_cols)
    return n_cols, n_rows


# ----------------------------------------------------------------------
# generator
# ----------------------------------------------------------------------

def generate(params: SynthParams) -> Dataset:
    """Build a full synthetic Dataset; bit-identical for identical params."""
    rng = np.random.default_rng(np.random.SeedSequence([params.seed & 0xFFFFFFFFFFFFFFFF]))
    lat_mid = 0.5 * (LAT_MIN + LAT_MAX)
    mi_per_lat, mi_per_lon = _miles_per_deg(lat_mid)

    # counties: row-major grid cells over the box
    n_cols, n_rows = _grid_shape(params.n_counties)
    cell_h = (LAT_MAX - LAT_MIN) / n_rows
    cell_w = (LON_MAX - LON_MIN) / n_cols

    def county_of(lat, lon):
        row = min(n_rows - 1, max(0, int((lat - LAT_MIN) / cell_h)))
        col = min(n_cols - 1, max(0, int((lon - LON_MIN) / cell_w)))
        idx = row * n_cols + col
        return min(idx, params.n_counties - 1)

    county_ids = [f"c{i:03d}" for i in range(params.n_counties)]

    # regions: consecutive counties in scan order, near-equal chunks
    region_of_county = np.zeros(params.n_counties, dtype=int)
    n_regions = min(params.n_regions, params.n_counties)
    base, extra = divmod(params.n_counties, n_regions)
    start = 0
    for r in range(n_regions):
        size = base + (1 if r < extra else 0)
        region_of_county[start:start + size] = r
        start += size
    region_ids = [f"r{i:02d}" for i in range(n_regions)]

    # urban cores
    n_cores = min(params.n_urban_cores, len(CORE_FRACTIONS))
    cores = np.array([
        (LAT_MIN + f_lat * (LAT_MAX - LAT_MIN), LON_MIN + f_lon * (LON_MAX - LON_MIN))
        for f_lon, f_lat in CORE_FRACTIONS[:n_cores]
    ])
    weights = np.array(CORE_WEIGHTS[:n_cores], dtype=float)
    weights /= weights.sum()
    # the dominant metro sprawls wider than the secondary cities
    sigmas = np.full(n_cores, params.density_decay_miles)
    sigmas[0] *= 1.3

    # tract centroids: urban share around cores, the rest uniform
    n_urban = int(round(params.urban_fraction * params.n_tracts))
    core_pick = rng.choice(n_cores, size=n_urban, p=weights)
    angles = rng.uniform(0, 2 * math.pi, n_urban)
    radii = np.abs(rng.normal(0.0, 1.0, n_urban)) * sigmas[core_pick]
    lat_u = cores[core_pick, 0] + radii * np.sin(angles) / mi_per_lat
    lon_u = cores[core_pick, 1] + radii * np.cos(angles) / mi_per_lon
    n_rural = params.n_tracts - n_urban
    lat_r = rng.uniform(LAT_MIN, LAT_MAX, n_rural)
    lon_r = rng.uniform(LON_MIN, LON_MAX, n_rural)
    lat = np.clip(np.concatenate([lat_u, lat_r]), LAT_MIN + 1e-4, LAT_MAX - 1e-4)
    lon = np.clip(np.concatenate([lon_u, lon_r]), LON_MIN + 1e-4, LON_MAX - 1e-4)

    # density surface from core kernels (drives covariates and metro supply)
    tract_pts = np.column_stack([lat, lon])
    d_core = haversine_matrix(tract_pts, cores)
    kernel = np.exp(-0.5 * (d_core / sigmas[None, :]) ** 2)
    density_raw = (kernel * weights[None, :]).sum(axis=1) + 0.002
    dens_norm = density_raw / density_raw.max()

    lon_frac = (lon - LON_MIN) / (LON_MAX - LON_MIN)
    lat_frac = (lat - LAT_MIN) / (LAT_MAX - LAT_MIN)
    noise = [_smooth_field(rng, lon_frac, lat_frac) for _ in range(5)]

    total_pop = rng.lognormal(mean=math.log(params.mean_tract_pop), sigma=0.45,
                              size=params.n_tracts)
    med_share = np.clip(
        0.18 + params.medicaid_gradient * (1.0 - dens_norm)
        + 0.08 * (noise[0] - 0.5),
        0.05, 0.90,
    )
    pop_med = total_pop * med_share
    pop_other = total_pop - pop_med

    income = 26000.0 + 62000.0 * np.clip(0.45 * dens_norm + 0.55 * noise[1], 0, 1)
    education = np.clip(0.07 + 0.55 * (0.5 * dens_norm + 0.5 * noise[1]), 0.02, 0.95)
    unemployment = np.clip(0.03 + 0.09 * (1 - dens_norm) + 0.05 * (noise[2] - 0.5), 0.005, 0.4)
    nonwhite = np.clip(0.12 + 0.62 * noise[3], 0.0, 1.0)
    diversity = np.clip(2.0 * nonwhite * (1.0 - nonwhite) + 0.15 * (noise[4] - 0.5), 0.0, 1.0)
    density_cov = dens_norm * 3500.0 + 12.0

    # physician sites: a small-town contingent scattered uniformly over
    # county cells (sets how many counties have any physician at all), the
    # remainder hosted near density^gamma-weighted tracts
    n_phys = params.n_physicians
    sites = []
    if n_phys > 0:
        n_town = int(round(params.rural_site_share * n_phys))
        n_metro = n_phys - n_town
        site_p = density_raw ** params.supply_exponent
        site_p = site_p / site_p.sum()
        host = rng.choice(params.n_tracts, size=n_metro, p=site_p)
        jitter_mi = rng.normal(0.0, 1.5, (n_metro, 2))
        m_lat = lat[host] + jitter_mi[:, 0] / mi_per_lat
        m_lon = lon[host] + jitter_mi[:, 1] / mi_per_lon
        town_county = rng.integers(0, params.n_counties, n_town)
        t_row, t_col = town_county // n_cols, town_county % n_cols
        t_lat = LAT_MIN + (t_row + rng.uniform(0.15, 0.85, n_town)) * cell_h
        t_lon = LON_MIN + (t_col + rng.uniform(0.15, 0.85, n_town)) * cell_w
        s_lat = np.clip(np.concatenate([m_lat, t_lat]), LAT_MIN + 1e-4, LAT_MAX - 1e-4)
        s_lon = np.clip(np.concatenate([m_lon, t_lon]), LON_MIN + 1e-4, LON_MAX - 1e-4)
        type_draw = rng.random(n_phys)
        capacity = np.maximum(400.0, rng.lognormal(math.log(params.capacity_mean), 0.35, n_phys))
        for i in range(n_phys):
            t = type_draw[i]
            acc = 0.0
            for name, share in SITE_TYPE_SHARES:
                acc += share
                if t < acc:
                    site_type = name
                    break
            else:
                site_type = SITE_TYPE_SHARES[-1][0]
            sites.append(PhysicianSite(
                id=f"p{i:04d}",
                lat=float(s_lat[i]),
                lon=float(s_lon[i]),
                county_id=county_ids[county_of(s_lat[i], s_lon[i])],
                site_type=site_type,
                capacity=float(np.round(capacity[i], 1)),
            ))

    # distance to the nearest hospital-type site (or nearest core if none)
    hosp_pts = np.array([[s.lat, s.lon] for s in sites if s.site_type == "public_hospital"])
    if hosp_pts.size:
        dist_hosp = haversine_matrix(tract_pts, hosp_pts).min(axis=1)
    else:
        dist_hosp = d_core.min(axis=1)

    tracts = []
    for i in range(params.n_tracts):
        covs = dict(zip(COVARIATE_NAMES, (
            float(np.round(income[i], 2)),
            float(np.round(education[i], 4)),
            float(np.round(unemployment[i], 4)),
            float(np.round(nonwhite[i], 4)),
            float(np.round(density_cov[i], 3)),
            float(np.round(dist_hosp[i], 3)),
            float(np.round(diversity[i], 4)),
        )))
        cty = county_of(lat[i], lon[i])
        tracts.append(Tract(
            id=f"t{i:04d}",
            lat=float(lat[i]),
            lon=float(lon[i]),
            county_id=county_ids[cty],
            region_id=region_ids[region_of_county[cty]],
            pop_medicaid=float(np.round(pop_med[i], 3)),
            pop_other=float(np.round(pop_other[i], 3)),
            covariates=covs,
        ))

    counties = {}
    accept = np.clip(rng.normal(params.acceptance_mean, 0.12, params.n_counties), 0.15, 1.0)
    for i, cid in enumerate(county_ids):
        counties[cid] = County(cid, float(np.round(accept[i], 4)))

    regions = {}
    veh_other = rng.uniform(0.86, 0.97, n_regions)
    gap = rng.uniform(0.10, 0.28, n_regions)
    for r, rid in enumerate(region_ids):
        vm = max(0.45, veh_other[r] - gap[r])
        regions[rid] = Region(rid, float(np.round(vm, 4)), float(np.round(veh_other[r], 4)))

    return Dataset(tracts, sites, counties, regions)


def physician_free_county_share(dataset: Dataset) -> float:
    """Fraction of counties with no physician site."""
    with_site = {s.county_id for s in dataset.sites}
    n = len(dataset.counties)
    return (n - len(with_site & set(dataset.counties))) / n
