"""Capacitated patient-to-physician assignment as a two-phase min-cost flow.

Phase 1 finds the maximum assignable population by max flow; phase 2
minimizes flow-weighted distance plus a convex congestion charge at that
assignment level. Congestion at each site is the piecewise-linear
interpolation of mu * C_j * (load/C_j)^2 with K equal-width segments on
the site's outflow, so segment k costs mu*(2k-1)/K per unit and segments
fill in increasing-cost order at any optimum.

A site-level medicaid cap m_j * C_j is modeled as a sub-node through
which all medicaid flow into site j must pass. Minimum panel size is
enforced by a closure fixed point: solve, close every open site whose
load is strictly below the threshold, rebuild, repeat.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog
from scipy.sparse.csgraph import connected_components

from ._maxflow import max_flow
from .errors import InvalidCap, SolverError
from .geo import Dataset, DemandGroup, EdgeSet, PhysicianSite, build_groups, eligible_edges

# Default medicaid caseload fractions by practice-site type. Configuration
# defaults only; every scenario can override them.
DEFAULT_BASE_CAPS = {
    "public_hospital": 1.0,
    "community_clinic": 0.75,
    "private_office": 0.30,
}


@dataclass(frozen=True)
class SolverParams:
    mu: float = 1.0            # congestion weight
    k_segments: int = 5        # piecewise-linear segments per site
    p_min: float = 0.0         # minimum viable panel size
    tolerance: float = 1e-9

    def __post_init__(self):
        if self.mu < 0:
            raise ValueError("mu must be >= 0")
        if self.k_segments < 1:
            raise ValueError("k_segments must be >= 1")
        if self.p_min < 0:
            raise ValueError("p_min must be >= 0")


@dataclass(frozen=True)
class FlowNetwork:
    """Assignment network: group supplies, eligible arcs, site capacities.

    seg_widths[j, k] partition capacity C_j exactly (computed as boundary
    differences); seg_unit_costs[k] = mu*(2k-1)/K is shared by all sites.
    open_mask marks sites still in business; arcs into closed sites are
    ignored by the solver.
    """

    groups: tuple[DemandGroup, ...]
    sites: tuple[PhysicianSite, ...]
    edges: EdgeSet
    supplies: np.ndarray
    capacities: np.ndarray
    medicaid_caps: np.ndarray      # absolute patients, m_j * C_j
    seg_widths: np.ndarray         # (n_sites, K)
    seg_unit_costs: np.ndarray     # (K,)
    params: SolverParams
    open_mask: np.ndarray = field(default=None)

    @property
    def n_arcs(self) -> int:
        """Eligible edges + one medicaid sub-node arc and K sink segments per open site."""
        n_open = int(self.open_mask.sum())
        return len(self.edges) + n_open * (1 + self.params.k_segments)

    @property
    def total_supply(self) -> float:
        return float(self.supplies.sum())

    def with_open(self, open_mask: np.ndarray) -> "FlowNetwork":
        return replace(self, open_mask=np.asarray(open_mask, dtype=bool))


@dataclass
class AssignmentSolution:
    """Flows and per-site loads of one solve, in the canonical edge order."""

    groups: tuple[DemandGroup, ...]
    sites: tuple[PhysicianSite, ...]
    edges: EdgeSet
    edge_flows: np.ndarray
    loads: np.ndarray
    medicaid_loads: np.ndarray
    closed_sites: frozenset[str]
    objective: float
    assigned: np.ndarray
    iterations: int

    @property
    def total_assigned(self) -> float:
        return float(self.assigned.sum())

    def flows_map(self) -> dict:
        """(tract_id, program, vehicle, site_id) -> flow, nonzero entries only."""
        out = {}
        for e in np.nonzero(self.edge_flows > 0)[0]:
            g = self.groups[self.edges.group_idx[e]]
            s = self.sites[self.edges.site_idx[e]]
            out[(g.tract_id, g.program, g.vehicle, s.id)] = float(self.edge_flows[e])
        return out

    def load_by_id(self) -> dict:
        return {s.id: float(self.loads[j]) for j, s in enumerate(self.sites)}


# ----------------------------------------------------------------------
# Network construction
# ----------------------------------------------------------------------

def build_network(
    groups,
    sites,
    edges: EdgeSet,
    caps: dict[str, float],
    params: SolverParams,
) -> FlowNetwork:
    """Assemble the flow network; caps maps site id to a medicaid fraction."""
    sites = tuple(sites)
    groups = tuple(groups)
    capacities = np.array([s.capacity for s in sites], dtype=float)
    frac = np.empty(len(sites))
    for j, s in enumerate(sites):
        c = caps[s.id]
        if not (0.0 <= c <= 1.0):
            raise InvalidCap(s.id, c)
        frac[j] = c
    supplies = np.array([g.population for g in groups], dtype=float)
    k = params.k_segments
    # boundaries C_j*k/K, widths as differences so they sum to C_j exactly
    bounds = capacities[:, None] * (np.arange(k + 1) / k)[None, :]
    seg_widths = np.diff(bounds, axis=1)
    seg_unit_costs = params.mu * (2.0 * np.arange(1, k + 1) - 1.0) / k
    return FlowNetwork(
        groups=groups,
        sites=sites,
        edges=edges,
        supplies=supplies,
        capacities=capacities,
        medicaid_caps=frac * capacities,
        seg_widths=seg_widths,
        seg_unit_costs=seg_unit_costs,
        params=params,
        open_mask=np.ones(len(sites), dtype=bool),
    )


# ----------------------------------------------------------------------
# Two-phase solve
# ----------------------------------------------------------------------

def _phase1_max_assigned(n_g, n_s, eg, es, supplies, caps, mcaps, is_med):
    """Max-flow value through groups -> (medicaid sub-node) -> sites -> sink."""
    # node layout: groups [0, n_g), msub [n_g, n_g+n_s), sites [n_g+n_s, n_g+2n_s)
    src = n_g + 2 * n_s
    snk = src + 1
    site_node = n_g + n_s + es
    entry = np.where(is_med, n_g + es, site_node)
    arc_from = np.concatenate([
        np.full(n_g, src, dtype=np.int64),
        eg,
        n_g + np.arange(n_s, dtype=np.int64),
        n_g + n_s + np.arange(n_s, dtype=np.int64),
    ])
    arc_to = np.concatenate([
        np.arange(n_g, dtype=np.int64),
        entry,
        n_g + n_s + np.arange(n_s, dtype=np.int64),
        np.full(n_s, snk, dtype=np.int64),
    ])
    arc_cap = np.concatenate([supplies, supplies[eg], mcaps, caps])
    return max_flow(snk + 1, arc_from, arc_to, arc_cap, src, snk)


def _phase2_min_cost(n_g, n_s, eg, es, dist, supplies, caps, mcaps, is_med,
                     seg_w, seg_c, f_star):
    """Min (distance + congestion) cost at total assigned = f_star via LP."""
    n_e = eg.size
    K = seg_c.size
    n_seg = n_s * K
    nv = n_e + n_seg
    e_ix = np.arange(n_e)

    med_rows = np.nonzero(is_med)[0]
    a_ub = sp.csc_matrix(
        (np.ones(n_e + med_rows.size),
         (np.concatenate([eg, n_g + es[med_rows]]),
          np.concatenate([e_ix, med_rows]))),
        shape=(n_g + n_s, nv))
    b_ub = np.concatenate([supplies, mcaps])

    seg_site = np.repeat(np.arange(n_s), K)
    a_eq = sp.csc_matrix(
        (np.concatenate([np.ones(n_e), -np.ones(n_seg), np.ones(n_e)]),
         (np.concatenate([es, seg_site, np.full(n_e, n_s)]),
          np.concatenate([e_ix, n_e + np.arange(n_seg), e_ix]))),
        shape=(n_s + 1, nv))
    b_eq = np.concatenate([np.zeros(n_s), [f_star]])

    var_bounds = np.zeros((nv, 2))
    var_bounds[:n_e, 1] = np.inf
    var_bounds[n_e:, 1] = seg_w.ravel()
    c = np.concatenate([dist, np.tile(seg_c, n_s)])

    res = linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq,
                  bounds=var_bounds, method="highs")
    if res.status != 0:
        raise SolverError(
            f"phase-2 LP failed: {res.message}",
            diagnostics={"status": res.status, "n_vars": nv, "f_star": f_star},
        )
    return res.x[:n_e], res.x[n_e:].reshape(n_s, K), float(res.fun)


def solve(network: FlowNetwork, params: SolverParams | None = None) -> AssignmentSolution:
    """Lexicographic optimum: maximize assigned population, then minimize cost.

    Deterministic given the canonical edge ordering. Only arcs into open
    sites participate; closed sites keep zero load. Always feasible (the
    zero flow assigns nobody).
    """
    if params is None:
        params = network.params
    n_groups = len(network.groups)
    n_sites = len(network.sites)
    edges = network.edges
    flows = np.zeros(len(edges))
    loads = np.zeros(n_sites)
    med_loads = np.zeros(n_sites)
    assigned = np.zeros(n_groups)
    objective = 0.0
    closed = frozenset(
        s.id for j, s in enumerate(network.sites) if not network.open_mask[j]
    )

    if len(edges) == 0 or n_sites == 0:
        return AssignmentSolution(
            network.groups, network.sites, edges, flows, loads, med_loads,
            closed, objective, assigned, 1,
        )

    is_med_group = np.array([g.program == "medicaid" for g in network.groups])
    # active edges: open site, positive supply
    active = network.open_mask[edges.site_idx] & (network.supplies[edges.group_idx] > 0)
    act_ix = np.nonzero(active)[0]
    if act_ix.size == 0:
        return AssignmentSolution(
            network.groups, network.sites, edges, flows, loads, med_loads,
            closed, objective, assigned, 1,
        )

    eg_all = edges.group_idx[act_ix]
    es_all = edges.site_idx[act_ix]
    d_all = edges.dist[act_ix]

    # split into connected components of the bipartite eligibility graph;
    # phases decompose exactly across components
    g_ids, g_inv = np.unique(eg_all, return_inverse=True)
    s_ids, s_inv = np.unique(es_all, return_inverse=True)
    n_g, n_s = g_ids.size, s_ids.size
    adj = sp.csr_matrix(
        (np.ones(act_ix.size), (g_inv, n_g + s_inv)),
        shape=(n_g + n_s, n_g + n_s))
    n_comp, labels = connected_components(adj, directed=False)

    edge_comp = labels[g_inv]
    for comp in range(n_comp):
        in_comp = np.nonzero(edge_comp == comp)[0]
        if in_comp.size == 0:
            continue
        cg, cg_inv = np.unique(g_inv[in_comp], return_inverse=True)
        cs, cs_inv = np.unique(s_inv[in_comp], return_inverse=True)
        sup = network.supplies[g_ids[cg]]
        cap = network.capacities[s_ids[cs]]
        mcap = network.medicaid_caps[s_ids[cs]]
        is_med = is_med_group[g_ids[cg]][cg_inv]
        dist = d_all[in_comp]

        f_star = _phase1_max_assigned(
            cg.size, cs.size, cg_inv.astype(np.int64), cs_inv.astype(np.int64),
            sup, cap, mcap, is_med)
        if f_star <= 0.0:
            continue
        e_flow, seg_flow, cost = _phase2_min_cost(
            cg.size, cs.size, cg_inv, cs_inv, dist, sup, cap, mcap, is_med,
            network.seg_widths[s_ids[cs]], network.seg_unit_costs, f_star)

        e_flow = np.maximum(e_flow, 0.0)
        flows[act_ix[in_comp]] = e_flow
        np.add.at(loads, es_all[in_comp], e_flow)
        np.add.at(med_loads, es_all[in_comp][is_med], e_flow[is_med])
        np.add.at(assigned, eg_all[in_comp], e_flow)
        objective += cost

    return AssignmentSolution(
        network.groups, network.sites, edges, flows, loads, med_loads,
        closed, objective, assigned, 1,
    )


def enforce_min_panel(
    dataset: Dataset,
    params: SolverParams,
    caps: dict[str, float],
    acceptance: dict[str, bool],
    groups: list[DemandGroup] | None = None,
    edges: EdgeSet | None = None,
) -> AssignmentSolution:
    """Fixed point of solve-then-close for the minimum panel size.

    Each round closes every open site whose load falls strictly below
    p_min (beyond tolerance) and re-solves without it. The open set
    shrinks strictly, so this terminates in at most n_sites + 1 solves.
    """
    if groups is None:
        groups = build_groups(dataset)
    if edges is None:
        edges = eligible_edges(groups, dataset, acceptance)
    network = build_network(groups, dataset.sites, edges, caps, params)

    iterations = 0
    while True:
        solution = solve(network, params)
        iterations += 1
        below = (network.open_mask
                 & (solution.loads < params.p_min - params.tolerance))
        if not below.any():
            break
        network = network.with_open(network.open_mask & ~below)

    solution.iterations = iterations
    return solution


# ----------------------------------------------------------------------
# Acceptance realizations and caseload caps
# ----------------------------------------------------------------------

def realize_acceptance(sites, counties, seed: int) -> dict[str, bool]:
    """Draw which sites accept medicaid, matching county rates exactly.

    In a county with n sites and rate r, exactly floor(r*n + 0.5) sites
    accept; the subset comes from a seeded shuffle of the county's sorted
    site ids, so the draw is deterministic given the seed.
    """
    by_county: dict[str, list[str]] = {}
    for s in sites:
        by_county.setdefault(s.county_id, []).append(s.id)
    rng = np.random.default_rng(np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF]))
    out = {}
    for county_id in sorted(by_county):
        ids = sorted(by_county[county_id])
        entry = counties[county_id]
        rate = entry.acceptance_rate if hasattr(entry, "acceptance_rate") else float(entry)
        n_accept = int(math.floor(rate * len(ids) + 0.5))
        perm = rng.permutation(len(ids))
        chosen = {ids[i] for i in perm[:n_accept]}
        for sid in ids:
            out[sid] = sid in chosen
    return out


def caseload_caps(
    sites,
    base_caps: dict[str, float] | None = None,
    caseload_scale: float = 1.0,
) -> dict[str, float]:
    """Per-site medicaid fraction: min(1, base fraction for the site type * scale)."""
    if base_caps is None:
        base_caps = DEFAULT_BASE_CAPS
    if caseload_scale < 0:
        raise ValueError("caseload_scale must be >= 0")
    return {s.id: min(1.0, base_caps[s.site_type] * caseload_scale) for s in sites}


def pwl_congestion_cost(load: float, capacity: float, mu: float, k_segments: int) -> float:
    """Piecewise-linear congestion charge for one site at a given load.

    Greedy fill of the K segments; interpolates mu * C * (load/C)^2 at
    segment boundaries. Used for reporting and by test oracles.
    """
    if capacity <= 0 or load <= 0:
        return 0.0
    k = k_segments
    bounds = capacity * np.arange(k + 1) / k
    widths = np.diff(bounds)
    unit = mu * (2.0 * np.arange(1, k + 1) - 1.0) / k
    remaining = load
    cost = 0.0
    for w, u in zip(widths, unit):
        take = min(remaining, w)
        cost += take * u
        remaining -= take
        if remaining <= 0:
            break
    return cost
