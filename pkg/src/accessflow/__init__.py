"""Tract-level accessibility modeling: assignment, measures, sweeps, SVC fits."""

from .assignment import (
    DEFAULT_BASE_CAPS,
    AssignmentSolution,
    FlowNetwork,
    SolverParams,
    build_network,
    caseload_caps,
    enforce_min_panel,
    realize_acceptance,
    solve,
)
from .geo import (
    County,
    Dataset,
    DemandGroup,
    EdgeSet,
    PhysicianSite,
    Region,
    Tract,
    build_groups,
    distance_miles,
    eligible_edges,
    load_dataset,
    load_dataset_dir,
    split_demand,
    write_dataset,
)

__version__ = "0.1.0"
