"""stackedcp: simulator and analysis toolkit for a three-state host-symbiont
spin system (stacked contact process) on finite tori.

States: 0 = empty site, 1 = healthy host, 2 = infected host (host carrying a
symbiont). Hosts follow a contact process; the symbiont population follows a
contact process layered on the hosts, with horizontal infection and optional
recovery.
"""

from stackedcp.model import (
    INFINITE,
    Configuration,
    Params,
    Regime,
    classify_regime,
    invasion_closure,
    neighbor_fraction,
    transition_rates,
)
from stackedcp.observables import (
    check_segregation,
    density_series,
    edge_pair_check,
    edge_speed,
    estimate_lambda_c,
    is_segregated,
    occupied_edges,
    track_edges,
    track_lineage,
)

__version__ = "0.1.0"

__all__ = [
    "INFINITE",
    "Configuration",
    "Params",
    "Regime",
    "check_segregation",
    "classify_regime",
    "density_series",
    "edge_pair_check",
    "edge_speed",
    "estimate_lambda_c",
    "invasion_closure",
    "is_segregated",
    "neighbor_fraction",
    "occupied_edges",
    "track_edges",
    "track_lineage",
    "transition_rates",
    "__version__",
]
