"""Synchronization thresholds, hypothesis audits and simulation for coupled oscillator networks."""
from .domain import DomainDescriptor, DomainError, Sampler
from .dynamics import (
    CouplingFunction,
    ModelError,
    OscillatorModel,
    chua_coupling,
    chua_field,
    chua_slope_bound,
    chua_weights,
    fhn_coupling,
    fhn_field,
    fhn_weights,
)
from .graph import (
    BoundReport,
    GraphError,
    PathChoice,
    UndirectedGraph,
    build_graph,
    choose_paths,
    connection_graph_bound,
    diameter,
    generic_bound,
    verify_bound_sampled,
)
from .pseudometric import (
    Pseudometric,
    RhoSequence,
    combine,
    exp_damped_pseudometric,
    induced_pseudometric,
    power_pseudometric,
    rho_power_bound_check,
)
from .simulator import (
    NetworkSystem,
    SyncReport,
    Trajectory,
    assemble,
    ball_containment,
    delta_vector,
    integrate,
    lyapunov_v,
    sync_report,
)
from .stability import (
    AuditReport,
    GrowthEnvelope,
    audit_antisymmetry,
    audit_dissipativity,
    audit_pseudometric,
    audit_separation,
    audit_wintner,
    chua_star_threshold,
    epsilon_certified,
    epsilon_star,
    fhn_generic_threshold,
)

__version__ = "0.1.0"
