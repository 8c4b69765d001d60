"""Numerical toolkit for the mirrored FitzHugh-Nagumo model.

Phase-plane objects live in :mod:`model`, time integration in :mod:`dynamics`,
the equilibrium census in :mod:`equilibria`, the organizing-center algebra in
:mod:`normalform`, bifurcation continuation in :mod:`continuation`, region
labels and excitability signatures in :mod:`classify`, and slow-fast
decomposition plus epsilon sweeps in :mod:`gspt`.
"""
from .model import (
    I_STAR,
    TC_POINT,
    ModelParams,
    OrganizingCenter,
    PhaseState,
    delta0,
    dn_inf,
    interaction_sign,
    jacobian,
    k_slope,
    n0_star,
    n_inf,
    n_nullcline,
    organizing_center,
    v0_star,
    v_nullcline,
    vector_field,
)
from .normalform import (
    DegeneracyReport,
    NormalCoords,
    center_dynamics,
    center_roots,
    degeneracy_report,
    from_normal,
    to_normal,
    v_dot_normal,
)
from .dynamics import (
    Event,
    IntegrationError,
    IntegratorOptions,
    Section,
    StimulusProtocol,
    Trajectory,
    detect_spikes,
    integrate,
    integrate_layer,
    integrate_protocol,
)
from .equilibria import Equilibrium, ManifoldSeed, classify_equilibrium, find_equilibria, find_saddle, manifold_arc
from .continuation import (
    BifurcationDiagram,
    BifurcationPoint,
    BracketInvalid,
    CycleAmbiguous,
    EquilibriumBranch,
    LimitCycle,
    SectionError,
    SectionGap,
    bifurcation_diagram,
    detect_snic,
    equilibrium_branch,
    find_homoclinic,
    find_limit_cycle,
    homoclinic_loop,
    section_gap,
)
from .classify import (
    Chart,
    RegionLabel,
    Unclassifiable,
    bistable_range,
    chart,
    detect_adp,
    fi_curve,
    measure_latency,
    region_at,
    signature_battery,
)
from .gspt import (
    ScalingStudy,
    bistability_persistence,
    compute_ic,
    critical_manifold,
    gap_monotonicity_check,
    homoclinic_absence_check,
    ic_sweep,
    latency_scaling,
    layer_flow,
    reduced_flow,
    singular_orbit,
)

__version__ = "0.1.0"
