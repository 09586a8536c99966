"""Numerical laboratory for canonical point ensembles on the sphere,
their mean-field curvature functionals, and exact-rational stability
thresholds, built so the probabilistic and variational sides can be
cross-checked against each other at desk scale."""

__version__ = "0.1.0"

from .geometry import (
    LogSphere,
    RadialGrid,
    ReferenceData,
    SpherePoint,
    ToricFano,
    build_radial_geometry,
    football,
    lattice_points,
    quadrature,
    round_sphere,
)
from .ensemble import (
    BasisSpec,
    Configuration,
    EmpiricalStats,
    GibbsParams,
    brute_force_log_partition,
    empirical_density,
    energy_per_particle,
    log_partition,
    mcmc_sample,
    slater_log_norm,
)
from .variational import (
    Density,
    Potential,
    coercivity_scan,
    ding,
    duality_gap,
    energy_of_measure,
    ent_star,
    entropy,
    free_energy,
    mabuchi,
    monge_ampere,
    script_energy,
    solve_calabi_yau,
    solve_ke,
)
from .na_stability import (
    CurveValuation,
    ProductValuation,
    ToricValuation,
    delta,
    delta_k,
    expected_vanishing,
    f_na,
    gibbs_stability_check,
    lct_chain,
    log_discrepancy,
    na_energy_per_particle,
    restriction_experiment,
)
