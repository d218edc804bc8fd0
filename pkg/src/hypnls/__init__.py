"""Numerical laboratory for the focusing NLS on hyperbolic space H^n.

Radial geometry and quadrature (hypgeom), conserved functionals and virial
identities (functionals), ground-state solver and constrained minimization
(groundstate), time integration with blow-up detection (evolve), H^3 radial
Fourier analysis (spectral), and the experiment CLI (expcli).
"""

from .hypgeom import (
    RadialGrid,
    build_grid,
    quadrature,
    apply_laplacian,
    dirichlet_energy,
    spectrum_bottom,
)
from .functionals import (
    RadialField,
    ParameterMismatch,
    mass,
    energy,
    energy_lambda,
    delta_lambda,
    hlam_norm_sq,
    h_norm_sq,
    h1_norm_sq,
    G_functional,
    H_aux,
    localized_virial_rhs,
    default_cutoff,
    compute_diagnostics,
    trapping_sign_check,
    variational_bound_check,
    quartic_inequality_scan,
    pm_coefficient_positivity,
)
from .groundstate import (
    GroundState,
    NoGroundState,
    ShootingFailure,
    solve_ground_state,
    verify_identities,
    mass_constrained_minimize,
    FlowParams,
    MassCurvePoint,
)
from .evolve import (
    IntegratorConfig,
    RunOutcome,
    step,
    evolve_run,
    conjugate_datum,
    virial_consistency,
    scattering_proxy,
)
from .spectral import (
    UnsupportedDimension,
    SpectralProfile,
    radial_fourier,
    inverse_fourier,
    parseval_residual,
    apply_Pm,
    heat_semigroup,
    hs_norm,
    besov_norm,
    reconstruction_residual,
    refined_sobolev_ratio,
)

__version__ = "0.1.0"

__all__ = [
    "RadialGrid",
    "build_grid",
    "quadrature",
    "apply_laplacian",
    "dirichlet_energy",
    "spectrum_bottom",
    "RadialField",
    "ParameterMismatch",
    "mass",
    "energy",
    "energy_lambda",
    "delta_lambda",
    "hlam_norm_sq",
    "h_norm_sq",
    "h1_norm_sq",
    "G_functional",
    "H_aux",
    "localized_virial_rhs",
    "default_cutoff",
    "compute_diagnostics",
    "trapping_sign_check",
    "variational_bound_check",
    "quartic_inequality_scan",
    "pm_coefficient_positivity",
    "GroundState",
    "NoGroundState",
    "ShootingFailure",
    "solve_ground_state",
    "verify_identities",
    "mass_constrained_minimize",
    "FlowParams",
    "MassCurvePoint",
    "IntegratorConfig",
    "RunOutcome",
    "step",
    "evolve_run",
    "conjugate_datum",
    "virial_consistency",
    "scattering_proxy",
    "UnsupportedDimension",
    "SpectralProfile",
    "radial_fourier",
    "inverse_fourier",
    "parseval_residual",
    "apply_Pm",
    "heat_semigroup",
    "hs_norm",
    "besov_norm",
    "reconstruction_residual",
    "refined_sobolev_ratio",
]
