"""Confined-wave survival toolkit.

Propagates a wave function between hard walls, discounts the surviving
population by the per-step wall absorption, and evaluates the closed-form
decay laws of the symmetric box and of a Gaussian packet hitting a single
absorbing wall.
"""

from .box import (
    BoxSpec,
    EigenExpansion,
    ModeConvention,
    beat_frequency,
    box_kernel,
    eigenmode,
    flux_integral_closed,
    mode_energy,
    survival_box,
    survival_box_curve,
    survival_dimensionless,
    survival_two_level,
)
from .core import (
    AbsorberSpec,
    Domain,
    PhysicalParams,
    PrefactorConvention,
    Side,
    SpatialGrid,
    SurvivalCurve,
    WaveField,
    boundary_derivative,
    integrate_time_series,
    l2_norm_sq,
    make_grid,
    require_dirichlet,
)
from .errors import (
    ConfigValidationError,
    ConfigurationError,
    DirichletViolationError,
    NumericError,
    StepResolutionError,
    TailBoundError,
)
from .packet import (
    GaussianPacketSpec,
    ReflectionResult,
    antisymmetric_initial,
    flux_time_integral,
    norm_constant,
    packet_kernel,
    reflection_coefficient,
    wall_flux,
    wall_flux_alt,
    wall_flux_curve,
)
from .propagate import (
    DiscountedField,
    Potential,
    PropagationConfig,
    PropagationResult,
    StepperKind,
    absorb_probability,
    combined_cavity_decay,
    propagate_with_absorption,
    step_crank_nicolson,
    step_feynman_kernel,
    step_spectral_sine,
)
from .scenarios import RunSummary, ScenarioConfig, run_scenario, validate_config

__version__ = "0.1.0"

__all__ = [
    "AbsorberSpec", "BoxSpec", "ConfigValidationError", "ConfigurationError",
    "DirichletViolationError", "DiscountedField", "Domain", "EigenExpansion",
    "GaussianPacketSpec", "ModeConvention", "NumericError", "PhysicalParams",
    "Potential", "PrefactorConvention", "PropagationConfig", "PropagationResult",
    "ReflectionResult", "RunSummary", "ScenarioConfig", "Side", "SpatialGrid",
    "StepResolutionError", "StepperKind", "SurvivalCurve", "TailBoundError",
    "WaveField", "absorb_probability", "antisymmetric_initial", "beat_frequency",
    "boundary_derivative", "box_kernel", "combined_cavity_decay", "eigenmode",
    "flux_integral_closed", "flux_time_integral", "integrate_time_series",
    "l2_norm_sq", "make_grid", "mode_energy", "norm_constant", "packet_kernel",
    "propagate_with_absorption", "reflection_coefficient", "require_dirichlet",
    "run_scenario", "step_crank_nicolson", "step_feynman_kernel",
    "step_spectral_sine", "survival_box", "survival_box_curve",
    "survival_dimensionless", "survival_two_level", "validate_config",
    "wall_flux", "wall_flux_alt", "wall_flux_curve",
]
