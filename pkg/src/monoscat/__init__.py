"""Shape reconstruction from far-field scattering data with
monotonicity-based box constraints."""

from .born import (SensitivityStack, born_far_field, linearized_residual,
                   sensitivity_matrix, sensitivity_stack)
from .cli import ExperimentConfig, main, run_pipeline, selftest, simulate
from .exceptions import (ConfigError, DefinitenessError, GeometryError,
                         InputError, MonoscatError, OracleError,
                         PipelineError, SingularMatrixError)
from .forward import (FarFieldMatrix, ForwardField, NoiseModel, add_noise,
                      disk_mie_far_field, far_field_matrix,
                      linearized_far_field, solve_total_fields)
from .geometry import (ContrastField, DirectionSet, PixelGrid, ShapeSpec,
                       build_grid, default_shapes, directions, rasterize,
                       true_support_mask)
from .linalg import eigh, geneig_definite, hermitian_part, solve_dense
from .monotonicity import (MonotonicityBounds, admissible_bounds, beta_star,
                           beta_star_bisection_oracle, defect_count)
from .reconstruct import (IndicatorField, OptimizerOptions,
                          ReconstructionResult, factorization_indicator,
                          minimize, objective_subgradient, spectral_objective,
                          support_metrics, tikhonov_linearized)

__version__ = "0.1.0"

__all__ = [
    "ExperimentConfig", "FarFieldMatrix", "ForwardField", "NoiseModel",
    "SensitivityStack", "MonotonicityBounds", "ReconstructionResult",
    "IndicatorField", "OptimizerOptions", "ContrastField", "DirectionSet",
    "PixelGrid", "ShapeSpec", "MonoscatError", "InputError", "ConfigError",
    "GeometryError", "DefinitenessError", "SingularMatrixError",
    "OracleError", "PipelineError", "directions", "build_grid", "rasterize",
    "default_shapes", "true_support_mask", "sensitivity_matrix",
    "sensitivity_stack", "born_far_field", "linearized_residual",
    "solve_total_fields", "far_field_matrix", "linearized_far_field",
    "disk_mie_far_field", "add_noise", "defect_count", "beta_star",
    "beta_star_bisection_oracle", "admissible_bounds", "spectral_objective",
    "objective_subgradient", "minimize", "tikhonov_linearized",
    "factorization_indicator", "support_metrics", "hermitian_part", "eigh",
    "geneig_definite", "solve_dense", "run_pipeline", "simulate", "selftest",
    "main",
]
