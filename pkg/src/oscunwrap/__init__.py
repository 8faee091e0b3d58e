"""Classical simulation of oscillator-to-oscillator bosonic codes:
exact maximum-likelihood decoding of modulo-reduced Gaussian vectors,
Monte-Carlo success-probability estimation, and analytic bound verification.
"""

from .bounds import (
    BoundReport,
    DegenerateVoronoiGeometry,
    ball_mass,
    bound_report,
    check_schur_eigen_bound,
    corollary_bound,
    in_degenerate_voronoi,
    in_polytope,
    run_lemma_checks,
    schur_complement,
    schur_variant_bound,
    theorem_bound,
)
from .code import (
    DELTA,
    LogicalError,
    OscillatorCode,
    Syndrome,
    centered_modulo,
    load_code_file,
)
from .errors import (
    BudgetExceeded,
    ConfigError,
    DimensionError,
    DomainError,
    NotSymplectic,
    NumericalFailure,
    OscUnwrapError,
    SearchBudgetExceeded,
)
from .montecarlo import (
    EpsRecord,
    EstimateReport,
    ExperimentSpec,
    LogicalSummary,
    build_problem,
    clopper_pearson,
    estimate_psucc,
    logical_error_samples,
)
from .noise import GaussianDensity, NoiseModel, log_density, sample_displacement, trial_stream
from .symplectic import (
    EulerDecomposition,
    SymplecticMatrix,
    compose,
    euler_decompose,
    identity_code_matrix,
    inverse,
    load_matrix_file,
    random_orthogonal_symplectic,
    random_symplectic,
    save_matrix_file,
    squeezing_measure,
    two_mode_squeezer,
    validate_symplectic,
)
from .unwrap import (
    DecodeResult,
    UnwrapProblem,
    brute_force_estimate,
    decode_success,
    map_estimate,
    map_estimate_batch,
    modulo_reduce,
)

__version__ = "0.1.0"

__all__ = [
    "BoundReport",
    "BudgetExceeded",
    "ConfigError",
    "DELTA",
    "DecodeResult",
    "DegenerateVoronoiGeometry",
    "DimensionError",
    "DomainError",
    "EpsRecord",
    "EstimateReport",
    "EulerDecomposition",
    "ExperimentSpec",
    "GaussianDensity",
    "LogicalError",
    "LogicalSummary",
    "NoiseModel",
    "NotSymplectic",
    "NumericalFailure",
    "OscUnwrapError",
    "OscillatorCode",
    "SearchBudgetExceeded",
    "SymplecticMatrix",
    "Syndrome",
    "UnwrapProblem",
    "ball_mass",
    "bound_report",
    "brute_force_estimate",
    "build_problem",
    "centered_modulo",
    "check_schur_eigen_bound",
    "clopper_pearson",
    "compose",
    "corollary_bound",
    "decode_success",
    "estimate_psucc",
    "euler_decompose",
    "identity_code_matrix",
    "in_degenerate_voronoi",
    "in_polytope",
    "inverse",
    "load_code_file",
    "load_matrix_file",
    "log_density",
    "logical_error_samples",
    "map_estimate",
    "map_estimate_batch",
    "modulo_reduce",
    "random_orthogonal_symplectic",
    "random_symplectic",
    "run_lemma_checks",
    "sample_displacement",
    "save_matrix_file",
    "schur_complement",
    "schur_variant_bound",
    "squeezing_measure",
    "theorem_bound",
    "trial_stream",
    "two_mode_squeezer",
    "validate_symplectic",
]
