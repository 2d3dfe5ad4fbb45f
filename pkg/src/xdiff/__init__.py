"""Structure-preserving solver and verification lab for the cross-diffusion
system  du_i/dt = lap(a(u1/u2) u_i) + mu_i u_i  on the periodic torus."""

from .coeffs import AssumptionReport, CoefficientSpec, verify_assumptions
from .entropy import (
    EntropyParams,
    StructureBoundReport,
    dissipation_kappa,
    entropy_density,
    entropy_functional,
    entropy_gradient,
    entropy_hessian,
    invert_gradient,
    source_growth_constant,
    structure_bound_check,
    structure_constant_k,
)
from .errors import (
    EntropyViolationError,
    NewtonNonConvergenceError,
    NonConvergenceError,
    NumericalError,
)
from .fokker_planck import (
    ConsistencyReport,
    FPField,
    consistency_compare,
    fp_step,
    partial_average,
)
from .grid import PeriodicGrid, laplacian, norm_hminus1, norm_l2, poisson_solve, seminorm_h1
from .presets import make_fp_initial, make_initial_state
from .stepper import (
    DiagnosticsRecord,
    RunArtifact,
    Scheme,
    SchemeConfig,
    entropy_inequality_report,
    simulate,
    step_entropy_implicit,
    step_lagged_linear,
)
from .system import (
    MatrixBoundReport,
    PetrovskiReport,
    StateField,
    diffusion_matrix,
    energy_transport_transform,
    flux_density,
    matrix_bound_check,
    mobility_matrix,
    petrovski_check,
    source_term,
)

__version__ = "0.1.0"

__all__ = [
    "AssumptionReport",
    "CoefficientSpec",
    "ConsistencyReport",
    "DiagnosticsRecord",
    "EntropyParams",
    "EntropyViolationError",
    "FPField",
    "MatrixBoundReport",
    "NewtonNonConvergenceError",
    "NonConvergenceError",
    "NumericalError",
    "PeriodicGrid",
    "PetrovskiReport",
    "RunArtifact",
    "Scheme",
    "SchemeConfig",
    "StateField",
    "StructureBoundReport",
    "consistency_compare",
    "diffusion_matrix",
    "dissipation_kappa",
    "energy_transport_transform",
    "entropy_density",
    "entropy_functional",
    "entropy_gradient",
    "entropy_hessian",
    "entropy_inequality_report",
    "flux_density",
    "fp_step",
    "invert_gradient",
    "laplacian",
    "make_fp_initial",
    "make_initial_state",
    "matrix_bound_check",
    "mobility_matrix",
    "norm_hminus1",
    "norm_l2",
    "partial_average",
    "petrovski_check",
    "poisson_solve",
    "seminorm_h1",
    "simulate",
    "source_growth_constant",
    "source_term",
    "step_entropy_implicit",
    "step_lagged_linear",
    "structure_bound_check",
    "structure_constant_k",
    "verify_assumptions",
    "__version__",
]
