"""closurelab: a 1D numerical-PDE laboratory for hierarchical scale
separation, memory-driven subgrid closures, and stabilized steady solvers."""

from .basis import FourierBasis, LegendreBasis, QuadratureRule, eval_basis, gauss_rule, mass_matrix
from .greens import (
    GreensField,
    SteadyProblem,
    exact_fine_greens,
    orthogonal_greens,
    steady_adjoint_stabilized_solve,
    steady_tau_model_solve,
)
from .memory import (
    FineFineOperator,
    FiniteMemoryAux,
    KernelSample,
    MemoryModelConfig,
    closure_rhs,
    exact_linear_memory,
    exact_linear_memory_for,
    kernel_s0_dg,
    kernel_s0_spectral,
    matrix_exponential,
    s1_s2,
)
from .meshproj import (
    CoarseState,
    FineState,
    Mesh1D,
    ScaleSplit,
    fine_projector_kernel,
    project_coarse,
    project_fine_residual,
    reconstruct,
    split_full_state,
)
from .operators import (
    BurgersPhysics,
    FluxFunction,
    JumpData,
    LinearOperator1D,
    SemiDiscreteProblem,
    coarse_residual,
    dg_volume_rhs,
    interface_jumps,
    linearized_action,
)
from .solver import (
    IntegratorConfig,
    Trajectory,
    artificial_viscosity_rhs,
    full_reference_solve,
    integrate,
    integrate_exact_memory,
)

__version__ = "0.1.0"
