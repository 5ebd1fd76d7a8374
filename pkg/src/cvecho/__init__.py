"""Echo-style noise decoupling for a single bosonic mode, simulated in a
truncated Fock space with phase-space (Wigner) diagnostics."""

__version__ = "0.1.0"

from .engine import (
    GridSpec,
    InitialStateSpec,
    LogisticFit,
    ProtocolSpec,
    SimConfig,
    SimResult,
    SimulationError,
    SweepResult,
    evolve_trajectory,
    logistic_fit,
    run_ensemble,
    sweep_interventions,
    sweep_point_config,
)
from .filters import (
    DegenerateFilterError,
    IdentityFilter,
    SegmentKernel,
    SwitchingFunction,
    convolve,
    cpp_static_filter,
    gaussian_filter,
    sigma_matrix,
    sigma_matrix_from_kernel,
    squeeze_average,
)
from .fock import (
    DensityMatrix,
    FockSpace,
    MixtureComponent,
    TruncationLeakError,
    coherent_state,
    conjugate,
    displacement,
    fidelity,
    fock_state,
    gaussian_mixture_state,
    parity,
    rotation,
    squeeze,
    vacuum_state,
)
from .noise import (
    CovarianceTables,
    NoiseConfig,
    NoiseTrajectory,
    cpp_covariance,
    empirical_covariance,
    sample_ensemble,
    sample_trajectory,
)
from .protocol import (
    ControlGroup,
    ControlOp,
    InterventionSchedule,
    cyclic_group,
    gaussian_group,
    group_average_residual,
    parity_group,
    schedule_combined,
    schedule_cyclic,
    schedule_displacement,
    schedule_squeezing,
    squeeze_set,
)
from .wigner import (
    FieldDomainError,
    PhaseSpaceGrid,
    dual_field,
    expectation,
    field_mass,
    scale,
    translate,
    wigner_of_mixture,
    wigner_of_state,
)

__all__ = [
    "ControlGroup",
    "ControlOp",
    "CovarianceTables",
    "DegenerateFilterError",
    "DensityMatrix",
    "FieldDomainError",
    "FockSpace",
    "GridSpec",
    "IdentityFilter",
    "InitialStateSpec",
    "InterventionSchedule",
    "LogisticFit",
    "MixtureComponent",
    "NoiseConfig",
    "NoiseTrajectory",
    "PhaseSpaceGrid",
    "ProtocolSpec",
    "SegmentKernel",
    "SimConfig",
    "SimResult",
    "SimulationError",
    "SweepResult",
    "SwitchingFunction",
    "TruncationLeakError",
    "coherent_state",
    "conjugate",
    "convolve",
    "cpp_covariance",
    "cpp_static_filter",
    "cyclic_group",
    "displacement",
    "dual_field",
    "empirical_covariance",
    "evolve_trajectory",
    "expectation",
    "fidelity",
    "field_mass",
    "fock_state",
    "gaussian_filter",
    "gaussian_group",
    "gaussian_mixture_state",
    "group_average_residual",
    "logistic_fit",
    "parity",
    "parity_group",
    "rotation",
    "run_ensemble",
    "sample_ensemble",
    "sample_trajectory",
    "scale",
    "schedule_combined",
    "schedule_cyclic",
    "schedule_displacement",
    "schedule_squeezing",
    "sigma_matrix",
    "sigma_matrix_from_kernel",
    "squeeze",
    "squeeze_average",
    "squeeze_set",
    "translate",
    "vacuum_state",
    "wigner_of_mixture",
    "wigner_of_state",
    "__version__",
]
