"""Steady-state Kalman accuracy analysis and redundant-sensor design.

The toolkit answers two questions about a linear sensor network observing a
discrete-time process:

1. What happens to the steady-state estimation accuracy when redundant
   sensors are added (ordering, trace gap, strict-improvement test via the
   symplectic spectra)?
2. Given a row budget and per-sensor gain limits, what redundant output
   matrix minimizes the resulting error covariance trace (iterative
   convexified semidefinite programming)?

Modules:
    model     plant/sensor data types and assumption checks
    riccati   two independent DARE solvers and the operator algebra
    analysis  covariance ordering, trace gap, spectral improvement tests
    sdp       small-scale LMI assembly and an embedded interior-point solver
    design    the iterative redundant-sensor design loop with certificates
    simulate  reproducible Monte-Carlo Kalman runs and histogram data
    cli       command-line front end (validate/dare/analyze/design/simulate)
"""

from .model import (
    LinearSystem,
    Sensor,
    SensorBank,
    ValidationError,
    ValidationReport,
    augment,
    check_observability,
    information_matrix,
    validate_system,
)
from .riccati import (
    DareSolution,
    NotInDomRicError,
    SolverError,
    SymplecticSpectrum,
    build_symplectic,
    lyapunov_step,
    riccati_update,
    solve_dare_fixed_point,
    solve_dare_symplectic,
    solve_discrete_lyapunov,
)
from .analysis import (
    CommonEigenpairReport,
    OrderingClass,
    OrderingVerdict,
    TraceGap,
    classify_ordering,
    inertia,
    left_eigen_condition,
    strict_improvement_condition,
    trace_gap,
    verify_lyapunov_identity,
)
from .sdp import (
    LmiBlock,
    SdpError,
    SdpProblem,
    SdpSolution,
    block_from_affine,
    solve,
    sym_to_vec,
    vec_to_sym,
)
from .design import (
    DesignError,
    DesignResult,
    DesignSpec,
    PostValidation,
    build_F_lmi,
    build_norm_lmi,
    build_trace_lmi,
    design_redundant_sensors,
    performance_bound,
)
from .simulate import (
    ComparisonResult,
    Histogram,
    SimConfig,
    SimOutput,
    SimulationError,
    compare_networks,
    histogram,
    run_kalman,
    write_histogram_csv,
    write_trajectory_csv,
)

__version__ = "0.1.0"

__all__ = [
    "LinearSystem",
    "Sensor",
    "SensorBank",
    "ValidationError",
    "ValidationReport",
    "augment",
    "check_observability",
    "information_matrix",
    "validate_system",
    "DareSolution",
    "NotInDomRicError",
    "SolverError",
    "SymplecticSpectrum",
    "build_symplectic",
    "lyapunov_step",
    "riccati_update",
    "solve_dare_fixed_point",
    "solve_dare_symplectic",
    "solve_discrete_lyapunov",
    "CommonEigenpairReport",
    "OrderingClass",
    "OrderingVerdict",
    "TraceGap",
    "classify_ordering",
    "inertia",
    "left_eigen_condition",
    "strict_improvement_condition",
    "trace_gap",
    "verify_lyapunov_identity",
    "LmiBlock",
    "SdpError",
    "SdpProblem",
    "SdpSolution",
    "block_from_affine",
    "solve",
    "sym_to_vec",
    "vec_to_sym",
    "DesignError",
    "DesignResult",
    "DesignSpec",
    "PostValidation",
    "build_F_lmi",
    "build_norm_lmi",
    "build_trace_lmi",
    "design_redundant_sensors",
    "performance_bound",
    "ComparisonResult",
    "Histogram",
    "SimConfig",
    "SimOutput",
    "SimulationError",
    "compare_networks",
    "histogram",
    "run_kalman",
    "write_histogram_csv",
    "write_trajectory_csv",
    "__version__",
]
