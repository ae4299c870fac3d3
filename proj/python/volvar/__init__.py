"""Varifold discretization, approximate mean curvature and Brakke residuals."""

from ._core import (
    ConfigError,
    DenominatorTooSmall,
    Error,
    InvalidArgument,
    KernelPair,
    NumericalFailure,
    PreconditionViolated,
    Shape,
    ahlfors_constant,
    bounded_lipschitz_distance,
    constants_ledger,
    discretized_mass,
    mean_curvature,
    measure_C1,
    measure_C2,
    run_experiment,
    sphere_flow_radius,
    validate,
)

__all__ = [
    "ConfigError",
    "DenominatorTooSmall",
    "Error",
    "InvalidArgument",
    "KernelPair",
    "NumericalFailure",
    "PreconditionViolated",
    "Shape",
    "ahlfors_constant",
    "bounded_lipschitz_distance",
    "constants_ledger",
    "discretized_mass",
    "mean_curvature",
    "measure_C1",
    "measure_C2",
    "run_experiment",
    "sphere_flow_radius",
    "validate",
]
