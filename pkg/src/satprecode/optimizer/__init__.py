"""QoS-constrained precoder optimisation."""

from .admm import (
    AdmmConfig,
    MaxMinResult,
    SolveOutcome,
    certify,
    interference_free_sinr,
    maxmin_bisection,
    power_min_admm,
    project_quadratic,
)
from .qcqp import QosTargets, QuadraticConstraint, build_qcqp, stack, unstack
from .sdr import SdrMaxMinResult, SdrPowerMinResult, sdr_maxmin_small, sdr_power_min

__all__ = [
    "AdmmConfig",
    "MaxMinResult",
    "QosTargets",
    "QuadraticConstraint",
    "SdrMaxMinResult",
    "SdrPowerMinResult",
    "SolveOutcome",
    "build_qcqp",
    "certify",
    "interference_free_sinr",
    "maxmin_bisection",
    "power_min_admm",
    "project_quadratic",
    "sdr_maxmin_small",
    "sdr_power_min",
    "stack",
    "unstack",
]
