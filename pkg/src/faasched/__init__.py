"""Discrete-event simulation of FaaS request scheduling with environment setup times."""

from .engine import simulate
from .errors import (
    Deadlock,
    FaaSchedError,
    FamilyMismatch,
    IncompleteGroup,
    InfeasibleInstance,
    InvalidParams,
    NotAChain,
    ParseError,
    TooLarge,
    ValidationError,
)
from .metrics import (
    box_stats,
    brute_force_optimal,
    mean_latency,
    normalize_relative,
    percentile_latency,
    validate_schedule,
)
from .model import (
    ClusterConfig,
    Dependency,
    FamilySpec,
    Instance,
    Job,
    Ordering,
    PolicyConfig,
    Removal,
    TaskSpec,
    validate_instance,
)
from .state import SimResult
from .workload import GenParams, dagify_instance, generate_chain_instance, read_instance, write_instance

__all__ = [
    "simulate",
    "Deadlock",
    "FaaSchedError",
    "FamilyMismatch",
    "IncompleteGroup",
    "InfeasibleInstance",
    "InvalidParams",
    "NotAChain",
    "ParseError",
    "TooLarge",
    "ValidationError",
    "box_stats",
    "brute_force_optimal",
    "mean_latency",
    "normalize_relative",
    "percentile_latency",
    "validate_schedule",
    "ClusterConfig",
    "Dependency",
    "FamilySpec",
    "Instance",
    "Job",
    "Ordering",
    "PolicyConfig",
    "Removal",
    "TaskSpec",
    "validate_instance",
    "SimResult",
    "GenParams",
    "dagify_instance",
    "generate_chain_instance",
    "read_instance",
    "write_instance",
]

__version__ = "0.1.0"
