"""Deadline miss rate analysis of a periodic soft real-time task served by a
greedy processing component, via finite Markov chains."""

from .model import ExecDistribution, TaskSpec, ValidationReport, parse_rat, validate_task
from .supply import SupplyCurve, SupplyModel, eval_curve, service, service_l, service_u

__all__ = [
    "ExecDistribution",
    "TaskSpec",
    "ValidationReport",
    "parse_rat",
    "validate_task",
    "SupplyCurve",
    "SupplyModel",
    "eval_curve",
    "service",
    "service_l",
    "service_u",
]
