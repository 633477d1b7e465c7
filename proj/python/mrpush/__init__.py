"""Multi-robot block pushing: stable sets, task assignment, planning and simulation."""

from ._core import (
    IoError,
    PlanningError,
    ValidationError,
    check_config,
    check_scenario,
    default_config,
    ecbsta_solve,
    plan,
    run_batch,
    stable_set,
    wrench_to_twist,
)

__all__ = [
    "IoError",
    "PlanningError",
    "ValidationError",
    "check_config",
    "check_scenario",
    "default_config",
    "ecbsta_solve",
    "plan",
    "run_batch",
    "stable_set",
    "wrench_to_twist",
]
