"""Optimal sampling and preemption for minimizing age of information.

A discrete-time status-update system feeds a monitor through a single
error-free preemptive server.  This package computes optimal sampling
and preemption policies for the resulting average-age problem via
dynamic programming, evaluates structured policy families exactly and by
simulation, and mechanically checks the structural properties the
solutions are expected to satisfy.
"""

from .service import ServiceDistribution, new_distribution, load_distribution
from .mdp import (EMPTY, Action, State, default_age_cap, enumerate_states,
                  feasible_actions, format_state, parse_state, cost,
                  transitions, transitions_truncated)
from .solvers import (Policy, RviTrace, SolverConfig, ValueFunction,
                      discounted_value_iteration, extract_policy,
                      relative_value_iteration, solver_report, table_policy)
from .policies import (DoubleThresholdSpec, always_preempt,
                       double_threshold, search_double_threshold,
                       single_threshold_baseline)
from .evaluation import (CycleTrace, EvalReport, cap_mass, exact_average_age,
                         renewal_reward_age, simulate)
from .backend import active_backend, get_kernels

__version__ = "0.1.0"

__all__ = [
    "Action", "CycleTrace", "DoubleThresholdSpec", "EMPTY", "EvalReport",
    "Policy", "RviTrace", "ServiceDistribution", "SolverConfig", "State",
    "ValueFunction", "active_backend", "always_preempt", "cap_mass", "cost",
    "default_age_cap", "discounted_value_iteration", "double_threshold",
    "enumerate_states", "exact_average_age", "extract_policy",
    "feasible_actions", "format_state", "get_kernels", "load_distribution",
    "new_distribution", "parse_state", "relative_value_iteration",
    "renewal_reward_age", "search_double_threshold", "simulate",
    "single_threshold_baseline", "solver_report", "table_policy",
    "transitions", "transitions_truncated", "__version__",
]
