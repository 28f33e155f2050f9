"""Sensitivity analysis of maximal value functions for parametric
maximization problems, with stationarity certification for nonconvex
minimax problems.

Main entry points:

- :func:`valfun.model.builtin` / :func:`valfun.model.load_problem`
- :func:`valfun.valuefn.solve_inner` / :func:`valfun.valuefn.value`
- :func:`valfun.subdiff.upper_estimate`
- :func:`valfun.wolfe.dual_value` / :func:`valfun.wolfe.check_weak_duality`
- :func:`valfun.stationarity.certify_point`
"""

from . import cq, exprlang, model, multipliers, polyhedra, stationarity, subdiff, valuefn, wolfe

__all__ = [
    "cq",
    "exprlang",
    "model",
    "multipliers",
    "polyhedra",
    "stationarity",
    "subdiff",
    "valuefn",
    "wolfe",
]

__version__ = "0.1.0"
