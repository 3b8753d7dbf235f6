"""Derivative-free maximization of marginal likelihoods in log-parameter space."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

__all__ = ["OptimizeSchedule", "OptimizationError", "maximize"]


class OptimizationError(RuntimeError):
    """Every objective evaluation failed."""


@dataclass(frozen=True)
class OptimizeSchedule:
    """Nelder-Mead budget: at most ``max_evals`` evaluations, stop when the
    simplex spread falls below ``f_tol`` on the objective (``x_tol`` on the
    log-parameters).

    ``initial_step`` sets the edge length of the starting simplex in
    log-parameter units; scipy's default (a 5% nudge per coordinate) is far
    too small to traverse the flat likelihood ridges these models produce.
    """

    max_evals: int = 200
    f_tol: float = 1e-5
    x_tol: float = 0.05
    initial_step: float = 0.7

    def __post_init__(self) -> None:
        if self.max_evals < 1:
            raise ValueError("max_evals must be >= 1")
        if self.f_tol <= 0.0 or self.x_tol <= 0.0:
            raise ValueError("tolerances must be positive")
        if self.initial_step <= 0.0:
            raise ValueError("initial_step must be positive")


def maximize(fun, x0, schedule: OptimizeSchedule | None = None) -> np.ndarray:
    """Nelder-Mead maximization of ``fun`` from ``x0``; returns the best point seen.

    ``fun`` may return ``-inf`` (or raise ValueError/LinAlgError) to mark a
    failed evaluation; if every evaluation fails, OptimizationError is raised.
    The first evaluation is at ``x0`` itself, so a one-evaluation schedule
    returns ``x0`` unchanged.
    """
    sched = schedule or OptimizeSchedule()
    start = np.asarray(x0, dtype=float).ravel()
    best_x = start.copy()
    best_f = -np.inf

    def objective(theta: np.ndarray) -> float:
        nonlocal best_x, best_f
        try:
            value = float(fun(theta))
        except (ValueError, np.linalg.LinAlgError):
            value = -np.inf
        if not np.isfinite(value):
            return np.inf
        if value > best_f:
            best_f = value
            best_x = np.array(theta, dtype=float)
        return -value

    simplex = np.tile(start, (start.size + 1, 1))
    for i in range(start.size):
        simplex[i + 1, i] += sched.initial_step
    minimize(
        objective,
        start,
        method="Nelder-Mead",
        options={
            "maxfev": sched.max_evals,
            "fatol": sched.f_tol,
            "xatol": sched.x_tol,
            "initial_simplex": simplex,
            "disp": False,
        },
    )
    if not np.isfinite(best_f):
        raise OptimizationError("no objective evaluation succeeded")
    return best_x
