"""Infeasible projection onto CH(alpha K) by repeated separation pulls.

Starting from y scaled into B(0, alpha R), every separator w found by
``separation_or_decomposition`` pulls the iterate to y - eps w.  A pull
shrinks the squared distance to every z in CH(alpha K) by at least eps^2,
so the loop ends after boundedly many pulls with a decomposition whose
point p sits within about 3 eps of the final iterate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .oracles import OracleMeter, ProblemInstance
from .sod import (Decomposition, Separation, SodConfig, min_norm_combination,
                  separation_or_decomposition)


class ProjectionConsistencyError(RuntimeError):
    """More pulls than the distance argument allows."""


@dataclass(frozen=True)
class ProjectionResult:
    y_tilde: np.ndarray
    decomposition: Decomposition
    pulls: int  # number of SoD invocations, i.e. separations + 1
    oracle_calls: int
    trajectory: list = field(default_factory=list, repr=False)
    sod_iterations: list = field(default_factory=list, repr=False)


def scale_into_ball(y, radius: float) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    n = float(np.linalg.norm(y))
    return y / max(1.0, n / radius)


def pull_cap(start_norm: float, instance: ProblemInstance, eps: float) -> int:
    """Largest k the distance argument permits when the first iterate has this norm."""
    return math.ceil((start_norm + instance.alpha * instance.R) ** 2 / eps**2) + 1


def sod_iteration_bound(instance: ProblemInstance, cfg: SodConfig) -> int:
    """N evaluated at the iterate-norm bound (1 + sqrt 2) alpha R."""
    return cfg.iterations(instance, (1 + math.sqrt(2)) * instance.alpha * instance.R)


def infeasible_projection(y, instance: ProblemInstance, cfg: SodConfig,
                          meter: OracleMeter | None = None, record: bool = False,
                          fast: bool | None = None) -> ProjectionResult:
    """Project y onto CH(alpha K) without ever building a feasible iterate.

    ``record=True`` keeps every intermediate iterate in ``trajectory``.
    """
    eps = cfg.epsilon
    local = OracleMeter()
    y_t = scale_into_ball(y, instance.alpha * instance.R)
    cap = pull_cap(float(np.linalg.norm(y_t)), instance, eps)
    trajectory, iterations = [], []
    for k in range(1, cap + 1):
        if record:
            trajectory.append(y_t.copy())
        res = separation_or_decomposition(y_t, cfg, instance, local, fast)
        iterations.append(res.iterations)
        if isinstance(res, Separation):
            y_t = y_t - eps * res.w
            continue
        if meter is not None:
            meter.tick(local.calls)
        return ProjectionResult(y_t, res, k, local.calls, trajectory, iterations)
    raise ProjectionConsistencyError(f"no decomposition after {cap} pulls")


def hull_distance(y, vertices, tol: float = 1e-12) -> float:
    """Euclidean distance from y to conv(vertices), via the min-norm solver."""
    mn = min_norm_combination(y, vertices, tol)
    return float(np.linalg.norm(np.asarray(y, dtype=float) - mn.point))
