"""Central-cut Ellipsoid method.

The ellipsoid is {x : (x - center)^T A^{-1} (x - center) <= 1}.  States are
values: ``ellipsoid_cut`` returns a new state and leaves its input alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class EllipsoidBreakdown(ArithmeticError):
    """The shape matrix lost positive definiteness along a cut direction."""


@dataclass(frozen=True)
class EllipsoidState:
    center: np.ndarray
    shape: np.ndarray
    iteration: int = 0

    @property
    def dimension(self) -> int:
        return self.center.shape[0]

    def volume_factor(self) -> float:
        """det(A)^(1/2), the volume relative to the unit ball."""
        sign, logdet = np.linalg.slogdet(self.shape)
        return math.exp(0.5 * logdet) if sign > 0 else 0.0

    def half_width(self, g) -> float:
        """Half the width of the ellipsoid along direction g."""
        g = np.asarray(g, dtype=float)
        gAg = float(g @ self.shape @ g)
        return math.sqrt(max(gAg, 0.0)) / float(np.linalg.norm(g))

    def contains(self, points: np.ndarray, tol: float = 0.0) -> np.ndarray:
        diff = np.atleast_2d(points) - self.center
        sol = np.linalg.solve(self.shape, diff.T).T
        return np.einsum("ij,ij->i", diff, sol) <= 1.0 + tol


def ellipsoid_init(d: int) -> EllipsoidState:
    """The unit ball in R^d."""
    if d < 1:
        raise ValueError("dimension must be at least 1")
    return EllipsoidState(np.zeros(d), np.eye(d), 0)


def ellipsoid_cut(state: EllipsoidState, g) -> EllipsoidState:
    """Minimum-volume ellipsoid containing {x in E : g.(x - center) <= 0}."""
    g = np.asarray(g, dtype=float)
    if not np.linalg.norm(g) > 0:
        raise ValueError("cut direction must be nonzero")
    A, d = state.shape, state.dimension
    Ag = A @ g
    gAg = float(g @ Ag)
    if not gAg > 0:
        raise EllipsoidBreakdown(f"g^T A g = {gAg:.3e} at iteration {state.iteration}")
    b = Ag / math.sqrt(gAg)
    if d == 1:
        # the half-interval is itself an interval
        return EllipsoidState(state.center - 0.5 * b, 0.25 * A, state.iteration + 1)
    center = state.center - b / (d + 1)
    new = (d * d / (d * d - 1.0)) * (A - (2.0 / (d + 1)) * np.outer(b, b))
    return EllipsoidState(center, 0.5 * (new + new.T), state.iteration + 1)


def volume_ratio_bound(d: int) -> float:
    """Guaranteed per-cut volume shrink factor exp(-1/(2(d+1)))."""
    return math.exp(-1.0 / (2 * (d + 1)))
