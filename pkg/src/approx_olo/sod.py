"""Separation-or-decomposition driven by the Ellipsoid method.

Given a point x, search for a unit-ball vector w with (x - z).w >= eps for
every z in alpha*K.  Each Ellipsoid iteration spends one extended-oracle
query at -w.  Either the search succeeds (a margin-eps separator), or after N
iterations the collected oracle points v_1..v_N have a convex combination p
within about 3 eps of x, found by solving

    min 1/2 ||sum_i a_i v_i - x||^2   s.t.  a >= 0, sum_i a = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .ellipsoid import EllipsoidBreakdown, ellipsoid_cut, ellipsoid_init
from .oracles import OracleMeter, ProblemInstance, extended_oracle_query


class SodConsistencyError(RuntimeError):
    """A decomposition ended farther from x than the certificate allows."""


@dataclass(frozen=True)
class SodConfig:
    """Accuracy ``epsilon`` plus the two numerical knobs of the search.

    ``iteration_constant`` multiplies d(d+1) ln(1/r) in the iteration count;
    2.0 is the smallest value the central-cut volume argument certifies.
    ``qp_tolerance`` bounds the optimality residual of the min-norm
    subproblem (defaults to min(eps, eps^2) / 10).
    """

    epsilon: float
    iteration_constant: float = 2.0
    qp_tolerance: float | None = None

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.qp_tolerance is None:
            object.__setattr__(self, "qp_tolerance",
                               min(self.epsilon, self.epsilon**2) / 10.0)
        if not 0 < self.qp_tolerance < self.epsilon:
            raise ValueError("qp_tolerance must lie in (0, epsilon)")
        if not self.iteration_constant > 0:
            raise ValueError("iteration_constant must be positive")

    def validate(self, instance: ProblemInstance) -> None:
        if self.epsilon > (instance.alpha + 2) * instance.R:
            raise ValueError(f"epsilon={self.epsilon} exceeds (alpha+2)R")

    def radius(self, instance: ProblemInstance, x_norm: float) -> float:
        """Radius of the ball of separators that must exist if x is far from the hull."""
        return self.epsilon / (2 * (instance.alpha + 2) * instance.R + x_norm)

    def iterations(self, instance: ProblemInstance, x_norm: float) -> int:
        d = instance.dimension
        r = self.radius(instance, x_norm)
        return math.ceil(self.iteration_constant * d * (d + 1) * math.log(1.0 / r)) + 1

    def distance_bound(self, residual: float | None = None) -> float:
        """Certified bound on ||x - p|| after a full run.

        With optimality residual delta the optimality argument yields
        D - delta/D <= 3 eps, i.e. D <= (3 eps + sqrt(9 eps^2 + 4 delta)) / 2.
        """
        delta = self.qp_tolerance if residual is None else max(self.qp_tolerance, residual)
        e3 = 3 * self.epsilon
        return 0.5 * (e3 + math.sqrt(e3 * e3 + 4 * delta))


@dataclass(frozen=True)
class Separation:
    w: np.ndarray
    iterations: int


@dataclass(frozen=True)
class Decomposition:
    """Simplex weights over oracle pairs (v_i, s_i) with p = sum a_i v_i."""

    weights: np.ndarray
    v: np.ndarray
    s: np.ndarray
    p: np.ndarray
    iterations: int
    residual: float

    def feasible_mean(self) -> np.ndarray:
        """sum a_i s_i, the point of CH(K) that dominates p."""
        return self.weights @ self.s

    def compact(self) -> Decomposition:
        """Same decomposition restricted to atoms with positive weight."""
        keep = self.weights > 0
        return Decomposition(self.weights[keep], self.v[keep], self.s[keep], self.p,
                             self.iterations, self.residual)

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        """Draw s_i with probability a_i by inverse CDF."""
        cdf = np.cumsum(self.weights)
        i = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
        return self.s[min(i, len(cdf) - 1)]


@dataclass(frozen=True)
class MinNormResult:
    weights: np.ndarray
    point: np.ndarray
    residual: float
    iterations: int
    converged: bool


def kkt_residual(x, V, a) -> float:
    """Optimality gap of simplex weights ``a`` for the min-norm problem.

    Zero exactly when every supported atom has the same gradient value
    (p - x).v_i and no atom does better.
    """
    V = np.atleast_2d(np.asarray(V, dtype=float))
    a = np.asarray(a, dtype=float)
    p = a @ V
    grad = V @ (p - np.asarray(x, dtype=float))
    return float(max(0.0, grad[a > 0].max() - grad.min()))


def project_simplex(c: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex."""
    n = len(c)
    u = -np.sort(-c)
    css = (np.cumsum(u) - 1.0) / np.arange(1, n + 1)
    k = np.nonzero(u > css)[0][-1]
    return np.maximum(c - css[k], 0.0)


def _projected_gradient(x, V, tol, max_iter):
    N = len(V)
    L = N * max(float((V * V).sum(axis=1).max()), 1e-300)
    a = np.full(N, 1.0 / N)
    residual = kkt_residual(x, V, a)
    it = 0
    while residual > tol and it < max_iter:
        it += 1
        a = project_simplex(a - V @ (a @ V - x) / L)
        residual = kkt_residual(x, V, a)
    return a, residual, it


def min_norm_combination(x, V, tol: float, method: str = "wolfe",
                         max_iter: int | None = None) -> MinNormResult:
    """Closest point to x in the convex hull of the rows of V.

    ``method="wolfe"`` is Wolfe's active-set min-norm-point algorithm;
    ``"projected_gradient"`` is plain projected gradient with step 1/L.
    Both stop once ``kkt_residual`` drops to ``tol``.
    """
    x = np.asarray(x, dtype=float)
    V = np.ascontiguousarray(np.atleast_2d(np.asarray(V, dtype=float)))
    N = len(V)
    if N == 0:
        raise ValueError("need at least one atom")
    if N == 1:
        return MinNormResult(np.ones(1), V[0].copy(), 0.0, 0, True)
    if method == "wolfe":
        cap = max_iter or 20 * N + 100
        lam, _, it, _ = _kernels.min_norm_point(np.ascontiguousarray(V - x), tol, cap)
        a = lam
    elif method == "projected_gradient":
        a, _, it = _projected_gradient(x, V, tol, max_iter or 100_000)
    else:
        raise ValueError(f"unknown method {method!r}")
    residual = kkt_residual(x, V, a)
    return MinNormResult(a, a @ V, residual, int(it), residual <= tol)


def _decompose(x, V, S, iterations, cfg):
    mn = min_norm_combination(x, V, cfg.qp_tolerance)
    dist = float(np.linalg.norm(x - mn.point))
    if dist > cfg.distance_bound(mn.residual):
        raise SodConsistencyError(
            f"||x - p|| = {dist:.3e} exceeds the certified {cfg.distance_bound(mn.residual):.3e}")
    return Decomposition(mn.weights, V, S, mn.point, iterations, mn.residual)


def separation_or_decomposition(x, cfg: SodConfig, instance: ProblemInstance,
                                meter: OracleMeter | None = None,
                                fast: bool | None = None) -> Separation | Decomposition:
    """Run the Ellipsoid search for a margin-eps separator of x from alpha*K.

    Every iteration makes exactly one extended-oracle query at -w (w the
    ellipsoid center), then cuts with v - x when the margin test fails,
    with w when ||w|| > 1, and otherwise returns ``Separation(w)``.

    Two early exits also certify a decomposition: an oracle point equal to
    x, and an ellipsoid thinner than the witness radius r along the cut
    direction (it can no longer contain the ball of separators that must
    exist when x is far from the hull).  Either way the returned p obeys the
    same distance bound a full run does.
    """
    cfg.validate(instance)
    x = np.ascontiguousarray(x, dtype=float)
    eps = cfg.epsilon
    x_norm = float(np.linalg.norm(x))
    N = cfg.iterations(instance, x_norm)
    r = cfg.radius(instance, x_norm)
    if fast is None:
        fast = instance.is_finite
    if fast:
        pts = instance.oracle.points
        status, w, V, S_idx, n = _kernels.sod_finite(
            x, eps, pts, instance.alpha, instance.R, instance.loss, N, r)
        if meter is not None:
            meter.tick(int(n))
        if status == _kernels.BREAKDOWN:
            raise EllipsoidBreakdown(f"shape degenerated after {n} iterations")
        if status == _kernels.SEPARATION:
            return Separation(w.copy(), int(n))
        return _decompose(x, V.copy(), pts[S_idx], int(n), cfg)

    state = ellipsoid_init(instance.dimension)
    V, S = [], []
    for it in range(N):
        w = state.center
        out = extended_oracle_query(instance, -w, meter)
        V.append(out.v)
        S.append(out.s)
        if (x - out.v) @ w < eps:
            g = out.v - x
            if np.linalg.norm(g) <= 1e-14 * (1.0 + x_norm):
                break
        elif w @ w > 1.0:
            g = w
        else:
            return Separation(w.copy(), it + 1)
        if state.half_width(g) < r:
            break
        state = ellipsoid_cut(state, g)
    return _decompose(x, np.array(V), np.array(S), len(V), cfg)
