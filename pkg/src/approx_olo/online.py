"""Online learners over CH(alpha K).

Both learners run online gradient descent on an infeasible iterate and play
a random feasible point whose expectation dominates it:

* ``FullInfoState`` projects with the separation-or-decomposition pulls of
  ``projection.infeasible_projection``;
* ``KklState`` is the Frank-Wolfe baseline with the fixed step
  lambda = eps / (3 (alpha+2)^2 R^2), warm started from the previous round.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .oracles import (LOSS, OracleMeter, ProblemInstance, extended_oracle_query,
                      oracle_query)
from .projection import infeasible_projection, sod_iteration_bound
from .sod import Decomposition, SodConfig

PRESETS = ("t13", "t12", "kkl", "theorem2")


def ogd_step(current, f, eta: float, mode: str = LOSS) -> np.ndarray:
    """Gradient step: descend on losses, ascend on payoffs."""
    current = np.asarray(current, dtype=float)
    f = np.asarray(f, dtype=float)
    return current - eta * f if mode == LOSS else current + eta * f


@dataclass(frozen=True)
class Parameters:
    eta: float
    epsilon: float
    gamma: float | None = None


def preset_parameters(name: str, instance: ProblemInstance, T: int,
                      beta: float | None = None) -> Parameters:
    """Step size, accuracy and (bandit) exploration rate for a named preset.

    t13 and t12 are the two full-information settings, kkl the rate-optimal
    Frank-Wolfe setting (eta ~ T^-1/2, eps ~ 1/T), theorem2 the bandit one.
    """
    aR, F = instance.alpha * instance.R, instance.F_bound
    if name == "t13":
        return Parameters(aR * T ** (-2 / 3) / F, aR * T ** (-1 / 3))
    if name == "t12":
        return Parameters(aR * T ** -0.5 / F, aR * T ** -0.5)
    if name == "kkl":
        return Parameters(aR * T ** -0.5 / F, aR / T)
    if name == "theorem2":
        if beta is None:
            raise ValueError("the theorem2 preset needs the spanner's beta")
        d, C = instance.dimension, instance.C_bound
        return Parameters(aR / (beta * d * C) * T ** (-2 / 3), aR * T ** (-1 / 3), T ** (-1 / 3))
    raise ValueError(f"unknown preset {name!r}; expected one of {PRESETS}")


@dataclass(frozen=True)
class OracleBudget:
    """Explicit per-round oracle budget and its size relative to d^2 ln((alpha+1)R/eps)."""

    calls_per_round: float
    pulls_per_round: float
    sod_iterations: int
    constant: float


def oracle_budget(instance: ProblemInstance, cfg: SodConfig, eta: float,
                  F: float | None = None, gamma: float = 1.0) -> OracleBudget:
    """Budget from the telescoping distance argument.

    Average pulls per round are at most 1 + gamma (2 sqrt2 eta alpha R F + eta^2 F^2) / eps^2,
    where F bounds the norm of the gradient fed on an update round and gamma
    is the fraction of rounds that update.  Each pull costs at most N oracle
    calls, with N evaluated at the iterate-norm bound (1 + sqrt2) alpha R.
    """
    F = instance.F_bound if F is None else F
    aR, eps = instance.alpha * instance.R, cfg.epsilon
    pulls = 1.0 + gamma * (2 * math.sqrt(2) * eta * aR * F + (eta * F) ** 2) / eps**2
    N = sod_iteration_bound(instance, cfg)
    calls = pulls * N
    d = instance.dimension
    scale = d * d * math.log((instance.alpha + 1) * instance.R / eps)
    return OracleBudget(calls, pulls, N, calls / scale)


def initial_point(instance: ProblemInstance, meter: OracleMeter | None = None) -> np.ndarray:
    """Oracle answer at the all-ones direction: some point of K."""
    return oracle_query(instance, np.ones(instance.dimension), meter)


@dataclass(frozen=True)
class RoundRecord:
    played: np.ndarray
    value: float
    pulls: int
    oracle_calls: int


@dataclass
class FullInfoState:
    instance: ProblemInstance
    eta: float
    sod: SodConfig
    rng: np.random.Generator
    y_tilde: np.ndarray
    s: np.ndarray
    meter: OracleMeter = field(default_factory=OracleMeter)
    decomposition: Decomposition | None = None
    t: int = 0
    fast: bool | None = None

    @property
    def epsilon(self) -> float:
        return self.sod.epsilon


def init_full_info(instance: ProblemInstance, eta: float, epsilon: float,
                   rng: np.random.Generator, fast: bool | None = None,
                   **sod_options) -> FullInfoState:
    if not eta > 0:
        raise ValueError("eta must be positive")
    cfg = SodConfig(epsilon, **sod_options)
    cfg.validate(instance)
    meter = OracleMeter()
    s1 = initial_point(instance, meter)
    return FullInfoState(instance, eta, cfg, rng, instance.alpha * s1, s1, meter, fast=fast)


def full_info_update(state: FullInfoState, f) -> tuple[int, int]:
    """Gradient step on y_tilde, projection, and a fresh sample of s.

    Returns (pulls, oracle calls) of the projection.
    """
    y = ogd_step(state.y_tilde, f, state.eta, state.instance.mode)
    res = infeasible_projection(y, state.instance, state.sod, state.meter, fast=state.fast)
    state.y_tilde = res.y_tilde
    state.decomposition = res.decomposition
    state.s = res.decomposition.sample(state.rng)
    return res.pulls, res.oracle_calls


def full_info_round(state: FullInfoState, f) -> RoundRecord:
    """Play s_t against f_t, then update for the next round."""
    f = np.asarray(f, dtype=float)
    played = state.s
    value = float(played @ f)
    pulls, calls = full_info_update(state, f)
    state.t += 1
    return RoundRecord(played, value, pulls, calls)


class FrankWolfeCapError(RuntimeError):
    """Frank-Wolfe ran past the potential-decrease iteration cap."""


class Mixture:
    """Explicit convex combination of points of K."""

    def __init__(self, points, weights):
        self.points = np.atleast_2d(np.asarray(points, dtype=float))
        self.weights = np.asarray(weights, dtype=float)
        if len(self.points) != len(self.weights):
            raise ValueError("one weight per point")

    @classmethod
    def point_mass(cls, s) -> Mixture:
        return cls([s], [1.0])

    @classmethod
    def over(cls, points, index: int) -> Mixture:
        """Unit mass on row ``index`` of a fixed point list."""
        w = np.zeros(len(points))
        w[index] = 1.0
        return cls(points, w)

    def blend(self, s, lam: float) -> Mixture:
        """(1 - lam) * self + lam * delta_s."""
        w = (1.0 - lam) * self.weights
        hit = np.nonzero((self.points == s).all(axis=1))[0]
        if len(hit):
            w[hit[0]] += lam
            return Mixture(self.points, w)
        return Mixture(np.vstack([self.points, s]), np.append(w, lam))

    def mean(self) -> np.ndarray:
        return self.weights @ self.points

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        cdf = np.cumsum(self.weights)
        i = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
        return self.points[min(i, len(cdf) - 1)]


@dataclass(frozen=True)
class FwResult:
    x: np.ndarray
    mixture: Mixture
    iterations: int  # oracle calls, including the final stopping check
    ball_violations: int


def fw_step(instance: ProblemInstance, epsilon: float) -> float:
    return epsilon / (3 * (instance.alpha + 2) ** 2 * instance.R**2)


def fw_potential_decrease(instance: ProblemInstance, epsilon: float) -> float:
    """Guaranteed drop of ||x - y||^2 per non-final Frank-Wolfe iteration."""
    return 2 * epsilon**2 / (9 * (instance.alpha + 2) ** 2 * instance.R**2)


def fw_iteration_cap(instance: ProblemInstance, epsilon: float, gap_sq: float) -> int:
    return math.ceil(gap_sq / fw_potential_decrease(instance, epsilon)) + 2


def kkl_fw_projection(y, epsilon: float, x0, mixture: Mixture, instance: ProblemInstance,
                      meter: OracleMeter | None = None, fast: bool | None = None,
                      trace: list | None = None) -> FwResult:
    """Frank-Wolfe approximate projection of y with fixed step.

    Starts from (x0, mixture) with the mixture's mean dominating x0, stops
    at the first iterate with (x - y).(x - v) <= eps, v from the extended
    oracle at x - y.  Iterates leaving B(0, (alpha+2)R) are counted in
    ``ball_violations`` rather than silently accepted.  Passing a list as
    ``trace`` forces the generic path and records ||x - y||^2 per iterate.
    """
    y = np.ascontiguousarray(y, dtype=float)
    x0 = np.ascontiguousarray(x0, dtype=float)
    if not 0 < epsilon <= 3 * (instance.alpha + 2) ** 2 * instance.R**2:
        raise ValueError("epsilon outside (0, 3(alpha+2)^2 R^2]")
    lam = fw_step(instance, epsilon)
    cap = fw_iteration_cap(instance, epsilon, float((x0 - y) @ (x0 - y)))
    radius = (instance.alpha + 2) * instance.R
    if fast is None:
        fast = instance.is_finite and trace is None
    if fast:
        pts = instance.oracle.points
        if mixture.points is not pts:
            raise ValueError("the compiled path needs a mixture over the instance's point list")
        weights = mixture.weights.copy()
        x, n, status, viol = _kernels.fw_finite(y, x0, epsilon, lam, pts, instance.alpha,
                                                instance.R, instance.loss, weights, cap, radius)
        if meter is not None:
            meter.tick(int(n))
        if status == _kernels.FW_CAP:
            raise FrankWolfeCapError(f"no stop within {cap} iterations")
        return FwResult(x, Mixture(pts, weights), int(n), int(viol))

    x, mix, viol = x0.copy(), mixture, 0
    for i in range(cap):
        if np.linalg.norm(x) > radius * (1 + 1e-12):
            viol += 1
        if trace is not None:
            trace.append(float((x - y) @ (x - y)))
        out = extended_oracle_query(instance, x - y, meter)
        if (x - y) @ (x - out.v) <= epsilon:
            return FwResult(x, mix, i + 1, viol)
        x = x + lam * (out.v - x)
        mix = mix.blend(out.s, lam)
    raise FrankWolfeCapError(f"no stop within {cap} iterations")


@dataclass
class KklState:
    instance: ProblemInstance
    eta: float
    epsilon: float
    lam: float
    rng: np.random.Generator
    x: np.ndarray
    mixture: Mixture
    s: np.ndarray
    meter: OracleMeter = field(default_factory=OracleMeter)
    t: int = 0
    ball_violations: int = 0
    fast: bool | None = None


def init_kkl(instance: ProblemInstance, eta: float, epsilon: float,
             rng: np.random.Generator, fast: bool | None = None) -> KklState:
    """x_1 = alpha s_1, dominated by the point mass at s_1."""
    if not eta > 0:
        raise ValueError("eta must be positive")
    meter = OracleMeter()
    if fast is None:
        fast = instance.is_finite
    s1 = initial_point(instance, meter)
    if fast:
        pts = instance.oracle.points
        mix = Mixture.over(pts, int(np.nonzero((pts == s1).all(axis=1))[0][0]))
    else:
        mix = Mixture.point_mass(s1)
    return KklState(instance, eta, epsilon, fw_step(instance, epsilon), rng,
                    instance.alpha * s1, mix, s1.copy(), meter, fast=fast)


def kkl_full_info_round(state: KklState, f) -> RoundRecord:
    """Play s_t, then project y_{t+1} by Frank-Wolfe from (x_t, s_bar_t)."""
    f = np.asarray(f, dtype=float)
    played = state.s
    value = float(played @ f)
    y = ogd_step(state.x, f, state.eta, state.instance.mode)
    res = kkl_fw_projection(y, state.epsilon, state.x, state.mixture, state.instance,
                            state.meter, state.fast)
    state.x, state.mixture = res.x, res.mixture
    state.ball_violations += res.ball_violations
    state.s = state.mixture.sample(state.rng)
    state.t += 1
    return RoundRecord(played, value, res.iterations, res.iterations)
