"""Fast property checks behind the ``verify`` command.

Each check draws random cases from a fixed seed and returns a
``CheckResult``.  The pytest suite runs the same properties at full size.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .harness import GameConfig, run_game
from .oracles import (extended_oracle_query, finite_instance, min_over_scaled,
                      setcover_instance)
from .projection import hull_distance, infeasible_projection
from .sod import Separation, SodConfig, separation_or_decomposition


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def two_hot(d: int) -> np.ndarray:
    return np.array([v for v in itertools.product([0, 1], repeat=d) if sum(v) == 2], float)


def oracle_envelope(instance, w) -> float:
    """Upper bound on v.w over every possible extended-oracle output v.

    Loss outputs are s + alpha R u and payoff outputs s - R u with s in K and
    u a nonnegative unit vector (or zero), so the bound is max_K s.w plus
    alpha R ||w^+|| (losses) or R ||w^-|| (payoffs).  It also bounds z.w over
    alpha K.
    """
    w = np.asarray(w, dtype=float)
    top = float((instance.points() @ w).max())
    if instance.loss:
        return top + instance.alpha * instance.R * float(np.linalg.norm(np.maximum(w, 0)))
    return top + instance.R * float(np.linalg.norm(np.minimum(w, 0)))


def separable_point(instance, rng, margin: float):
    """A point x and unit w* with x.w* - (every oracle output).w* >= margin.

    Such x is at least ``margin`` from CH(alpha K) and from the hull of any
    set of oracle outputs, the regime where separation is promised.
    """
    d = instance.dimension
    w = rng.normal(size=d)
    w /= np.linalg.norm(w)
    z = rng.dirichlet(np.ones(len(instance.points()))) @ (instance.alpha * instance.points())
    t = oracle_envelope(instance, w) + margin - z @ w
    return z + t * w, w


def check_extended_oracle(n: int = 500, seed: int = 0) -> CheckResult:
    rng = np.random.default_rng(seed)
    pts = two_hot(4)
    instances = [finite_instance(pts), finite_instance(pts, alpha=2.0),
                 finite_instance(pts, alpha=0.5),
                 setcover_instance(4, [[0, 1], [2, 3], [0, 2], [1, 3], [0, 1, 2, 3]])]
    worst = 0.0
    for inst in instances:
        K = inst.points()
        for _ in range(n):
            c = rng.uniform(-1, 1, inst.dimension)
            out = extended_oracle_query(inst, c)
            gaps = [np.linalg.norm(out.v) - (inst.alpha + 2) * inst.R,
                    out.v @ c - min_over_scaled(inst, c),
                    (out.s - out.v).max() if inst.loss else (out.v - out.s).max(),
                    0.0 if np.isclose(K, out.s).all(axis=1).any() else 1.0]
            worst = max(worst, *gaps)
    return CheckResult("extended oracle", worst <= 1e-9, f"worst violation {worst:.2e}")


def check_sod(n: int = 40, seed: int = 1) -> CheckResult:
    rng = np.random.default_rng(seed)
    pts = two_hot(4)
    inst = finite_instance(pts)
    cfg = SodConfig(0.05)
    bad = 0
    for _ in range(n):
        x = rng.dirichlet(np.ones(len(pts))) @ pts
        res = separation_or_decomposition(x, cfg, inst)
        if isinstance(res, Separation) or np.linalg.norm(res.p - x) > 3.1 * cfg.epsilon:
            bad += 1
        far, _ = separable_point(inst, rng, 4 * cfg.epsilon + rng.uniform(0, 1))
        res = separation_or_decomposition(far, cfg, inst)
        if not isinstance(res, Separation) or ((far - pts) @ res.w).min() < cfg.epsilon - 1e-9:
            bad += 1
    return CheckResult("separation or decomposition", bad == 0, f"{bad} failures in {2 * n}")


def check_projection(n: int = 40, seed: int = 2) -> CheckResult:
    rng = np.random.default_rng(seed)
    pts = two_hot(4)
    inst = finite_instance(pts)
    cfg = SodConfig(0.1)
    worst = -np.inf
    for _ in range(n):
        y = rng.normal(size=4) * 2
        res = infeasible_projection(y, inst, cfg)
        gap = ((res.y_tilde - pts) ** 2).sum(1) - ((y - pts) ** 2).sum(1)
        worst = max(worst, gap.max(),
                    hull_distance(res.y_tilde, res.decomposition.v) - 3.1 * cfg.epsilon)
    return CheckResult("infeasible projection", worst <= 1e-9, f"worst violation {worst:.2e}")


def check_determinism(seed: int = 3) -> CheckResult:
    inst = finite_instance(two_hot(4))
    cfg = GameConfig(inst, "new_full_info", T=200, seed=seed)
    a, b = run_game(cfg), run_game(cfg)
    same = (np.array_equal(a.played, b.played) and np.array_equal(a.oracle_calls, b.oracle_calls)
            and a.alpha_regret == b.alpha_regret)
    return CheckResult("determinism", same, "bit-identical" if same else "runs differ")


ALL_CHECKS = (check_extended_oracle, check_sod, check_projection, check_determinism)


def run_checks() -> list[CheckResult]:
    return [check() for check in ALL_CHECKS]
