"""Barycentric spanners and the explore/exploit bandit reduction.

Exploration rounds play a uniformly random spanner point q_i and turn the
scalar feedback l into the unbiased estimate (d l / gamma) Q^-1 q_i, with
Q = sum_i q_i q_i^T.  Exploitation rounds play the full-information learner's
point and feed it nothing, so its iterate does not move.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .oracles import ProblemInstance
from .online import FullInfoState, full_info_update

log = logging.getLogger(__name__)

SWAP_FACTOR = 1.01


@dataclass(frozen=True)
class SpannerData:
    points: np.ndarray  # q_1..q_d as rows
    Q_inv_q: np.ndarray  # rows Q^-1 q_i
    beta: float

    @property
    def dimension(self) -> int:
        return self.points.shape[1]

    @classmethod
    def from_points(cls, points) -> SpannerData:
        q = np.atleast_2d(np.asarray(points, dtype=float))
        d = q.shape[1]
        if q.shape[0] != d:
            raise ValueError(f"a spanner in R^{d} has exactly {d} points, got {q.shape[0]}")
        Q = q.T @ q
        if np.linalg.cond(Q) > 1e12:
            raise ValueError("spanner points are (numerically) linearly dependent")
        Qq = np.linalg.solve(Q, q.T).T
        return cls(q, Qq, float(np.linalg.norm(Qq, axis=1).max()))

    def to_dict(self) -> dict:
        return {"points": self.points.tolist(), "beta": self.beta}

    def max_feedback(self, F: float) -> float:
        """Largest |q_i . f| over the F-ball."""
        return float(np.linalg.norm(self.points, axis=1).max() * F)


def _abs_det(cols: np.ndarray) -> float:
    return abs(float(np.linalg.det(cols)))


def build_spanner_finite(points, swap_factor: float = SWAP_FACTOR) -> SpannerData:
    """Greedy determinant maximization over an explicit point list.

    First fill a basis column by column (starting from the identity), then
    swap in any point that grows |det| by more than ``swap_factor`` until no
    such swap remains.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    d = pts.shape[1]
    if np.linalg.matrix_rank(pts) < d:
        raise ValueError("points do not span R^d; no spanner exists")
    basis = np.eye(d)
    for i in range(d):
        best, best_det = None, -1.0
        for p in pts:
            trial = basis.copy()
            trial[:, i] = p
            det = _abs_det(trial)
            if det > best_det:
                best, best_det = trial, det
        basis = best
    improved = True
    while improved:
        improved = False
        current = _abs_det(basis)
        for i in range(d):
            for p in pts:
                trial = basis.copy()
                trial[:, i] = p
                if _abs_det(trial) > swap_factor * current:
                    basis, improved = trial, True
                    break
            if improved:
                break
    return SpannerData.from_points(basis.T)


def check_spanner(spanner: SpannerData, instance: ProblemInstance) -> bool:
    """Membership in K and the feedback bound |q_i . f| <= C.

    Raises on a point outside K; returns False (and logs) when some spanner
    point can see feedback above C_bound for an admissible f.
    """
    if instance.is_finite:
        pts = instance.points()
        for q in spanner.points:
            if not np.isclose(pts, q, rtol=0, atol=1e-12).all(axis=1).any():
                raise ValueError(f"spanner point {q.tolist()} is not in K")
    worst = spanner.max_feedback(instance.F_bound)
    if worst > instance.C_bound * (1 + 1e-12):
        log.warning("spanner feedback can reach %.4g > C_bound %.4g", worst, instance.C_bound)
        return False
    return True


def save_spanner(spanner: SpannerData, path: str | Path) -> None:
    Path(path).write_text(json.dumps(spanner.to_dict(), indent=2))


def load_spanner(path: str | Path, instance: ProblemInstance | None = None) -> SpannerData:
    """Read a spanner, recompute beta and compare it with the cached value."""
    doc = json.loads(Path(path).read_text())
    spanner = SpannerData.from_points(doc["points"])
    cached = doc.get("beta")
    if cached is not None and abs(cached - spanner.beta) > 1e-9 * max(1.0, spanner.beta):
        raise ValueError(f"cached beta {cached} disagrees with recomputed {spanner.beta}")
    if instance is not None:
        check_spanner(spanner, instance)
    return spanner


def estimate_loss_vector(ell: float, i: int, gamma: float, spanner: SpannerData) -> np.ndarray:
    return (spanner.dimension * ell / gamma) * spanner.Q_inv_q[i]


@dataclass
class BanditState:
    inner: FullInfoState
    gamma: float
    spanner: SpannerData
    projections: int = 0
    explore_rounds: int = 0

    def __post_init__(self):
        if not 0 < self.gamma <= 1:
            raise ValueError("gamma must lie in (0, 1]")
        if self.spanner.dimension != self.inner.instance.dimension:
            raise ValueError("spanner and instance dimensions differ")

    def estimate_bound(self) -> float:
        """d C beta / gamma, the largest possible estimate norm."""
        inst = self.inner.instance
        return inst.dimension * inst.C_bound * self.spanner.beta / self.gamma


@dataclass(frozen=True)
class BanditRecord:
    played: np.ndarray
    value: float
    explore: bool
    index: int  # spanner index on explore rounds, -1 otherwise
    f_hat: np.ndarray
    pulls: int
    oracle_calls: int


def bandit_round(state: BanditState, feedback: Callable[[np.ndarray], float]) -> BanditRecord:
    """One round; ``feedback(point)`` reveals only the scalar point . f_t."""
    inner = state.inner
    rng = inner.rng
    d = inner.instance.dimension
    if rng.random() < state.gamma:
        i = int(rng.integers(d))
        played = state.spanner.points[i]
        ell = float(feedback(played))
        f_hat = estimate_loss_vector(ell, i, state.gamma, state.spanner)
        pulls, calls = full_info_update(inner, f_hat)
        state.projections += 1
        state.explore_rounds += 1
        record = BanditRecord(played, ell, True, i, f_hat, pulls, calls)
    else:
        played = inner.s
        ell = float(feedback(played))
        record = BanditRecord(played, ell, False, -1, np.zeros(d), 0, 0)
    inner.t += 1
    return record
