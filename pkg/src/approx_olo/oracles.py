"""Approximation oracles, problem instances and the extended oracle.

A feasible set K lives in the nonnegative orthant and is reachable only
through an alpha-approximate linear optimization oracle defined on
nonnegative directions.  ``alpha >= 1`` means the instance is a loss
(minimization) problem, ``alpha < 1`` a payoff (maximization) problem.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import _kernels

log = logging.getLogger(__name__)

LOSS = "loss"
PAYOFF = "payoff"

# directions shorter than this are treated as the zero vector
ZERO_NORM = _kernels.ZERO_NORM


class OracleContractError(ValueError):
    """A raw oracle was queried outside the nonnegative orthant."""


class NotEnumerable(RuntimeError):
    """The instance is too large to list every point of K."""


@dataclass
class OracleMeter:
    """Counts raw oracle queries.  Callers own the meter; nothing is global."""

    calls: int = 0

    def tick(self, n: int = 1) -> None:
        self.calls += n


class FiniteOracle:
    """Oracle over an explicit point list.

    With ``alpha == 1`` this is exact minimization.  For any other alpha it
    is deliberately degraded: among the points meeting the alpha guarantee
    it returns the one with the worst value (lowest index on ties).
    """

    def __init__(self, points, alpha: float = 1.0):
        self.points = np.ascontiguousarray(np.atleast_2d(np.asarray(points, dtype=float)))
        self.alpha = float(alpha)
        self.loss = self.alpha >= 1.0

    @property
    def dimension(self) -> int:
        return self.points.shape[1]

    def query_index(self, c: np.ndarray) -> int:
        return int(_kernels.select_finite(self.points, np.ascontiguousarray(c, dtype=float),
                                          self.alpha, self.loss))

    def query(self, c: np.ndarray) -> np.ndarray:
        return self.points[self.query_index(c)].copy()

    def enumerate(self) -> np.ndarray:
        return self.points

    def to_dict(self) -> dict:
        return {"points": self.points.tolist()}


class GreedySetCover:
    """Chvatal's greedy rule for weighted set cover.

    Decision vectors are indicators in {0,1}^m (one coordinate per set); K is
    every indicator that covers the universe {0, ..., n-1}.  The greedy cover
    costs at most H_n <= 1 + ln n times the optimum.
    """

    max_enumerable = 20

    def __init__(self, n: int, sets: Sequence[Sequence[int]]):
        self.n = int(n)
        self.sets = [frozenset(int(e) for e in s) for s in sets]
        universe = frozenset(range(self.n))
        for s in self.sets:
            if not s <= universe:
                raise ValueError(f"set {sorted(s)} has elements outside 0..{self.n - 1}")
        if frozenset().union(*self.sets) != universe:
            raise ValueError("the sets do not cover the universe; K is empty")
        self.alpha = 1.0 + math.log(self.n) if self.n > 1 else 1.0
        self.loss = True
        self._covers = None

    @property
    def dimension(self) -> int:
        return len(self.sets)

    def query(self, c: np.ndarray) -> np.ndarray:
        uncovered = set(range(self.n))
        chosen = np.zeros(len(self.sets))
        while uncovered:
            best, best_ratio = -1, math.inf
            for j, s in enumerate(self.sets):
                if chosen[j]:
                    continue
                new = len(s & uncovered)
                if new == 0:
                    continue
                ratio = c[j] / new
                if ratio < best_ratio:
                    best, best_ratio = j, ratio
            chosen[best] = 1.0
            uncovered -= self.sets[best]
        return chosen

    def enumerate(self) -> np.ndarray:
        """All covers, by brute force over the 2^m subsets."""
        m = len(self.sets)
        if m > self.max_enumerable:
            raise NotEnumerable(f"{m} sets exceed the brute-force limit of {self.max_enumerable}")
        if self._covers is None:
            incidence = np.zeros((m, self.n), dtype=np.int32)
            for j, s in enumerate(self.sets):
                incidence[j, list(s)] = 1
            masks = np.arange(2**m, dtype=np.int64)
            bits = ((masks[:, None] >> np.arange(m)) & 1).astype(np.int32)
            covered = (bits @ incidence) > 0
            self._covers = bits[covered.all(axis=1)].astype(float)
        return self._covers

    def to_dict(self) -> dict:
        return {"setcover": {"n": self.n,
                             "sets": [{"elements": sorted(s), "cost_index": j}
                                      for j, s in enumerate(self.sets)]}}


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    """The feasible set's oracle together with its scale constants."""

    dimension: int
    alpha: float
    R: float
    F_bound: float
    C_bound: float
    oracle: FiniteOracle | GreedySetCover
    mode: str = field(default="")

    def __post_init__(self):
        expected = LOSS if self.alpha >= 1.0 else PAYOFF
        if not self.mode:
            object.__setattr__(self, "mode", expected)
        if self.mode != expected:
            raise ValueError(f"mode {self.mode!r} inconsistent with alpha={self.alpha}")
        if self.alpha <= 0 or self.R <= 0 or self.F_bound <= 0 or self.C_bound <= 0:
            raise ValueError("alpha, R, F_bound and C_bound must be positive")
        if self.oracle.dimension != self.dimension:
            raise ValueError("oracle dimension does not match the instance")
        if self.is_finite:
            pts = self.oracle.points
            if (pts < 0).any():
                raise ValueError("points of K must lie in the nonnegative orthant")
            if np.linalg.norm(pts, axis=1).max() > self.R * (1 + 1e-12):
                raise ValueError("a point of K has norm larger than R")

    @property
    def loss(self) -> bool:
        return self.mode == LOSS

    @property
    def is_finite(self) -> bool:
        """True when the compiled fast paths apply."""
        return isinstance(self.oracle, FiniteOracle)

    def points(self) -> np.ndarray:
        """Every point of K (raises NotEnumerable when too large)."""
        return self.oracle.enumerate()

    def to_dict(self) -> dict:
        out = {"dimension": self.dimension, "mode": self.mode, "alpha": self.alpha,
               "R": self.R, "F_bound": self.F_bound, "C_bound": self.C_bound}
        out.update(self.oracle.to_dict())
        return out


def finite_instance(points, alpha: float = 1.0, F_bound: float = 1.0,
                    C_bound: float | None = None, R: float | None = None) -> ProblemInstance:
    """Instance over an explicit point list; R and C default to the tight values."""
    oracle = FiniteOracle(points, alpha)
    if R is None:
        R = float(np.linalg.norm(oracle.points, axis=1).max())
    if C_bound is None:
        C_bound = R * F_bound
    return ProblemInstance(oracle.dimension, float(alpha), float(R), float(F_bound),
                           float(C_bound), oracle)


def setcover_instance(n: int, sets: Sequence[Sequence[int]], F_bound: float = 1.0,
                      C_bound: float | None = None) -> ProblemInstance:
    oracle = GreedySetCover(n, sets)
    m = oracle.dimension
    R = math.sqrt(m)
    if C_bound is None:
        C_bound = R * F_bound
    return ProblemInstance(m, oracle.alpha, R, float(F_bound), float(C_bound), oracle)


def instance_from_dict(doc: dict) -> ProblemInstance:
    """Build an instance from the JSON schema documented in the README."""
    alpha = doc.get("alpha")
    if "points" in doc:
        oracle = FiniteOracle(doc["points"], 1.0 if alpha is None else alpha)
        R = doc.get("R", float(np.linalg.norm(oracle.points, axis=1).max()))
    elif "setcover" in doc:
        sc = doc["setcover"]
        entries = sorted(sc["sets"], key=lambda e: e["cost_index"])
        if [e["cost_index"] for e in entries] != list(range(len(entries))):
            raise ValueError("cost_index values must be a permutation of 0..m-1")
        oracle = GreedySetCover(sc["n"], [e["elements"] for e in entries])
        R = doc.get("R", math.sqrt(oracle.dimension))
    else:
        raise ValueError("instance needs either 'points' or 'setcover'")
    if alpha is None:
        alpha = oracle.alpha
    elif not math.isclose(alpha, oracle.alpha):
        raise ValueError(f"alpha={alpha} does not match the oracle's guarantee {oracle.alpha}")
    F = float(doc.get("F_bound", 1.0))
    C = float(doc.get("C_bound", R * F))
    d = int(doc.get("dimension", oracle.dimension))
    return ProblemInstance(d, float(alpha), float(R), F, C, oracle, doc.get("mode", ""))


def load_instance(path: str | Path) -> ProblemInstance:
    return instance_from_dict(json.loads(Path(path).read_text()))


def save_instance(instance: ProblemInstance, path: str | Path) -> None:
    Path(path).write_text(json.dumps(instance.to_dict(), indent=2))


def oracle_query(instance: ProblemInstance, c, meter: OracleMeter | None = None) -> np.ndarray:
    """The single metered entry point to the raw oracle."""
    c = np.asarray(c, dtype=float)
    if (c < 0).any():
        raise OracleContractError("the raw oracle accepts only nonnegative directions")
    if meter is not None:
        meter.tick()
    return instance.oracle.query(c)


@dataclass(frozen=True)
class SignSplit:
    plus: np.ndarray
    minus: np.ndarray


def split_signs(c) -> SignSplit:
    c = np.asarray(c, dtype=float)
    return SignSplit(np.where(c >= 0, c, 0.0), np.where(c < 0, c, 0.0))


def normalized(v: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(v)
    return v / n if n >= ZERO_NORM else np.zeros_like(v)


@dataclass(frozen=True)
class ExtendedOracleOutput:
    v: np.ndarray  # possibly infeasible, beats every point of alpha*K along c
    s: np.ndarray  # point of K dominating v on nonnegative vectors


def extended_oracle_query(instance: ProblemInstance, c,
                          meter: OracleMeter | None = None) -> ExtendedOracleOutput:
    """Lift the raw oracle to arbitrary directions (one raw query)."""
    parts = split_signs(c)
    if instance.loss:
        s = oracle_query(instance, parts.plus, meter)
        v = s - instance.alpha * instance.R * normalized(parts.minus)
    else:
        s = oracle_query(instance, -parts.minus, meter)
        v = s - instance.R * normalized(parts.plus)
    return ExtendedOracleOutput(v, s)


def min_over_scaled(instance: ProblemInstance, c) -> float:
    """min over alpha*K of x.c by enumeration (measurement only)."""
    return float(instance.alpha * (instance.points() @ np.asarray(c, dtype=float)).min())
