"""Experiment driver: adversaries, regret measurement, games and sweeps."""

from __future__ import annotations

import csv
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .bandit import (BanditState, SpannerData, bandit_round, build_spanner_finite,
                     check_spanner, load_spanner)
from .oracles import (LOSS, NotEnumerable, ProblemInstance, instance_from_dict,
                      load_instance, oracle_query)
from .online import (Parameters, full_info_round, init_full_info, init_kkl,
                     kkl_full_info_round, preset_parameters)

log = logging.getLogger(__name__)

ALGORITHMS = ("new_full_info", "kkl_full_info", "bandit")
ADVERSARIES = ("iid_uniform", "fixed_vector", "drift", "piecewise")
DEFAULT_PRESET = {"new_full_info": "t13", "kkl_full_info": "kkl", "bandit": "theorem2"}
CSV_HEADER = ["T", "algorithm", "preset", "seed", "alpha_regret", "oracle_calls_per_round",
              "mean_k_t", "walltime_ms"]
MASK64 = (1 << 64) - 1
ADVERSARY_STREAM = 0
LEARNER_STREAM = 1


def make_rng(seed: int, replication: int, stream: int) -> np.random.Generator:
    """Counter-based generator keyed by seed xor replication, one jump per stream."""
    bits = np.random.Philox(key=(int(seed) ^ int(replication)) & MASK64)
    return np.random.Generator(bits.jumped(stream))


@dataclass(frozen=True)
class GameConfig:
    instance: ProblemInstance
    algorithm: str = "new_full_info"
    preset: str = ""
    T: int = 1000
    adversary: str = "iid_uniform"
    seed: int = 0
    replications: int = 1
    eta: float | None = None
    epsilon: float | None = None
    gamma: float | None = None
    adversary_options: dict = field(default_factory=dict)
    spanner: SpannerData | None = None
    jobs: int = 1

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"algorithm must be one of {ALGORITHMS}")
        if not self.preset:
            object.__setattr__(self, "preset", DEFAULT_PRESET[self.algorithm])
        if self.adversary not in ADVERSARIES:
            raise ValueError(f"adversary must be one of {ADVERSARIES}")
        if int(self.T) < 1:
            raise ValueError("T must be at least 1")
        object.__setattr__(self, "T", int(self.T))
        if self.replications < 1:
            raise ValueError("replications must be at least 1")
        if self.preset == "theorem2" and self.algorithm != "bandit":
            raise ValueError("the theorem2 preset is for the bandit algorithm")
        if self.algorithm == "bandit" and self.preset in ("t13", "t12", "kkl"):
            raise ValueError("the bandit algorithm needs a theorem2 or custom preset")
        if self.preset == "custom":
            if self.eta is None or self.epsilon is None:
                raise ValueError("the custom preset needs eta and epsilon")
            if self.algorithm == "bandit" and self.gamma is None:
                raise ValueError("a custom bandit preset needs gamma")
        if self.preset != "theorem2":
            self.parameters()  # range checks

    def resolved_spanner(self) -> SpannerData | None:
        if self.algorithm != "bandit":
            return None
        if self.spanner is not None:
            return self.spanner
        return build_spanner_finite(self.instance.points())

    def parameters(self, spanner: SpannerData | None = None) -> Parameters:
        inst = self.instance
        if self.preset == "custom":
            p = Parameters(self.eta, self.epsilon, self.gamma)
        elif self.preset == "theorem2":
            beta = (spanner or self.resolved_spanner()).beta
            p = preset_parameters("theorem2", inst, self.T, beta)
        else:
            p = preset_parameters(self.preset, inst, self.T)
        if not p.eta > 0:
            raise ValueError("eta must be positive")
        limit = (inst.alpha + 2) * inst.R
        if self.algorithm == "kkl_full_info":
            limit = 3 * limit * limit
        if not 0 < p.epsilon <= limit:
            raise ValueError(f"epsilon={p.epsilon} outside (0, {limit}]")
        if self.algorithm == "bandit" and not (p.gamma is not None and 0 < p.gamma < 1):
            raise ValueError("gamma must lie in (0, 1)")
        return p

    def to_dict(self) -> dict:
        out = {"instance": self.instance.to_dict(), "algorithm": self.algorithm,
               "preset": self.preset, "T": self.T, "adversary": self.adversary,
               "seed": self.seed, "replications": self.replications, "jobs": self.jobs}
        for name in ("eta", "epsilon", "gamma"):
            if getattr(self, name) is not None:
                out[name] = getattr(self, name)
        if self.adversary_options:
            out["adversary_options"] = self.adversary_options
        if self.spanner is not None:
            out["spanner"] = self.spanner.to_dict()
        return out


def config_from_dict(doc: dict, base_dir: str | Path = ".") -> GameConfig:
    """Build a GameConfig from its JSON form; instance and spanner may be paths."""
    base = Path(base_dir)
    inst = doc["instance"]
    instance = load_instance(base / inst) if isinstance(inst, str) else instance_from_dict(inst)
    spanner = None
    if "spanner" in doc:
        sp = doc["spanner"]
        if isinstance(sp, str):
            spanner = load_spanner(base / sp, instance)
        else:
            spanner = SpannerData.from_points(sp["points"])
    keys = ("algorithm", "preset", "T", "adversary", "seed", "replications", "eta",
            "epsilon", "gamma", "adversary_options", "jobs")
    kwargs = {k: doc[k] for k in keys if k in doc}
    if "T" in kwargs:
        kwargs["T"] = int(float(kwargs["T"]))
    return GameConfig(instance=instance, spanner=spanner, **kwargs)


def load_config(path: str | Path) -> GameConfig:
    path = Path(path)
    return config_from_dict(json.loads(path.read_text()), path.parent)


def _max_over_K(instance: ProblemInstance, fs: np.ndarray) -> np.ndarray:
    try:
        return (fs @ instance.points().T).max(axis=1)
    except NotEnumerable:
        return instance.R * np.linalg.norm(fs, axis=1)


def generate_adversary(kind: str, instance: ProblemInstance, T: int,
                       rng: np.random.Generator, **options) -> np.ndarray:
    """The whole oblivious sequence f_1..f_T, fixed before any play.

    Every row is nonnegative with norm at most F_bound and max over K of
    x.f at most C_bound (rows are shrunk when needed).
    """
    d, F = instance.dimension, instance.F_bound
    if kind == "iid_uniform":
        fs = rng.random((T, d)) * (F / math.sqrt(d))
    elif kind == "fixed_vector":
        vec = np.asarray(options.get("vector", rng.random(d)), dtype=float)
        fs = np.tile(vec, (T, 1))
    elif kind == "drift":
        start = np.asarray(options.get("start", np.eye(d)[0] * F), dtype=float)
        end = np.asarray(options.get("end", np.eye(d)[-1] * F), dtype=float)
        tau = np.linspace(0.0, 1.0, T)[:, None] if T > 1 else np.zeros((1, 1))
        fs = (1 - tau) * start + tau * end
    elif kind == "piecewise":
        pieces = int(options.get("pieces", 4))
        levels = rng.random((pieces, d)) * (F / math.sqrt(d))
        fs = levels[np.minimum(np.arange(T) * pieces // T, pieces - 1)]
    else:
        raise ValueError(f"unknown adversary {kind!r}")
    if (fs < 0).any():
        raise ValueError("adversary vectors must be nonnegative")
    norms = np.linalg.norm(fs, axis=1)
    fs = fs / np.maximum(1.0, norms / F)[:, None]
    peak = _max_over_K(instance, fs)
    fs = fs / np.maximum(1.0, peak / instance.C_bound)[:, None]
    return fs


@dataclass(frozen=True)
class OfflineBest:
    point: np.ndarray
    value: float
    exact: bool


def offline_best(instance: ProblemInstance, f_sum) -> OfflineBest:
    """Best fixed point of K against the summed vector (measurement only).

    When K cannot be enumerated the oracle's own answer stands in: value is
    its objective divided by alpha, so the alpha-scaled comparator equals the
    oracle's value and the reported regret is conservative.
    """
    f_sum = np.asarray(f_sum, dtype=float)
    try:
        pts = instance.points()
    except NotEnumerable:
        s = oracle_query(instance, f_sum)
        return OfflineBest(s, float(s @ f_sum) / instance.alpha, False)
    vals = pts @ f_sum
    i = int(np.argmin(vals) if instance.loss else np.argmax(vals))
    return OfflineBest(pts[i].copy(), float(vals[i]), True)


@dataclass
class GameLog:
    algorithm: str
    preset: str
    T: int
    seed: int
    replication: int
    parameters: Parameters
    f: np.ndarray
    played: np.ndarray
    values: np.ndarray
    pulls: np.ndarray
    oracle_calls: np.ndarray
    initial_oracle_calls: int
    explore: np.ndarray | None = None
    feedback: np.ndarray | None = None
    best: OfflineBest | None = None
    alpha_regret: float = float("nan")
    walltime_ms: float = 0.0
    ball_violations: int = 0
    projections: int = 0

    @property
    def total_value(self) -> float:
        return float(self.values.sum())

    @property
    def total_oracle_calls(self) -> int:
        return int(self.initial_oracle_calls + self.oracle_calls.sum())

    @property
    def oracle_calls_per_round(self) -> float:
        return self.total_oracle_calls / self.T

    @property
    def mean_k(self) -> float:
        return float(self.pulls.mean())

    def row(self) -> dict:
        return {"T": self.T, "algorithm": self.algorithm, "preset": self.preset,
                "seed": self.seed, "alpha_regret": self.alpha_regret,
                "oracle_calls_per_round": self.oracle_calls_per_round,
                "mean_k_t": self.mean_k, "walltime_ms": self.walltime_ms}

    def to_dict(self, rounds: bool = False) -> dict:
        out = self.row()
        out.update({"replication": self.replication, "eta": self.parameters.eta,
                    "epsilon": self.parameters.epsilon, "gamma": self.parameters.gamma,
                    "total_value": self.total_value,
                    "total_oracle_calls": self.total_oracle_calls,
                    "best_value": self.best.value if self.best else None,
                    "best_exact": self.best.exact if self.best else None,
                    "ball_violations": self.ball_violations,
                    "projections": self.projections})
        if rounds:
            out["rounds"] = {"f": self.f.tolist(), "played": self.played.tolist(),
                             "values": self.values.tolist(), "k": self.pulls.tolist(),
                             "oracle_calls": self.oracle_calls.tolist()}
            if self.explore is not None:
                out["rounds"]["explore"] = self.explore.tolist()
        return out


def compute_alpha_regret(log_: GameLog, best_value: float, alpha: float, mode: str) -> float:
    """Average value minus alpha times the best average (sign flipped for payoffs)."""
    avg = log_.total_value / log_.T
    best_avg = best_value / log_.T
    return avg - alpha * best_avg if mode == LOSS else alpha * best_avg - avg


def run_game(cfg: GameConfig, replication: int = 0) -> GameLog:
    """One deterministic game; the seed fixes both the adversary and the learner."""
    inst = cfg.instance
    start = time.perf_counter()
    fs = generate_adversary(cfg.adversary, inst, cfg.T,
                            make_rng(cfg.seed, replication, ADVERSARY_STREAM),
                            **cfg.adversary_options)
    rng = make_rng(cfg.seed, replication, LEARNER_STREAM)
    spanner = cfg.resolved_spanner()
    params = cfg.parameters(spanner)
    T, d = cfg.T, inst.dimension
    played = np.empty((T, d))
    values = np.empty(T)
    pulls = np.zeros(T, dtype=np.int64)
    calls = np.zeros(T, dtype=np.int64)
    explore = feedback = None
    violations = projections = 0

    if cfg.algorithm == "new_full_info":
        state = init_full_info(inst, params.eta, params.epsilon, rng)
        initial = state.meter.calls
        for t in range(T):
            rec = full_info_round(state, fs[t])
            played[t], values[t], pulls[t], calls[t] = rec.played, rec.value, rec.pulls, rec.oracle_calls
        projections = T
    elif cfg.algorithm == "kkl_full_info":
        state = init_kkl(inst, params.eta, params.epsilon, rng)
        initial = state.meter.calls
        for t in range(T):
            rec = kkl_full_info_round(state, fs[t])
            played[t], values[t], pulls[t], calls[t] = rec.played, rec.value, rec.pulls, rec.oracle_calls
        violations = state.ball_violations
        projections = T
        if violations:
            log.warning("%d Frank-Wolfe iterates left B(0, (alpha+2)R)", violations)
    else:
        check_spanner(spanner, inst)
        inner = init_full_info(inst, params.eta, params.epsilon, rng)
        state = BanditState(inner, params.gamma, spanner)
        initial = inner.meter.calls
        explore = np.zeros(T, dtype=bool)
        feedback = np.empty(T)
        for t in range(T):
            f_t = fs[t]
            rec = bandit_round(state, lambda x: x @ f_t)
            played[t], pulls[t], calls[t] = rec.played, rec.pulls, rec.oracle_calls
            values[t] = float(rec.played @ f_t)
            explore[t], feedback[t] = rec.explore, rec.value
        projections = state.projections

    out = GameLog(cfg.algorithm, cfg.preset, T, cfg.seed, replication, params, fs, played,
                  values, pulls, calls, initial, explore, feedback,
                  ball_violations=violations, projections=projections)
    out.best = offline_best(inst, fs.sum(axis=0))
    out.alpha_regret = compute_alpha_regret(out, out.best.value, inst.alpha, inst.mode)
    out.walltime_ms = (time.perf_counter() - start) * 1e3
    log.info("%s/%s T=%d rep=%d regret=%.4g calls/round=%.1f", cfg.algorithm, cfg.preset,
             T, replication, out.alpha_regret, out.oracle_calls_per_round)
    return out


def _run_cell(args):
    cfg, rep = args
    return run_game(cfg, rep)


def run_replications(cfg: GameConfig, jobs: int | None = None) -> list[GameLog]:
    tasks = [(cfg, r) for r in range(cfg.replications)]
    return _run_tasks(tasks, jobs or cfg.jobs)


def _run_tasks(tasks, jobs: int) -> list[GameLog]:
    if jobs <= 1 or len(tasks) <= 1:
        return [_run_cell(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_cell, tasks))  # ordered merge


def summarize(logs: Sequence[GameLog]) -> dict:
    reg = np.array([g.alpha_regret for g in logs])
    calls = np.array([g.oracle_calls_per_round for g in logs])
    se = float(reg.std(ddof=1) / math.sqrt(len(reg))) if len(reg) > 1 else 0.0
    return {"T": logs[0].T, "algorithm": logs[0].algorithm, "preset": logs[0].preset,
            "replications": len(logs), "mean_regret": float(reg.mean()), "se": se,
            "mean_oracle_calls_per_round": float(calls.mean()),
            "mean_k_t": float(np.mean([g.mean_k for g in logs]))}


def run_sweep(cfg: GameConfig, t_grid: Sequence[int],
              algorithms: Sequence[str] | None = None,
              jobs: int | None = None) -> tuple[list[dict], list[dict]]:
    """Every (T, algorithm) cell with cfg's replications.

    Returns (per-replication rows, one summary row per cell).  Presets
    resolve per cell, so the default preset of each algorithm applies when
    the base config does not fix one for it.
    """
    algorithms = list(algorithms or [cfg.algorithm])
    cells = []
    for T in t_grid:
        for alg in algorithms:
            preset = cfg.preset if alg == cfg.algorithm else DEFAULT_PRESET[alg]
            cells.append(replace(cfg, algorithm=alg, preset=preset, T=int(T)))
    tasks = [(c, r) for c in cells for r in range(c.replications)]
    logs = _run_tasks(tasks, jobs or cfg.jobs)
    rows = [g.row() for g in logs]
    summary, i = [], 0
    for c in cells:
        summary.append(summarize(logs[i:i + c.replications]))
        i += c.replications
    return rows, summary


def parse_t_grid(text: str) -> list[int]:
    return [int(float(tok)) for tok in text.split(",") if tok.strip()]


def write_csv(rows: Sequence[dict], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_HEADER, extrasaction="ignore")
        w.writeheader()
        w.writerows(rows)


def write_json(payload, path: str | Path) -> None:
    Path(path).write_text(json.dumps(payload, indent=2))
