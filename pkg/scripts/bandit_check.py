"""Bandit reduction: regret against the explicit bound and exploration bookkeeping.

    python3 scripts/bandit_check.py --config configs/run_bandit.json --seeds 20
"""

import argparse
import math
from dataclasses import replace

import numpy as np

from approx_olo.harness import load_config, run_game


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", required=True)
    ap.add_argument("--seeds", type=int, default=20)
    args = ap.parse_args(argv)

    base = load_config(args.config)
    spanner = base.resolved_spanner()
    logs = [run_game(replace(base, seed=s)) for s in range(args.seeds)]
    inst, p = base.instance, logs[0].parameters
    d, C, F, R, a = inst.dimension, inst.C_bound, inst.F_bound, inst.R, inst.alpha
    bound = (a**2 * R**2 / (p.eta * base.T) + p.eta * d**2 * C**2 * spanner.beta**2 / (2 * p.gamma)
             + 3 * p.epsilon * F + p.gamma * C)
    reg = np.array([g.alpha_regret for g in logs])
    se = reg.std(ddof=1) / math.sqrt(len(reg)) if len(reg) > 1 else 0.0
    explore = np.array([g.explore.mean() for g in logs])
    print(f"beta={spanner.beta:.3f} eta={p.eta:.3e} eps={p.epsilon:.3e} gamma={p.gamma:.3e}")
    print(f"mean alpha-regret {reg.mean():+.4f} (se {se:.1e}) vs bound {bound:.4f}")
    print(f"explore fraction {explore.mean():.4f}, projections == explore rounds: "
          f"{all(g.projections == g.explore.sum() for g in logs)}")
    print(f"oracle calls/round {np.mean([g.oracle_calls_per_round for g in logs]):.2f}")


if __name__ == "__main__":
    main()
