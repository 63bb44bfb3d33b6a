"""New method (preset t13) against the KKL Frank-Wolfe baseline on shared seeds.

    python3 scripts/head_to_head.py --alpha 2 --T 10000 --seeds 20 --out h2h.csv
"""

import argparse
import csv
import sys

import numpy as np

from approx_olo.checks import two_hot
from approx_olo.harness import GameConfig, run_game
from approx_olo.oracles import finite_instance


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--alpha", type=float, default=1.0)
    ap.add_argument("--T", type=int, default=10_000)
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--adversary", default="iid_uniform")
    ap.add_argument("--out", help="CSV path (default stdout)")
    args = ap.parse_args(argv)

    inst = finite_instance(two_hot(4), args.alpha)
    rows = []
    for seed in range(args.seeds):
        for alg in ("new_full_info", "kkl_full_info"):
            log = run_game(GameConfig(inst, alg, T=args.T, seed=seed, adversary=args.adversary))
            rows.append({**log.row(), "median_calls": float(np.median(log.oracle_calls))})
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    w = csv.DictWriter(fh, fieldnames=list(rows[0]))
    w.writeheader()
    w.writerows(rows)
    calls = {a: np.mean([r["oracle_calls_per_round"] for r in rows if r["algorithm"] == a])
             for a in ("new_full_info", "kkl_full_info")}
    print(f"# KKL/new oracle calls per round: {calls['kkl_full_info'] / calls['new_full_info']:.1f}x",
          file=sys.stderr)


if __name__ == "__main__":
    main()
