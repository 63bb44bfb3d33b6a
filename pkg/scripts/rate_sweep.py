"""Regret and oracle calls per round over a T grid (T-doubling by default).

    python3 scripts/rate_sweep.py --config configs/run_new_t13.json --t-grid 1e3,2e3,4e3,8e3
"""

import argparse
from dataclasses import replace

from approx_olo.harness import load_config, parse_t_grid, run_sweep


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", required=True)
    ap.add_argument("--t-grid", default="1e3,2e3,4e3,8e3,1.6e4,3.2e4")
    ap.add_argument("--replications", type=int, default=3)
    ap.add_argument("--algorithms", default="new_full_info")
    args = ap.parse_args(argv)

    cfg = replace(load_config(args.config), replications=args.replications)
    _, summary = run_sweep(cfg, parse_t_grid(args.t_grid), args.algorithms.split(","))
    prev = {}
    for s in summary:
        step = s["mean_oracle_calls_per_round"] - prev.get(s["algorithm"], float("nan"))
        prev[s["algorithm"]] = s["mean_oracle_calls_per_round"]
        print(f"{s['algorithm']:>14} T={s['T']:>6} regret={s['mean_regret']:+.4f}"
              f" (se {s['se']:.1e}) calls/round={s['mean_oracle_calls_per_round']:8.1f}"
              f" step={step:+.1f}")


if __name__ == "__main__":
    main()
