"""Compare the four tail-weighting schemes on the 8-asset fixture.

One cell per scheme (uniform CVaR, energy-exponential, rank-exponential,
piecewise-exponential), CMA-ES, 100 iterations, ten repeats. The
aggregate.csv curves show how strongly each weighting concentrates the
search on low-energy states.

    python scripts/run_weight_comparison.py --out results/weights
"""
from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from vqe_portfolio import experiment as xp
from vqe_portfolio.optimizers import OptimizerConfig


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="results/weights")
    parser.add_argument("--data", default=str(ROOT / "data" / "prices_8.csv"))
    parser.add_argument("--alpha", type=float, default=0.5)
    parser.add_argument("--workers", type=int, default=2)
    args = parser.parse_args()

    base = xp.ExperimentConfig(
        data=xp.DataConfig(path=args.data),
        portfolio=xp.PortfolioConfig(lam=0.5, penalty="auto"),
        optimizer=OptimizerConfig(kind="cmaes", max_iterations=100),
        cost=xp.CostConfig(scheme="cvar", alpha=args.alpha),
        shots=1000, top_k=10, n_repeats=10, seed=4242,
    )
    cells = xp.sweep_cells(base, ["two_local"], ["cmaes"],
                           ["cvar", "energy_exp", "rank_exp", "piecewise_exp"],
                           [args.alpha])
    t0 = time.perf_counter()
    for name in xp.run_sweep(cells, args.out, workers=args.workers):
        print(f"  done {name}")
    print(f"total {time.perf_counter() - t0:.0f}s")


if __name__ == "__main__":
    main()
