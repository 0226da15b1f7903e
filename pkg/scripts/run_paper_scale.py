"""Full 12-asset sweep: 2 ansatzes x 2 optimizers x {cvar, wcvar} x 4 alphas.

Reproduces the comparison-grid experiment on the committed price
fixture: CMA-ES cells run 100 iterations, COBYLA cells 150, ten seeded
repeats each. Writes one directory per cell with per-run traces, the
aggregate success-rate / ground-probability curves, and a JSON summary.

    python scripts/run_paper_scale.py --out results/paper_scale --workers 2
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
    parser.add_argument("--out", default="results/paper_scale")
    parser.add_argument("--data", default=str(ROOT / "data" / "prices_12.csv"))
    parser.add_argument("--workers", type=int, default=2)
    parser.add_argument("--repeats", type=int, default=10)
    parser.add_argument("--seed", type=int, default=777)
    args = parser.parse_args()

    base = xp.ExperimentConfig(
        data=xp.DataConfig(path=args.data),
        portfolio=xp.PortfolioConfig(lam=0.5, penalty="auto"),
        cost=xp.CostConfig(scheme="piecewise_exp", alpha=1.0),
        optimizer=OptimizerConfig(kind="cmaes", max_iterations=100),
        shots=1000, top_k=10, n_repeats=args.repeats, seed=args.seed,
    )
    cells = xp.sweep_cells(base, ["two_local", "block"], ["cmaes", "cobyla"],
                           ["cvar", "piecewise_exp"], [1.0, 0.5, 0.25, 0.1],
                           iterations_by_optimizer={"cmaes": 100, "cobyla": 150})
    print(f"{len(cells)} cells x {args.repeats} repeats -> {args.out}")
    t0 = time.perf_counter()
    for name in xp.run_sweep(cells, args.out, workers=args.workers):
        print(f"  done {name}")
    print(f"total {time.perf_counter() - t0:.0f}s")


if __name__ == "__main__":
    main()
