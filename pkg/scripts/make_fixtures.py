"""Regenerate the committed synthetic price fixtures under data/.

The 12-asset file mimics one calendar year (2024) of daily closes on
the NYSE schedule: 262 weekdays minus 10 market holidays = 252 rows.
Returns come from a two-factor model with idiosyncratic noise, so the
covariance matrix is well conditioned and genuinely cross-correlated.
Everything is seeded; rerunning this script reproduces byte-identical
files.
"""
from __future__ import annotations

import datetime as dt
from pathlib import Path

import numpy as np

OUT_DIR = Path(__file__).resolve().parent.parent / "data"

HOLIDAYS_2024 = {
    dt.date(2024, 1, 1), dt.date(2024, 1, 15), dt.date(2024, 2, 19),
    dt.date(2024, 3, 29), dt.date(2024, 5, 27), dt.date(2024, 6, 19),
    dt.date(2024, 7, 4), dt.date(2024, 9, 2), dt.date(2024, 11, 28),
    dt.date(2024, 12, 25),
}

ASSETS_12 = ["600519.SS", "601318.SS", "000858.SZ", "600036.SS", "601857.SS",
             "000333.SZ", "AAPL", "MSFT", "NVDA", "AMZN", "JPM", "XOM"]
ASSETS_8 = ["AST0", "AST1", "AST2", "AST3", "AST4", "AST5", "AST6", "AST7"]
ASSETS_4 = ["W", "X", "Y", "Z"]


def trading_days_2024() -> list[str]:
    day = dt.date(2024, 1, 1)
    days = []
    while day.year == 2024:
        if day.weekday() < 5 and day not in HOLIDAYS_2024:
            days.append(day.isoformat())
        day += dt.timedelta(days=1)
    return days


def simulate_prices(n_assets: int, n_days: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    start = rng.uniform(20.0, 300.0, size=n_assets)
    drift = rng.normal(3e-4, 4e-4, size=n_assets)
    vol = rng.uniform(0.008, 0.025, size=n_assets)
    loadings = rng.normal(0.0, 1.0, size=(n_assets, 2))
    loadings /= np.linalg.norm(loadings, axis=1, keepdims=True)
    idio = rng.uniform(0.4, 0.8, size=n_assets)

    factors = rng.normal(size=(n_days - 1, 2))
    noise = rng.normal(size=(n_days - 1, n_assets))
    shocks = factors @ loadings.T * np.sqrt(1 - idio**2) + noise * idio
    returns = drift + vol * shocks
    prices = np.empty((n_days, n_assets))
    prices[0] = start
    prices[1:] = start * np.cumprod(1.0 + returns, axis=0)
    return prices


def write_csv(path: Path, names: list[str], labels: list[str], prices: np.ndarray):
    lines = ["date," + ",".join(names)]
    for label, row in zip(labels, prices):
        lines.append(label + "," + ",".join(f"{v:.4f}" for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {path} ({prices.shape[0]} x {prices.shape[1]})")


def main():
    OUT_DIR.mkdir(exist_ok=True)
    days = trading_days_2024()
    assert len(days) == 252, len(days)
    write_csv(OUT_DIR / "prices_12.csv", ASSETS_12, days,
              simulate_prices(12, len(days), seed=20240101))
    write_csv(OUT_DIR / "prices_8.csv", ASSETS_8, days[:120],
              simulate_prices(8, 120, seed=808))
    write_csv(OUT_DIR / "prices_4.csv", ASSETS_4, days[:40],
              simulate_prices(4, 40, seed=44))


if __name__ == "__main__":
    main()
