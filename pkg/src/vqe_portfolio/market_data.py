"""Historical closing prices -> return series, expected returns, covariance.

The CSV layout is ``date,<name1>,...,<nameN>`` followed by one row per
time point: ``label,v1,...,vN``. Prices must be strictly positive and at
least three rows are required so that the sample covariance of the
returns is defined.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class MarketDataError(ValueError):
    """Base class for price/return ingestion failures."""


class MalformedRow(MarketDataError):
    def __init__(self, line_number: int, reason: str):
        super().__init__(f"line {line_number}: {reason}")
        self.line_number = line_number


class NonPositivePrice(MarketDataError):
    def __init__(self, row: int, col: int, value: float):
        super().__init__(f"non-positive price {value!r} at row {row}, column {col}")
        self.row = row
        self.col = col


class TooFewRows(MarketDataError):
    pass


class TooFewReturnRows(MarketDataError):
    pass


@dataclass(frozen=True)
class PriceMatrix:
    """M x N grid of closing prices with asset and time labels."""

    prices: np.ndarray
    asset_names: list[str]
    time_labels: list[str]

    def __post_init__(self):
        p = np.asarray(self.prices, dtype=np.float64)
        object.__setattr__(self, "prices", p)
        if p.ndim != 2:
            raise MarketDataError("prices must be a 2-d grid")
        m, n = p.shape
        if m < 3:
            raise TooFewRows(f"need at least 3 price rows, got {m}")
        if n < 2:
            raise MarketDataError(f"need at least 2 assets, got {n}")
        if len(self.asset_names) != n or len(self.time_labels) != m:
            raise MarketDataError("label counts do not match the price grid")
        if not np.all(np.isfinite(p)):
            raise MarketDataError("prices contain non-finite values")
        bad = np.argwhere(p <= 0.0)
        if bad.size:
            r, c = bad[0]
            raise NonPositivePrice(int(r), int(c), float(p[r, c]))

    @property
    def n_assets(self) -> int:
        return self.prices.shape[1]

    @property
    def n_periods(self) -> int:
        return self.prices.shape[0]


@dataclass(frozen=True)
class AssetStats:
    """Per-asset expected returns and the return covariance matrix."""

    mu: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=np.float64)
        sigma = np.asarray(self.sigma, dtype=np.float64)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)
        n = mu.shape[0]
        if sigma.shape != (n, n):
            raise MarketDataError(f"sigma shape {sigma.shape} does not match mu length {n}")
        if np.abs(sigma - sigma.T).max(initial=0.0) > 1e-12:
            raise MarketDataError("sigma is not symmetric")
        # PSD up to round-off: tolerate tiny negative eigenvalues relative to scale
        if n:
            floor = -1e-9 * max(float(np.max(np.diag(sigma))), 1e-300)
            if float(np.linalg.eigvalsh(sigma)[0]) < floor:
                raise MarketDataError("sigma is not positive semidefinite")

    @property
    def n_assets(self) -> int:
        return self.mu.shape[0]


def load_prices(path: str | Path) -> PriceMatrix:
    """Parse a closing-price CSV into a validated :class:`PriceMatrix`.

    Raises FileNotFoundError for a missing file, MalformedRow for rows
    with the wrong arity or non-numeric cells, NonPositivePrice for any
    price <= 0, and TooFewRows when fewer than three time points remain.
    Missing cells are a hard error; clean the data upstream.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise TooFewRows("empty file") from None
        if len(header) < 3:
            raise MalformedRow(1, "header must name a date column and at least 2 assets")
        asset_names = [name.strip() for name in header[1:]]
        n = len(asset_names)
        time_labels: list[str] = []
        rows: list[list[float]] = []
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue  # ignore blank lines
            if len(row) != n + 1:
                raise MalformedRow(lineno, f"expected {n + 1} fields, got {len(row)}")
            time_labels.append(row[0].strip())
            try:
                values = [float(cell) for cell in row[1:]]
            except ValueError:
                raise MalformedRow(lineno, "non-numeric price cell") from None
            rows.append(values)
    if len(rows) < 3:
        raise TooFewRows(f"need at least 3 price rows, got {len(rows)}")
    prices = np.array(rows, dtype=np.float64)
    bad = np.argwhere(prices <= 0.0)
    if bad.size:
        r, c = bad[0]
        raise NonPositivePrice(int(r), int(c), float(prices[r, c]))
    return PriceMatrix(prices=prices, asset_names=asset_names, time_labels=time_labels)


def compute_returns(p: PriceMatrix) -> np.ndarray:
    """Per-period simple returns: r[k, i] = (P[k+1, i] - P[k, i]) / P[k, i]."""
    prices = p.prices
    return (prices[1:] - prices[:-1]) / prices[:-1]


def compute_stats(returns: np.ndarray) -> AssetStats:
    """Sample mean and covariance (denominator rows - 1) of a return grid."""
    returns = np.asarray(returns, dtype=np.float64)
    if returns.ndim != 2 or returns.shape[0] < 2:
        raise TooFewReturnRows("need at least 2 return rows")
    mu = returns.mean(axis=0)
    centered = returns - mu
    sigma = centered.T @ centered / (returns.shape[0] - 1)
    sigma = (sigma + sigma.T) / 2.0  # force exact symmetry
    return AssetStats(mu=mu, sigma=sigma)


def stats_from_prices(p: PriceMatrix) -> AssetStats:
    """Convenience: compute_stats(compute_returns(p))."""
    return compute_stats(compute_returns(p))
