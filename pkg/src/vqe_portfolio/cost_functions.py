"""Scalar costs over sampled energies: mean, CVaR, and weighted CVaR.

All costs sort the K sampled energies ascending, keep the lowest
m = ceil(alpha * K), and average them - uniformly for CVaR, or with
normalized rank/energy-dependent weights for the weighted variants.
``exact_mode_cost`` is the shot-free limit that consumes the full
measurement distribution instead of samples.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class CostError(ValueError):
    pass


class EmptySample(CostError):
    pass


class AlphaOutOfRange(CostError):
    pass


class InvalidSegments(CostError):
    pass


class UnsupportedInExactMode(CostError):
    pass


def _check_alpha(alpha: float):
    if not 0.0 < alpha <= 1.0:
        raise AlphaOutOfRange(f"alpha must be in (0, 1], got {alpha}")


@dataclass(frozen=True)
class Uniform:
    """Equal weights over the kept tail; reproduces plain CVaR."""

    alpha: float = 1.0

    def __post_init__(self):
        _check_alpha(self.alpha)


@dataclass(frozen=True)
class EnergyExp:
    """w_k proportional to exp(-beta * (E_(k) - E_(1)))."""

    alpha: float = 1.0
    beta: float = 0.5

    def __post_init__(self):
        _check_alpha(self.alpha)
        if self.beta <= 0:
            raise CostError(f"beta must be > 0, got {self.beta}")


@dataclass(frozen=True)
class RankExp:
    """w_k proportional to exp(-beta * k) for rank k = 1..m."""

    alpha: float = 1.0
    beta: float = 0.5

    def __post_init__(self):
        _check_alpha(self.alpha)
        if self.beta <= 0:
            raise CostError(f"beta must be > 0, got {self.beta}")


@dataclass(frozen=True)
class PiecewiseExp:
    """Rank-exponential decay with three segments and decay rates.

    log w_k falls with slope beta1 up to rank n1-1, beta2 up to n2-1,
    then beta3, so adjacent-rank ratios are exp(-beta1/2/3) inside each
    segment and exp(-beta_next) across each join. Segments past the tail
    length are simply empty.
    """

    alpha: float = 1.0
    n1: int = 5
    n2: int = 20
    beta1: float = 0.7
    beta2: float = 0.2
    beta3: float = 0.05

    def __post_init__(self):
        _check_alpha(self.alpha)
        if not 1 <= self.n1 < self.n2:
            raise InvalidSegments(f"need 1 <= n1 < n2, got n1={self.n1}, n2={self.n2}")
        for name in ("beta1", "beta2", "beta3"):
            if getattr(self, name) <= 0:
                raise InvalidSegments(f"{name} must be > 0, got {getattr(self, name)}")


WeightScheme = Uniform | EnergyExp | RankExp | PiecewiseExp


def tail_size(alpha: float, k: int) -> int:
    """m = ceil(alpha * K), the number of kept lowest energies."""
    _check_alpha(alpha)
    if k < 1:
        raise EmptySample("need at least one sampled energy")
    return min(k, math.ceil(alpha * k))


def cvar(energies, alpha: float) -> float:
    """Mean of the lowest ceil(alpha*K) energies; alpha=1 is the plain mean."""
    energies = np.asarray(energies, dtype=np.float64)
    if energies.size == 0:
        raise EmptySample("need at least one sampled energy")
    m = tail_size(alpha, energies.size)
    if m == energies.size:
        return float(energies.mean())  # skip the sort: bit-identical to the mean
    return float(np.sort(energies)[:m].mean())


def compute_weights(scheme: WeightScheme, sorted_energies, m: int) -> np.ndarray:
    """Normalized weight vector over the m lowest energies (ranks 1..m).

    ``sorted_energies`` must be ascending and at least m long. Exponents
    are shifted by their maximum before exponentiation so large beta*k
    cannot underflow the whole vector.
    """
    if m < 1:
        raise EmptySample("tail must contain at least one energy")
    ranks = np.arange(1, m + 1, dtype=np.float64)
    if isinstance(scheme, Uniform):
        return np.full(m, 1.0 / m)
    if isinstance(scheme, EnergyExp):
        tail = np.asarray(sorted_energies, dtype=np.float64)[:m]
        exponents = -scheme.beta * (tail - tail[0])
    elif isinstance(scheme, RankExp):
        exponents = -scheme.beta * ranks
    elif isinstance(scheme, PiecewiseExp):
        seg1 = np.minimum(ranks, scheme.n1 - 1)
        seg2 = np.minimum(ranks, scheme.n2 - 1) - seg1
        seg3 = ranks - np.minimum(ranks, scheme.n2 - 1)
        exponents = -(scheme.beta1 * seg1 + scheme.beta2 * seg2 + scheme.beta3 * seg3)
    else:
        raise CostError(f"unknown weighting scheme {scheme!r}")
    w = np.exp(exponents - exponents.max())
    return w / w.sum()


def wcvar(energies, scheme: WeightScheme) -> float:
    """Weighted CVaR: sum_k w_k E_(k) over the kept ascending tail."""
    if isinstance(scheme, Uniform):
        return cvar(energies, scheme.alpha)  # bit-for-bit identical by construction
    energies = np.asarray(energies, dtype=np.float64)
    if energies.size == 0:
        raise EmptySample("need at least one sampled energy")
    m = tail_size(scheme.alpha, energies.size)
    tail = np.sort(energies)[:m]
    w = compute_weights(scheme, tail, m)
    return float(w @ tail)


def exact_mode_cost(probabilities, energies, scheme: WeightScheme | float) -> float:
    """Shot-free cost from the full distribution over basis states.

    States are sorted by energy ascending (ties by index); probability
    mass accumulates until alpha, with the boundary state included
    fractionally. Uniform weighting returns the mass-weighted tail mean;
    energy-based weighting reweights the tail mass by exp(-beta(E-E0)).
    Rank-based schemes have no continuum limit and are rejected.
    """
    if isinstance(scheme, (int, float)):
        scheme = Uniform(alpha=float(scheme))
    if isinstance(scheme, (RankExp, PiecewiseExp)):
        raise UnsupportedInExactMode(
            f"{type(scheme).__name__} weights depend on discrete sample ranks")
    p = np.asarray(probabilities, dtype=np.float64)
    e = np.asarray(energies, dtype=np.float64)
    if p.shape != e.shape:
        raise CostError(f"probability and energy vectors differ: {p.shape} vs {e.shape}")
    total = p.sum()
    if abs(total - 1.0) > 1e-9:
        raise CostError(f"probabilities sum to {total}, not 1")
    alpha = scheme.alpha
    order = np.argsort(e, kind="stable")
    mass = p[order]
    cum = np.cumsum(mass)
    boundary = int(np.searchsorted(cum, alpha, side="left"))
    boundary = min(boundary, p.size - 1)
    kept = mass[:boundary + 1].copy()
    kept[boundary] -= max(0.0, float(cum[boundary]) - alpha)  # fractional boundary mass
    tail_e = e[order][:boundary + 1]
    if isinstance(scheme, EnergyExp):
        live = np.flatnonzero(kept > 0.0)
        e0 = tail_e[live[0]]
        kept = kept * np.exp(-scheme.beta * (tail_e - e0))
    return float((kept @ tail_e) / kept.sum())
