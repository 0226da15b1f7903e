"""Penalized mean-variance QUBO, its Ising form, and exact enumeration.

The objective over selections x in {0,1}^N is

    C(x) = -lam * sum_i mu_i x_i + (1 - lam) * V(x) + penalty * (sum_i x_i - B)^2

where V(x) is the portfolio variance term. ``variance_form="full"``
expands the complete double sum sum_ij sigma_ij x_i x_j (diagonal terms
folded into linear coefficients via x^2 = x); ``"upper_triangle"`` keeps
only the strict upper triangle sum_{i<j} sigma_ij x_i x_j.

Bit convention used throughout the package: asset/qubit i is bit i of
the state index, i.e. index = sum_i x_i * 2^i (qubit 0 least significant).
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .market_data import AssetStats

MAX_EXACT_QUBITS = 26

VARIANCE_FORMS = ("full", "upper_triangle")


class QuboError(ValueError):
    pass


class DimensionMismatch(QuboError):
    pass


class TooManyVariables(QuboError):
    pass


@dataclass(frozen=True)
class PortfolioSpec:
    """Scalarization weight, constraint penalty, and budget for N assets."""

    n_assets: int
    lam: float = 0.5
    penalty: float = 1.0
    budget: int | None = None

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise QuboError(f"lam must be in [0, 1], got {self.lam}")
        if self.penalty < 0.0:
            raise QuboError(f"penalty must be >= 0, got {self.penalty}")
        if self.budget is None:
            if self.n_assets % 2:
                raise QuboError("default budget N/2 needs even n_assets; pass budget explicitly")
            object.__setattr__(self, "budget", self.n_assets // 2)
        if not 1 <= self.budget <= self.n_assets:
            raise QuboError(f"budget must be in [1, {self.n_assets}], got {self.budget}")


@dataclass(frozen=True)
class QuboProblem:
    """Quadratic form sum_{i<j} q_ij x_i x_j + sum_i q_i x_i + c."""

    n: int
    linear: np.ndarray
    quadratic: dict[tuple[int, int], float]
    constant: float = 0.0

    def __post_init__(self):
        lin = np.asarray(self.linear, dtype=np.float64)
        object.__setattr__(self, "linear", lin)
        if lin.shape != (self.n,):
            raise QuboError(f"linear must have length {self.n}")
        for (i, j) in self.quadratic:
            if not (0 <= i < j < self.n):
                raise QuboError(f"quadratic key ({i}, {j}) is not strictly upper triangular")

    def to_json(self) -> str:
        doc = {
            "n": self.n,
            "linear": self.linear.tolist(),
            "quadratic": [[i, j, v] for (i, j), v in sorted(self.quadratic.items())],
            "constant": self.constant,
        }
        return json.dumps(doc, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "QuboProblem":
        doc = json.loads(text)
        quad = {(int(i), int(j)): float(v) for i, j, v in doc["quadratic"]}
        return cls(n=int(doc["n"]), linear=np.array(doc["linear"], dtype=np.float64),
                   quadratic=quad, constant=float(doc["constant"]))


@dataclass(frozen=True)
class IsingHamiltonian:
    """Diagonal Hamiltonian -sum_i h_i Z_i - sum_{i<j} J_ij Z_i Z_j (+ offset bookkeeping).

    ``ising_energies(ham)[x] + ham.offset`` equals the QUBO energy of
    bitstring x for the problem it was derived from.
    """

    n: int
    h: np.ndarray
    j: dict[tuple[int, int], float]
    offset: float = 0.0

    def __post_init__(self):
        h = np.asarray(self.h, dtype=np.float64)
        object.__setattr__(self, "h", h)
        if h.shape != (self.n,):
            raise QuboError(f"h must have length {self.n}")
        for (a, b) in self.j:
            if not (0 <= a < b < self.n):
                raise QuboError(f"coupling key ({a}, {b}) is not strictly upper triangular")

    def to_json(self) -> str:
        doc = {
            "n": self.n,
            "linear": self.h.tolist(),
            "quadratic": [[a, b, v] for (a, b), v in sorted(self.j.items())],
            "offset": self.offset,
        }
        return json.dumps(doc, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "IsingHamiltonian":
        doc = json.loads(text)
        j = {(int(a), int(b)): float(v) for a, b, v in doc["quadratic"]}
        return cls(n=int(doc["n"]), h=np.array(doc["linear"], dtype=np.float64),
                   j=j, offset=float(doc["offset"]))


@dataclass(frozen=True)
class ExactSolution:
    """Brute-force ground truth over all 2^N bitstrings."""

    n: int
    ground_index: int
    ground_energy: float
    degeneracy: int
    ground_indices: np.ndarray  # all minimizers, ascending
    spectrum: list[tuple[int, float]] | None = None  # (index, energy) ascending by energy

    @property
    def ground_bitstring(self) -> np.ndarray:
        return index_to_bits(self.ground_index, self.n)


def index_to_bits(index: int, n: int) -> np.ndarray:
    """State index -> length-n 0/1 vector, bit i at position i."""
    return (index >> np.arange(n)) & 1


def bits_to_index(bits) -> int:
    bits = np.asarray(bits)
    return int((bits << np.arange(bits.shape[-1])).sum())


def bits_to_string(bits) -> str:
    """Render a bit vector as '010...' with asset 0 (LSB) first."""
    return "".join(str(int(b)) for b in np.asarray(bits))


def all_bitstrings(n: int) -> np.ndarray:
    """(2^n, n) matrix whose row x is the bit vector of index x."""
    idx = np.arange(1 << n)
    return ((idx[:, None] >> np.arange(n)) & 1).astype(np.float64)


def build_qubo(stats: AssetStats, spec: PortfolioSpec, variance_form: str = "full") -> QuboProblem:
    """Encode the penalized mean-variance objective as a QUBO."""
    if stats.n_assets != spec.n_assets:
        raise DimensionMismatch(
            f"stats have {stats.n_assets} assets but spec expects {spec.n_assets}")
    if variance_form not in VARIANCE_FORMS:
        raise QuboError(f"variance_form must be one of {VARIANCE_FORMS}, got {variance_form!r}")
    n = spec.n_assets
    lam, p, budget = spec.lam, spec.penalty, spec.budget
    risk = 1.0 - lam

    linear = -lam * stats.mu.copy()
    if variance_form == "full":
        linear = linear + risk * np.diag(stats.sigma)  # sigma_ii x_i^2 == sigma_ii x_i
    # (sum x_i - B)^2 = sum_i (1 - 2B) x_i + 2 sum_{i<j} x_i x_j + B^2
    linear = linear + p * (1.0 - 2.0 * budget)

    quadratic: dict[tuple[int, int], float] = {}
    pair_scale = 2.0 if variance_form == "full" else 1.0
    for i in range(n):
        for j in range(i + 1, n):
            q = risk * pair_scale * stats.sigma[i, j] + 2.0 * p
            if q != 0.0:
                quadratic[(i, j)] = float(q)
    return QuboProblem(n=n, linear=linear, quadratic=quadratic,
                       constant=float(p * budget * budget))


def qubo_energy(q: QuboProblem, x) -> float:
    """Evaluate the QUBO polynomial at one bitstring."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (q.n,):
        raise DimensionMismatch(f"bitstring length {x.shape} does not match n={q.n}")
    e = float(q.linear @ x) + q.constant
    for (i, j), v in q.quadratic.items():
        e += v * x[i] * x[j]
    return e


def qubo_energies(q: QuboProblem) -> np.ndarray:
    """Energies of all 2^n bitstrings, indexed by state index."""
    if q.n > MAX_EXACT_QUBITS:
        raise TooManyVariables(f"refusing to enumerate 2^{q.n} bitstrings")
    x = all_bitstrings(q.n)
    e = x @ q.linear + q.constant
    for (i, j), v in q.quadratic.items():
        e += v * x[:, i] * x[:, j]
    return e


def to_ising(q: QuboProblem) -> IsingHamiltonian:
    """Substitute x_i = (1 - s_i)/2 and collect -sum h s - sum J ss + offset."""
    n = q.n
    h = q.linear / 2.0
    offset = q.constant + float(q.linear.sum()) / 2.0
    j: dict[tuple[int, int], float] = {}
    for (a, b), v in q.quadratic.items():
        j[(a, b)] = -v / 4.0
        h[a] += v / 4.0
        h[b] += v / 4.0
        offset += v / 4.0
    return IsingHamiltonian(n=n, h=h, j=j, offset=offset)


def ising_energy(ham: IsingHamiltonian, s) -> float:
    """Energy -sum_i h_i s_i - sum_{i<j} J_ij s_i s_j of one spin vector (offset excluded)."""
    s = np.asarray(s, dtype=np.float64)
    if s.shape != (ham.n,):
        raise DimensionMismatch(f"spin vector length {s.shape} does not match n={ham.n}")
    e = -float(ham.h @ s)
    for (a, b), v in ham.j.items():
        e -= v * s[a] * s[b]
    return e


def ising_energies(ham: IsingHamiltonian) -> np.ndarray:
    """Ising energies of all 2^n computational basis states (offset excluded)."""
    if ham.n > MAX_EXACT_QUBITS:
        raise TooManyVariables(f"refusing to enumerate 2^{ham.n} states")
    s = 1.0 - 2.0 * all_bitstrings(ham.n)
    e = -(s @ ham.h)
    for (a, b), v in ham.j.items():
        e -= v * s[:, a] * s[:, b]
    return e


def solve_exact(q: QuboProblem, keep_spectrum: bool = False) -> ExactSolution:
    """Enumerate all 2^n bitstrings; ties resolve to the smallest state index."""
    energies = qubo_energies(q)
    ground_energy = float(energies.min())
    ground_indices = np.flatnonzero(energies == ground_energy)
    spectrum = None
    if keep_spectrum:
        order = np.argsort(energies, kind="stable")  # stable: ties by index
        spectrum = [(int(i), float(energies[i])) for i in order]
    return ExactSolution(
        n=q.n,
        ground_index=int(ground_indices[0]),
        ground_energy=ground_energy,
        degeneracy=int(ground_indices.size),
        ground_indices=ground_indices,
        spectrum=spectrum,
    )


def default_penalty(stats: AssetStats, lam: float) -> float:
    """Penalty strong enough that the exact ground state satisfies the budget.

    Any single-unit constraint violation costs at least p, while removing
    or adding assets to repair a violated selection changes the objective
    by at most lam * sum|mu| + (1 - lam) * sum|sigma|; p exceeds that bound.
    """
    return float(lam * np.abs(stats.mu).sum()
                 + (1.0 - lam) * np.abs(stats.sigma).sum()
                 + 1e-6)
