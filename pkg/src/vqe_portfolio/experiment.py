"""VQE driver: wires prices -> QUBO -> Ising -> ansatz -> cost -> optimizer.

Per optimizer iteration the harness recomputes the exact measurement
distribution of the incumbent (best-so-far) parameters and records
whether any exact ground state ranks among the ``top_k`` most probable
basis states, plus the summed ground-state probability. The ranking
metric always uses exact probabilities, independent of how many shots
the cost function consumes.

Seeding: every (cell, repeat) owns a ``numpy.random.SeedSequence`` keyed
as [master_seed, cell_id, repeat_id], split into three child streams
(initial parameters, optimizer, measurement shots). Runs are therefore
reproducible and independent of execution order.
"""
from __future__ import annotations

import hashlib
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Callable

import numpy as np

from . import cost_functions as cf
from .ansatz import ANSATZ_FAMILIES, Circuit, build_ansatz
from .market_data import AssetStats, load_prices, stats_from_prices
from .optimizers import OptimizerConfig, make_optimizer
from .portfolio_qubo import (DimensionMismatch, ExactSolution, IsingHamiltonian,
                             PortfolioSpec, QuboProblem, bits_to_string, build_qubo,
                             index_to_bits, ising_energies, solve_exact, to_ising,
                             default_penalty, VARIANCE_FORMS)
from .statevector import probabilities, run_circuit, sample_bitstrings


class ConfigError(ValueError):
    """Invalid or unknown experiment-config field; message names the field."""


TRACE_HEADER = "iteration,cost,ground_prob,success"
AGGREGATE_HEADER = "iteration,mean_cum_success_rate,mean_ground_prob,n_runs"

COST_SCHEMES = ("mean", "cvar", "energy_exp", "rank_exp", "piecewise_exp")


@dataclass(frozen=True)
class DataConfig:
    path: str
    variance_form: str = "full"


@dataclass(frozen=True)
class PortfolioConfig:
    lam: float = 0.5
    penalty: float | str = "auto"  # "auto" = dominance bound from the stats
    budget: int | None = None      # None = N/2 (N must be even)


@dataclass(frozen=True)
class AnsatzConfig:
    family: str = "two_local"
    layers: int | None = None  # None = family default (two_local 3, block 2)

    @property
    def effective_layers(self) -> int:
        if self.layers is not None:
            return self.layers
        return 3 if self.family == "two_local" else 2


@dataclass(frozen=True)
class CostConfig:
    scheme: str = "piecewise_exp"
    alpha: float = 1.0
    beta: float = 0.5        # energy_exp / rank_exp decay
    n1: int = 5              # piecewise segment bounds and decays
    n2: int = 20
    beta1: float = 0.7
    beta2: float = 0.2
    beta3: float = 0.05

    def weight_scheme(self) -> cf.WeightScheme:
        if self.scheme == "mean":
            return cf.Uniform(alpha=1.0)
        if self.scheme == "cvar":
            return cf.Uniform(alpha=self.alpha)
        if self.scheme == "energy_exp":
            return cf.EnergyExp(alpha=self.alpha, beta=self.beta)
        if self.scheme == "rank_exp":
            return cf.RankExp(alpha=self.alpha, beta=self.beta)
        if self.scheme == "piecewise_exp":
            return cf.PiecewiseExp(alpha=self.alpha, n1=self.n1, n2=self.n2,
                                   beta1=self.beta1, beta2=self.beta2, beta3=self.beta3)
        raise ConfigError(f"cost.scheme: unknown scheme {self.scheme!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    data: DataConfig
    portfolio: PortfolioConfig = PortfolioConfig()
    ansatz: AnsatzConfig = AnsatzConfig()
    cost: CostConfig = CostConfig()
    optimizer: OptimizerConfig = OptimizerConfig()
    shots: int = 1000   # 0 = exact-distribution cost (no sampling noise)
    top_k: int = 10
    n_repeats: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.top_k < 1:
            raise ConfigError("top_k: must be >= 1")
        if self.n_repeats < 1:
            raise ConfigError("n_repeats: must be >= 1")
        if self.shots < 0:
            raise ConfigError("shots: must be >= 0 (0 selects exact mode)")
        if self.cost.scheme not in COST_SCHEMES:
            raise ConfigError(f"cost.scheme: unknown scheme {self.cost.scheme!r}")
        if self.ansatz.family not in ANSATZ_FAMILIES:
            raise ConfigError(f"ansatz.family: unknown family {self.ansatz.family!r}")
        if self.data.variance_form not in VARIANCE_FORMS:
            raise ConfigError(f"data.variance_form: must be one of {VARIANCE_FORMS}")
        if self.shots == 0 and self.cost.scheme in ("rank_exp", "piecewise_exp"):
            raise ConfigError(
                f"cost.scheme: {self.cost.scheme} needs sampled energies; set shots > 0")


_SECTIONS = {
    "data": DataConfig,
    "portfolio": PortfolioConfig,
    "ansatz": AnsatzConfig,
    "cost": CostConfig,
    "optimizer": OptimizerConfig,
}


def _build_section(name: str, cls, doc: dict):
    if not isinstance(doc, dict):
        raise ConfigError(f"{name}: expected an object")
    known = cls.__dataclass_fields__
    unknown = set(doc) - set(known)
    if unknown:
        raise ConfigError(f"{name}.{sorted(unknown)[0]}: unknown field")
    try:
        return cls(**doc)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name}: {exc}") from exc


def config_from_dict(doc: dict) -> ExperimentConfig:
    """Build a validated config from a parsed JSON document; rejects unknown fields."""
    if not isinstance(doc, dict):
        raise ConfigError("config: expected a JSON object")
    top_fields = ExperimentConfig.__dataclass_fields__
    unknown = set(doc) - set(top_fields)
    if unknown:
        raise ConfigError(f"{sorted(unknown)[0]}: unknown field")
    if "data" not in doc:
        raise ConfigError("data: required section is missing")
    kwargs = {}
    for name, cls in _SECTIONS.items():
        if name in doc:
            kwargs[name] = _build_section(name, cls, doc[name])
    for name in ("shots", "top_k", "n_repeats", "seed"):
        if name in doc:
            kwargs[name] = doc[name]
    try:
        cfg = ExperimentConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc
    if not Path(cfg.data.path).exists():
        raise ConfigError(f"data.path: file not found: {cfg.data.path}")
    return cfg


def load_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config: invalid JSON ({exc})") from exc
    return config_from_dict(doc)


def config_to_dict(cfg: ExperimentConfig) -> dict:
    return asdict(cfg)


@dataclass
class IterationRow:
    iteration: int
    cost: float          # optimizer best-so-far cost (Hamiltonian scale, no offset)
    ground_prob: float   # summed exact probability of all ground states
    success: bool        # any ground state among the top_k most probable
    params_digest: str   # fingerprint of the incumbent parameter vector


@dataclass
class RunRecord:
    repeat: int
    seed_key: tuple[int, int, int]
    rows: list[IterationRow]
    cumulative_successes: int
    best_bitstring: str          # lowest-energy top-ranked bitstring seen
    best_bitstring_energy: float  # QUBO scale, comparable to ground_energy
    final_top_bitstring: str     # most probable bitstring of the final state
    ground_bitstrings: list[str]
    ground_energy: float
    wall_time_s: float


@dataclass(frozen=True)
class ProblemInstance:
    """Everything derived from data + portfolio sections, shared across repeats."""

    stats: AssetStats
    spec: PortfolioSpec
    qubo: QuboProblem
    ham: IsingHamiltonian
    exact: ExactSolution
    energy_table: np.ndarray
    asset_names: list[str]


def build_instance(cfg: ExperimentConfig) -> ProblemInstance:
    prices = load_prices(cfg.data.path)
    stats = stats_from_prices(prices)
    n = stats.n_assets
    penalty = cfg.portfolio.penalty
    if penalty == "auto":
        penalty = default_penalty(stats, cfg.portfolio.lam)
    elif not isinstance(penalty, (int, float)):
        raise ConfigError("portfolio.penalty: must be a number or 'auto'")
    spec = PortfolioSpec(n_assets=n, lam=cfg.portfolio.lam, penalty=float(penalty),
                         budget=cfg.portfolio.budget)
    qubo = build_qubo(stats, spec, variance_form=cfg.data.variance_form)
    ham = to_ising(qubo)
    exact = solve_exact(qubo)
    return ProblemInstance(stats=stats, spec=spec, qubo=qubo, ham=ham, exact=exact,
                           energy_table=ising_energies(ham), asset_names=prices.asset_names)


def vqe_objective(ham: IsingHamiltonian, circuit: Circuit, scheme: cf.WeightScheme,
                  shots: int, rng: np.random.Generator | None,
                  energy_table: np.ndarray | None = None) -> Callable[[np.ndarray], float]:
    """Closure params -> cost: run circuit, sample (or not), score the energies."""
    if ham.n != circuit.n_qubits:
        raise DimensionMismatch(
            f"Hamiltonian has {ham.n} qubits, circuit has {circuit.n_qubits}")
    table = energy_table if energy_table is not None else ising_energies(ham)
    if shots == 0:
        def exact_objective(params):
            state = run_circuit(circuit, params)
            return cf.exact_mode_cost(probabilities(state), table, scheme)
        return exact_objective
    if rng is None:
        raise ValueError("sampled mode needs a random generator")

    def sampled_objective(params):
        state = run_circuit(circuit, params)
        indices = sample_bitstrings(state, shots, rng)
        return cf.wcvar(table[indices], scheme)
    return sampled_objective


def evaluate_iteration(probs: np.ndarray, exact: ExactSolution, top_k: int
                       ) -> tuple[bool, float]:
    """Success flag (any ground state in the top_k by probability) and ground mass.

    Ranking ties break toward the smaller state index, so the outcome is
    deterministic across platforms.
    """
    ground = exact.ground_indices
    ground_prob = float(probs[ground].sum())
    k = min(top_k, probs.size)
    order = np.argsort(-probs, kind="stable")[:k]
    success = bool(np.isin(ground, order).any())
    return success, ground_prob


def _digest(params: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(params).tobytes()).hexdigest()[:12]


def run_single(cfg: ExperimentConfig, instance: ProblemInstance, repeat: int,
               cell_id: int = 0) -> RunRecord:
    """One seeded optimization run with per-iteration metrics."""
    t0 = time.perf_counter()
    circuit = build_ansatz(cfg.ansatz.family, instance.ham.n, cfg.ansatz.effective_layers)
    seed_key = (cfg.seed, cell_id, repeat)
    init_ss, opt_ss, shot_ss = np.random.SeedSequence(list(seed_key)).spawn(3)
    init_rng = np.random.default_rng(init_ss)
    shot_rng = np.random.default_rng(shot_ss)

    initial = init_rng.uniform(-np.pi, np.pi, size=circuit.n_params)
    scheme = cfg.cost.weight_scheme()
    objective = vqe_objective(instance.ham, circuit, scheme, cfg.shots, shot_rng,
                              energy_table=instance.energy_table)
    opt_config = replace(cfg.optimizer, seed=int(opt_ss.generate_state(1)[0]))
    state = make_optimizer(opt_config, initial)

    rows: list[IterationRow] = []
    best_bits: str | None = None
    best_bits_energy = np.inf
    final_top = 0
    for _ in range(opt_config.max_iterations):
        batch = state.ask()
        state.tell([(x, float(objective(x))) for x in batch])
        incumbent = state.best_params
        probs = probabilities(run_circuit(circuit, incumbent))
        success, ground_prob = evaluate_iteration(probs, instance.exact, cfg.top_k)
        rows.append(IterationRow(iteration=state.iteration, cost=state.best_value,
                                 ground_prob=ground_prob, success=success,
                                 params_digest=_digest(incumbent)))
        final_top = int(np.argmax(probs))  # argmax ties -> smallest index
        # record on the portfolio (QUBO) scale so it compares to ground_energy
        top_energy = float(instance.energy_table[final_top]) + instance.ham.offset
        if top_energy < best_bits_energy:
            best_bits_energy = top_energy
            best_bits = bits_to_string(index_to_bits(final_top, instance.ham.n))

    n = instance.ham.n
    return RunRecord(
        repeat=repeat,
        seed_key=seed_key,
        rows=rows,
        cumulative_successes=sum(r.success for r in rows),
        best_bitstring=best_bits,
        best_bitstring_energy=best_bits_energy,
        final_top_bitstring=bits_to_string(index_to_bits(final_top, n)),
        ground_bitstrings=[bits_to_string(index_to_bits(int(g), n))
                           for g in instance.exact.ground_indices],
        ground_energy=instance.exact.ground_energy,
        wall_time_s=time.perf_counter() - t0,
    )


def run_experiment(cfg: ExperimentConfig, cell_id: int = 0,
                   on_record: Callable[[RunRecord], None] | None = None
                   ) -> list[RunRecord]:
    """All repeats of one configuration; flushes each record as it completes."""
    instance = build_instance(cfg)
    records = []
    for repeat in range(cfg.n_repeats):
        record = run_single(cfg, instance, repeat, cell_id=cell_id)
        records.append(record)
        if on_record is not None:
            on_record(record)
    return records


def write_trace(record: RunRecord, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(TRACE_HEADER + "\n")
        for row in record.rows:
            fh.write(f"{row.iteration},{row.cost!r},{row.ground_prob!r},"
                     f"{int(row.success)}\n")


def aggregate(records: list[RunRecord]) -> list[tuple[int, float, float, int]]:
    """Mean cumulative success rate and mean ground probability per iteration."""
    if not records:
        raise ValueError("no records to aggregate")
    max_iters = max(len(r.rows) for r in records)
    out = []
    for t in range(max_iters):
        rates, probs = [], []
        for rec in records:
            if t < len(rec.rows):
                cum = sum(row.success for row in rec.rows[:t + 1])
                rates.append(cum / (t + 1))
                probs.append(rec.rows[t].ground_prob)
        out.append((t + 1, float(np.mean(rates)), float(np.mean(probs)), len(rates)))
    return out


def write_aggregate(records: list[RunRecord], path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(AGGREGATE_HEADER + "\n")
        for iteration, rate, prob, n_runs in aggregate(records):
            fh.write(f"{iteration},{rate!r},{prob!r},{n_runs}\n")


def report(records: list[RunRecord], out_dir, cfg: ExperimentConfig | None = None,
           instance: ProblemInstance | None = None, wall_time_s: float | None = None):
    """Write per-run traces, the aggregate curve, and a JSON summary."""
    if not records:
        raise ValueError("no records to report")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for rec in records:
        write_trace(rec, out_dir / f"run_{rec.repeat:02d}.csv")
    write_aggregate(records, out_dir / "aggregate.csv")

    summary = {
        "n_runs": len(records),
        "ground_bitstrings": records[0].ground_bitstrings,
        "ground_energy": records[0].ground_energy,
        "cumulative_successes": [r.cumulative_successes for r in records],
        "final_success_rate": float(np.mean(
            [r.cumulative_successes / max(len(r.rows), 1) for r in records])),
        "best_bitstrings": [r.best_bitstring for r in records],
        "wall_time_s": wall_time_s if wall_time_s is not None
                       else sum(r.wall_time_s for r in records),
        "bit_order": "index 0 of the bitstring is asset/qubit 0 (least-significant bit)",
    }
    if cfg is not None:
        summary["config"] = config_to_dict(cfg)
    if instance is not None:
        ground_bits = index_to_bits(instance.exact.ground_index, instance.ham.n)
        summary["selected_assets"] = [name for name, bit
                                      in zip(instance.asset_names, ground_bits) if bit]
        # trace costs are offset-excluded Hamiltonian values; this converts
        summary["ising_offset"] = instance.ham.offset
    with open(out_dir / "summary.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")


@dataclass(frozen=True)
class SweepCell:
    cell_id: int
    name: str
    config: ExperimentConfig


def sweep_cells(base: ExperimentConfig, ansatz_families: list[str], optimizers: list[str],
                schemes: list[str], alphas: list[float],
                iterations_by_optimizer: dict[str, int] | None = None) -> list[SweepCell]:
    """Cartesian grid of configurations, one cell per combination."""
    cells = []
    cell_id = 0
    for family in ansatz_families:
        for opt_kind in optimizers:
            for scheme in schemes:
                for alpha in alphas:
                    opt = replace(base.optimizer, kind=opt_kind)
                    if iterations_by_optimizer and opt_kind in iterations_by_optimizer:
                        opt = replace(opt, max_iterations=iterations_by_optimizer[opt_kind])
                    cfg = replace(
                        base,
                        ansatz=replace(base.ansatz, family=family),
                        cost=replace(base.cost, scheme=scheme, alpha=alpha),
                        optimizer=opt,
                    )
                    name = f"{family}__{opt_kind}__{scheme}__alpha{alpha:g}"
                    cells.append(SweepCell(cell_id=cell_id, name=name, config=cfg))
                    cell_id += 1
    return cells


def _run_cell(args) -> str:
    cell, out_root = args
    t0 = time.perf_counter()
    instance = build_instance(cell.config)
    cell_dir = Path(out_root) / cell.name
    cell_dir.mkdir(parents=True, exist_ok=True)
    records = []
    for repeat in range(cell.config.n_repeats):
        rec = run_single(cell.config, instance, repeat, cell_id=cell.cell_id)
        records.append(rec)
        write_trace(rec, cell_dir / f"run_{rec.repeat:02d}.csv")
    report(records, cell_dir, cfg=cell.config, instance=instance,
           wall_time_s=time.perf_counter() - t0)
    return cell.name


def run_sweep(cells: list[SweepCell], out_root, workers: int = 1) -> list[str]:
    """Run every cell (optionally in parallel); results do not depend on workers."""
    out_root = Path(out_root)
    out_root.mkdir(parents=True, exist_ok=True)
    jobs = [(cell, str(out_root)) for cell in cells]
    if workers <= 1:
        return [_run_cell(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_cell, jobs))
