"""Dense statevector simulation of RY/RZ/CNOT circuits.

Gate semantics: RY(t) = [[cos t/2, -sin t/2], [sin t/2, cos t/2]],
RZ(t) = diag(exp(-it/2), exp(it/2)), CNOT flips the target amplitude
pair where the control bit is 1. Qubit 0 is the least-significant bit
of the state index, matching the bitstring convention in
:mod:`vqe_portfolio.portfolio_qubo`.

Sampling uses ``numpy.random.Generator`` (PCG64 by default); the same
seeded generator reproduces the same draw sequence on any platform.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .portfolio_qubo import IsingHamiltonian, ising_energies

if TYPE_CHECKING:
    from .ansatz import Circuit


class SimulationError(ValueError):
    pass


class MissingParameter(SimulationError):
    pass


class IndexOutOfRange(SimulationError):
    pass


class ParamCountMismatch(SimulationError):
    pass


@dataclass(frozen=True)
class Gate:
    """One circuit operation: kind in {"ry", "rz", "cnot"}.

    Rotations carry a target qubit and a parameter slot; CNOT carries
    control and target. Angles are bound at execution time.
    """

    kind: str
    target: int
    control: int | None = None
    param_slot: int | None = None

    def __post_init__(self):
        if self.kind in ("ry", "rz"):
            if self.param_slot is None:
                raise MissingParameter(f"{self.kind} gate needs a parameter slot")
            if self.control is not None:
                raise SimulationError("rotation gates take no control qubit")
        elif self.kind == "cnot":
            if self.control is None:
                raise SimulationError("cnot needs a control qubit")
            if self.control == self.target:
                raise SimulationError("cnot control and target must differ")
            if self.param_slot is not None:
                raise SimulationError("cnot takes no parameter")
        else:
            raise SimulationError(f"unknown gate kind {self.kind!r}")

    @property
    def is_parameterized(self) -> bool:
        return self.kind != "cnot"


def ry(target: int, param_slot: int) -> Gate:
    return Gate(kind="ry", target=target, param_slot=param_slot)


def rz(target: int, param_slot: int) -> Gate:
    return Gate(kind="rz", target=target, param_slot=param_slot)


def cnot(control: int, target: int) -> Gate:
    return Gate(kind="cnot", target=target, control=control)


@dataclass
class StateVector:
    """2^n complex amplitudes, index bit i = qubit i."""

    amplitudes: np.ndarray
    n_qubits: int

    @classmethod
    def zero_state(cls, n_qubits: int) -> "StateVector":
        amps = np.zeros(1 << n_qubits, dtype=np.complex128)
        amps[0] = 1.0
        return cls(amplitudes=amps, n_qubits=n_qubits)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


def _check_qubit(q: int, n: int):
    if not 0 <= q < n:
        raise IndexOutOfRange(f"qubit {q} out of range for {n} qubits")


def _apply_gate_inplace(amps: np.ndarray, n: int, gate: Gate, theta: float | None):
    """Mutate the amplitude buffer.

    Reshaping to (-1, 2, 2**q) exposes bit q as the middle axis of a
    contiguous view, so the arithmetic below runs on dense blocks.
    """
    if gate.kind == "cnot":
        c, t = gate.control, gate.target
        _check_qubit(c, n)
        _check_qubit(t, n)
        hi, lo = (c, t) if c > t else (t, c)
        # axes: (rest, bit hi, middle, bit lo, low block)
        view = amps.reshape(-1, 2, 1 << (hi - lo - 1), 2, 1 << lo)
        if c > t:
            src, dst = view[:, 1, :, 0, :], view[:, 1, :, 1, :]
        else:
            src, dst = view[:, 0, :, 1, :], view[:, 1, :, 1, :]
        tmp = src.copy()
        src[...] = dst
        dst[...] = tmp
        return
    _check_qubit(gate.target, n)
    if theta is None:
        raise MissingParameter(f"{gate.kind} gate requires an angle")
    half = 0.5 * theta
    view = amps.reshape(-1, 2, 1 << gate.target)
    a0, a1 = view[:, 0, :], view[:, 1, :]
    if gate.kind == "ry":
        c, s = math.cos(half), math.sin(half)
        tmp = a0 * c
        tmp -= s * a1
        a1 *= c
        a1 += s * a0
        a0[...] = tmp
    else:  # rz
        a0 *= complex(math.cos(half), -math.sin(half))
        a1 *= complex(math.cos(half), math.sin(half))


def apply_gate(state: StateVector, gate: Gate, theta: float | None = None) -> StateVector:
    """Apply one gate, returning a new StateVector."""
    if not gate.is_parameterized and theta is not None:
        raise SimulationError("cnot takes no angle")
    amps = state.amplitudes.copy()
    _apply_gate_inplace(amps, state.n_qubits, gate, theta)
    return StateVector(amplitudes=amps, n_qubits=state.n_qubits)


def _rotation_matrix(kind: str, theta: float) -> np.ndarray:
    half = 0.5 * theta
    if kind == "ry":
        c, s = math.cos(half), math.sin(half)
        return np.array([[c, -s], [s, c]], dtype=np.complex128)
    return np.array([[complex(math.cos(half), -math.sin(half)), 0.0],
                     [0.0, complex(math.cos(half), math.sin(half))]])


def _apply_matrix(amps: np.ndarray, scratch: np.ndarray, q: int, m: np.ndarray):
    """Apply a 2x2 unitary to qubit q, writing into scratch; returns (out, spare)."""
    shape = (-1, 2, 1 << q)
    np.matmul(m, amps.reshape(shape), out=scratch.reshape(shape))
    return scratch, amps


def run_circuit(circuit: "Circuit", params) -> StateVector:
    """Run every gate in order on |0...0>, binding angles from params.

    Runs of consecutive rotations on the same qubit are fused into one
    2x2 matrix before touching the amplitudes; rotations on distinct
    qubits commute, so each qubit's pending product only has to flush
    when a CNOT involves that qubit.
    """
    params = np.asarray(params, dtype=np.float64)
    if params.shape != (circuit.n_params,):
        raise ParamCountMismatch(
            f"circuit has {circuit.n_params} parameters, got {params.shape}")
    n = circuit.n_qubits
    amps = np.zeros(1 << n, dtype=np.complex128)
    amps[0] = 1.0
    scratch = np.empty_like(amps)
    pending: dict[int, np.ndarray] = {}

    for gate in circuit.gates:
        if gate.kind == "cnot":
            _check_qubit(gate.control, n)
            _check_qubit(gate.target, n)
            for q in (gate.control, gate.target):
                m = pending.pop(q, None)
                if m is not None:
                    amps, scratch = _apply_matrix(amps, scratch, q, m)
            _apply_gate_inplace(amps, n, gate, None)
        else:
            _check_qubit(gate.target, n)
            m = _rotation_matrix(gate.kind, float(params[gate.param_slot]))
            prev = pending.get(gate.target)
            pending[gate.target] = m if prev is None else m @ prev
    for q in sorted(pending):
        amps, scratch = _apply_matrix(amps, scratch, q, pending[q])
    return StateVector(amplitudes=amps, n_qubits=n)


def probabilities(state: StateVector) -> np.ndarray:
    """Measurement probabilities |amp_x|^2 per state index."""
    return np.abs(state.amplitudes) ** 2


def sample_bitstrings(state: StateVector, shots: int, rng: np.random.Generator) -> np.ndarray:
    """Draw `shots` i.i.d. state indices from the measurement distribution."""
    if shots < 1:
        raise SimulationError(f"shots must be >= 1, got {shots}")
    p = probabilities(state)
    p = p / p.sum()  # remove round-off drift so the sampler accepts it
    return rng.choice(p.size, size=shots, p=p)


def diagonal_expectation(state: StateVector, ham: IsingHamiltonian) -> float:
    """Exact <psi|H|psi> for a diagonal Ising Hamiltonian (offset excluded)."""
    if ham.n != state.n_qubits:
        raise SimulationError(
            f"Hamiltonian acts on {ham.n} qubits, state has {state.n_qubits}")
    return float(probabilities(state) @ ising_energies(ham))
