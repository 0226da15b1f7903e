import math

import numpy as np
import pytest

from vqe_portfolio.ansatz import Circuit, two_local
from vqe_portfolio.portfolio_qubo import IsingHamiltonian, ising_energies, to_ising
from vqe_portfolio.statevector import (Gate, IndexOutOfRange, MissingParameter,
                                       ParamCountMismatch, SimulationError, StateVector,
                                       apply_gate, cnot, diagonal_expectation,
                                       probabilities, run_circuit, ry, rz,
                                       sample_bitstrings)

from .oracles import random_circuit, random_qubo, simulate_with_kron


def basis_state(n, index):
    st = StateVector.zero_state(n)
    st.amplitudes[0] = 0.0
    st.amplitudes[index] = 1.0
    return st


def random_state(rng, n):
    amps = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    amps /= np.linalg.norm(amps)
    return StateVector(amplitudes=amps, n_qubits=n)


class TestGateValidation:
    def test_cnot_needs_distinct_qubits(self):
        with pytest.raises(SimulationError):
            cnot(1, 1)

    def test_rotation_needs_slot(self):
        with pytest.raises(MissingParameter):
            Gate(kind="ry", target=0)

    def test_unknown_kind(self):
        with pytest.raises(SimulationError):
            Gate(kind="h", target=0)

    def test_cnot_takes_no_slot(self):
        with pytest.raises(SimulationError):
            Gate(kind="cnot", target=0, control=1, param_slot=0)


class TestApplyGate:
    def test_ry_pi_flips(self):
        out = apply_gate(StateVector.zero_state(1), ry(0, 0), math.pi)
        np.testing.assert_allclose(out.amplitudes, [0.0, 1.0], atol=1e-15)

    def test_rz_is_phase_only(self):
        for theta in (0.3, -2.0, 7.7):
            out = apply_gate(StateVector.zero_state(1), rz(0, 0), theta)
            np.testing.assert_allclose(probabilities(out), [1.0, 0.0], atol=1e-15)

    def test_cnot_on_10(self):
        out = apply_gate(basis_state(2, 2), cnot(1, 0))
        assert np.argmax(np.abs(out.amplitudes)) == 3

    def test_missing_theta(self):
        with pytest.raises(MissingParameter):
            apply_gate(StateVector.zero_state(1), ry(0, 0))

    def test_theta_on_cnot_rejected(self):
        with pytest.raises(SimulationError):
            apply_gate(StateVector.zero_state(2), cnot(0, 1), 0.5)

    def test_index_out_of_range(self):
        with pytest.raises(IndexOutOfRange):
            apply_gate(StateVector.zero_state(2), ry(2, 0), 0.1)

    def test_norm_preserved_random_3q(self):
        rng = np.random.default_rng(20)
        st = random_state(rng, 3)
        for gate, theta in [(ry(1, 0), 0.7), (rz(2, 0), -1.1), (cnot(0, 2), None)]:
            st = apply_gate(st, gate, theta)
            assert st.norm == pytest.approx(1.0, abs=1e-12)

    def test_input_state_unchanged(self):
        st = StateVector.zero_state(2)
        before = st.amplitudes.copy()
        apply_gate(st, ry(0, 0), 1.0)
        np.testing.assert_array_equal(st.amplitudes, before)


class TestRunCircuit:
    def test_empty_circuit(self):
        c = Circuit(n_qubits=3, gates=(), n_params=0)
        out = run_circuit(c, [])
        np.testing.assert_array_equal(out.amplitudes[0], 1.0)
        assert np.abs(out.amplitudes[1:]).max() == 0.0

    def test_two_local_at_zero(self):
        c = two_local(2, 1)
        out = run_circuit(c, np.zeros(c.n_params))
        assert out.amplitudes[0] == pytest.approx(1.0)

    def test_param_count_mismatch(self):
        c = two_local(2, 1)
        with pytest.raises(ParamCountMismatch):
            run_circuit(c, np.zeros(c.n_params - 1))

    @pytest.mark.parametrize("seed", range(20))
    def test_matches_kron_oracle(self, seed):
        rng = np.random.default_rng(300 + seed)
        n = int(rng.integers(2, 5))
        circuit = random_circuit(rng, n, n_gates=int(rng.integers(4, 16)))
        params = rng.uniform(-np.pi, np.pi, size=circuit.n_params)
        got = run_circuit(circuit, params).amplitudes
        expected = simulate_with_kron(circuit, params)
        np.testing.assert_allclose(got, expected, atol=1e-10)
        assert abs(np.linalg.norm(got) - 1.0) <= 1e-9


class TestProbabilities:
    def test_zero_state(self):
        np.testing.assert_array_equal(probabilities(StateVector.zero_state(1)), [1.0, 0.0])

    def test_equal_superposition(self):
        out = apply_gate(StateVector.zero_state(1), ry(0, 0), math.pi / 2)
        np.testing.assert_allclose(probabilities(out), [0.5, 0.5], atol=1e-15)

    def test_sums_to_one(self):
        rng = np.random.default_rng(21)
        st = random_state(rng, 4)
        assert probabilities(st).sum() == pytest.approx(1.0, abs=1e-9)


class TestSampling:
    def test_deterministic_distribution(self):
        out = sample_bitstrings(basis_state(1, 1), 5, np.random.default_rng(0))
        np.testing.assert_array_equal(out, [1, 1, 1, 1, 1])

    def test_seed_reproducibility(self):
        rng = np.random.default_rng(22)
        st = random_state(rng, 3)
        a = sample_bitstrings(st, 100, np.random.default_rng(5))
        b = sample_bitstrings(st, 100, np.random.default_rng(5))
        np.testing.assert_array_equal(a, b)

    def test_binomial_frequency_bound(self):
        st = apply_gate(StateVector.zero_state(1), ry(0, 0), math.pi / 2)
        out = sample_bitstrings(st, 10_000, np.random.default_rng(7))
        freq0 = np.mean(out == 0)
        assert 0.47 <= freq0 <= 0.53  # 3 sigma of Binomial(10000, .5)

    def test_total_variation_at_100k(self):
        rng = np.random.default_rng(23)
        st = random_state(rng, 4)
        p = probabilities(st)
        out = sample_bitstrings(st, 100_000, np.random.default_rng(9))
        emp = np.bincount(out, minlength=16) / out.size
        assert 0.5 * np.abs(emp - p).sum() <= 0.02

    def test_needs_positive_shots(self):
        with pytest.raises(SimulationError):
            sample_bitstrings(StateVector.zero_state(1), 0, np.random.default_rng(0))


class TestDiagonalExpectation:
    def test_basis_state_gives_its_energy(self):
        rng = np.random.default_rng(24)
        ham = to_ising(random_qubo(rng, 3))
        table = ising_energies(ham)
        for idx in range(8):
            got = diagonal_expectation(basis_state(3, idx), ham)
            assert got == pytest.approx(table[idx], abs=1e-12)

    def test_uniform_superposition_gives_spectrum_mean(self):
        rng = np.random.default_rng(25)
        ham = to_ising(random_qubo(rng, 3))
        st = StateVector(amplitudes=np.full(8, 1 / math.sqrt(8), dtype=complex), n_qubits=3)
        assert diagonal_expectation(st, ham) == pytest.approx(
            ising_energies(ham).mean(), abs=1e-12)

    def test_bounded_by_spectrum(self):
        rng = np.random.default_rng(26)
        ham = to_ising(random_qubo(rng, 4))
        table = ising_energies(ham)
        for _ in range(10):
            val = diagonal_expectation(random_state(rng, 4), ham)
            assert table.min() - 1e-12 <= val <= table.max() + 1e-12

    def test_dimension_mismatch(self):
        ham = IsingHamiltonian(n=2, h=np.zeros(2), j={})
        with pytest.raises(SimulationError):
            diagonal_expectation(StateVector.zero_state(3), ham)
