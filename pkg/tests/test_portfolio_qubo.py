import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vqe_portfolio.market_data import AssetStats
from vqe_portfolio.portfolio_qubo import (DimensionMismatch, IsingHamiltonian,
                                          PortfolioSpec, QuboError, QuboProblem,
                                          TooManyVariables, all_bitstrings,
                                          bits_to_index, bits_to_string, build_qubo,
                                          default_penalty, index_to_bits, ising_energies,
                                          ising_energy, qubo_energies, qubo_energy,
                                          solve_exact, to_ising)

from .oracles import literal_portfolio_objective, loop_qubo_energy, random_psd_stats, random_qubo


class TestPortfolioSpec:
    def test_default_budget_is_half(self):
        assert PortfolioSpec(n_assets=12).budget == 6

    def test_odd_without_budget_rejected(self):
        with pytest.raises(QuboError):
            PortfolioSpec(n_assets=5)

    def test_odd_with_budget_ok(self):
        assert PortfolioSpec(n_assets=5, budget=2).budget == 2

    @pytest.mark.parametrize("lam", [-0.1, 1.1])
    def test_lambda_range(self, lam):
        with pytest.raises(QuboError):
            PortfolioSpec(n_assets=4, lam=lam)

    def test_budget_range(self):
        with pytest.raises(QuboError):
            PortfolioSpec(n_assets=4, budget=5)


class TestBuildQubo:
    def test_identity_sigma_folds_to_linear(self):
        stats = AssetStats(mu=np.zeros(2), sigma=np.eye(2))
        spec = PortfolioSpec(n_assets=2, lam=0.0, penalty=0.0, budget=1)
        q = build_qubo(stats, spec, variance_form="full")
        np.testing.assert_array_equal(q.linear, [1.0, 1.0])
        assert q.quadratic == {}
        assert q.constant == 0.0

    def test_pure_return_term(self):
        stats = AssetStats(mu=np.array([0.1, 0.2]), sigma=np.zeros((2, 2)))
        spec = PortfolioSpec(n_assets=2, lam=1.0, penalty=0.0, budget=1)
        q = build_qubo(stats, spec)
        np.testing.assert_allclose(q.linear, [-0.1, -0.2])
        assert q.quadratic == {} and q.constant == 0.0

    @pytest.mark.parametrize("form", ["full", "upper_triangle"])
    def test_matches_literal_objective(self, form):
        rng = np.random.default_rng(10)
        stats = random_psd_stats(rng, 4)
        spec = PortfolioSpec(n_assets=4, lam=0.5, penalty=1.0, budget=2)
        q = build_qubo(stats, spec, variance_form=form)
        for x in all_bitstrings(4):
            expected = literal_portfolio_objective(stats.mu, stats.sigma, 0.5, 1.0, 2,
                                                   x, variance_form=form)
            assert qubo_energy(q, x) == pytest.approx(expected, abs=1e-12)

    def test_dimension_mismatch(self):
        stats = AssetStats(mu=np.zeros(3), sigma=np.zeros((3, 3)))
        with pytest.raises(DimensionMismatch):
            build_qubo(stats, PortfolioSpec(n_assets=4))

    def test_unknown_variance_form(self):
        stats = AssetStats(mu=np.zeros(2), sigma=np.zeros((2, 2)))
        with pytest.raises(QuboError):
            build_qubo(stats, PortfolioSpec(n_assets=2), variance_form="both")


class TestQuboEnergy:
    def test_all_zeros_gives_constant(self):
        q = QuboProblem(n=3, linear=np.ones(3), quadratic={(0, 1): 2.0}, constant=7.5)
        assert qubo_energy(q, [0, 0, 0]) == 7.5

    def test_all_ones_pure_linear(self):
        q = QuboProblem(n=2, linear=np.array([-0.1, -0.2]), quadratic={}, constant=0.0)
        assert qubo_energy(q, [1, 1]) == pytest.approx(-0.3)

    def test_matches_loop_oracle(self):
        rng = np.random.default_rng(11)
        q = random_qubo(rng, 6)
        for _ in range(20):
            x = rng.integers(0, 2, size=6)
            assert qubo_energy(q, x) == pytest.approx(loop_qubo_energy(q, x), abs=1e-12)

    def test_length_mismatch(self):
        q = QuboProblem(n=3, linear=np.zeros(3), quadratic={}, constant=0.0)
        with pytest.raises(DimensionMismatch):
            qubo_energy(q, [0, 1])

    def test_vectorized_matches_scalar(self):
        rng = np.random.default_rng(12)
        q = random_qubo(rng, 5)
        table = qubo_energies(q)
        for idx, x in enumerate(all_bitstrings(5)):
            assert table[idx] == pytest.approx(qubo_energy(q, x), abs=1e-12)


class TestToIsing:
    def test_single_linear_term(self):
        q = QuboProblem(n=1, linear=np.array([1.0]), quadratic={}, constant=0.0)
        ham = to_ising(q)
        # x=1 -> s=-1 energy 1; x=0 -> s=+1 energy 0
        assert ising_energy(ham, [-1]) + ham.offset == pytest.approx(1.0)
        assert ising_energy(ham, [+1]) + ham.offset == pytest.approx(0.0)

    def test_zero_qubo(self):
        q = QuboProblem(n=3, linear=np.zeros(3), quadratic={}, constant=4.2)
        ham = to_ising(q)
        np.testing.assert_array_equal(ham.h, np.zeros(3))
        assert ham.j == {} and ham.offset == 4.2

    def test_exhaustive_equivalence_n3(self):
        rng = np.random.default_rng(13)
        q = random_qubo(rng, 3)
        ham = to_ising(q)
        for x in all_bitstrings(3):
            s = 1 - 2 * x
            assert ising_energy(ham, s) + ham.offset == pytest.approx(
                qubo_energy(q, x), abs=1e-12)

    def test_energy_table_matches_qubo_table(self):
        rng = np.random.default_rng(14)
        q = random_qubo(rng, 6)
        ham = to_ising(q)
        np.testing.assert_allclose(ising_energies(ham) + ham.offset, qubo_energies(q),
                                   atol=1e-9)

    @settings(deadline=None, max_examples=30)
    @given(st.integers(min_value=2, max_value=8), st.integers(min_value=0, max_value=2**31))
    def test_round_trip_property(self, n, seed):
        q = random_qubo(np.random.default_rng(seed), n)
        ham = to_ising(q)
        np.testing.assert_allclose(ising_energies(ham) + ham.offset, qubo_energies(q),
                                   atol=1e-9)


class TestSolveExact:
    def test_hand_instance(self):
        q = QuboProblem(n=2, linear=np.array([-1.0, -1.0]), quadratic={(0, 1): 3.0},
                        constant=0.0)
        sol = solve_exact(q)
        assert sol.ground_energy == -1.0
        assert sol.degeneracy == 2
        assert set(sol.ground_indices.tolist()) == {1, 2}  # 01 and 10
        assert sol.ground_index == 1  # tie resolves to smallest index

    def test_zero_qubo_flat(self):
        q = QuboProblem(n=4, linear=np.zeros(4), quadratic={}, constant=1.5)
        sol = solve_exact(q)
        assert sol.degeneracy == 16 and sol.ground_energy == 1.5

    def test_spectrum_sorted_and_complete(self):
        rng = np.random.default_rng(15)
        q = random_qubo(rng, 5)
        sol = solve_exact(q, keep_spectrum=True)
        energies = [e for _, e in sol.spectrum]
        assert len(energies) == 32
        assert energies == sorted(energies)
        assert sol.spectrum[0][1] == sol.ground_energy

    def test_enumeration_guard(self):
        q = QuboProblem(n=27, linear=np.zeros(27), quadratic={}, constant=0.0)
        with pytest.raises(TooManyVariables):
            solve_exact(q)

    def test_paper_scale_budget_constraint(self):
        rng = np.random.default_rng(16)
        stats = random_psd_stats(rng, 12)
        p = default_penalty(stats, 0.5)
        q = build_qubo(stats, PortfolioSpec(n_assets=12, lam=0.5, penalty=p))
        sol = solve_exact(q)
        assert sol.ground_bitstring.sum() == 6


class TestDefaultPenalty:
    def test_degenerate_objective(self):
        stats = AssetStats(mu=np.zeros(2), sigma=np.zeros((2, 2)))
        assert default_penalty(stats, 0.5) == pytest.approx(1e-6)

    def test_pure_return_formula(self):
        stats = AssetStats(mu=np.array([0.1, 0.2]), sigma=np.zeros((2, 2)))
        assert default_penalty(stats, 1.0) == pytest.approx(0.3 + 1e-6)

    @pytest.mark.parametrize("seed", range(5))
    def test_ground_state_satisfies_budget(self, seed):
        rng = np.random.default_rng(100 + seed)
        stats = random_psd_stats(rng, 6)
        lam = float(rng.uniform())
        p = default_penalty(stats, lam)
        spec = PortfolioSpec(n_assets=6, lam=lam, penalty=p, budget=3)
        sol = solve_exact(build_qubo(stats, spec))
        assert all(index_to_bits(int(i), 6).sum() == 3 for i in sol.ground_indices)


class TestLambdaOneMonotonicity:
    def test_flip_changes_energy_by_minus_mu(self):
        rng = np.random.default_rng(17)
        stats = random_psd_stats(rng, 5)
        spec = PortfolioSpec(n_assets=5, lam=1.0, penalty=0.0, budget=2)
        q = build_qubo(stats, spec)
        for _ in range(10):
            x = rng.integers(0, 2, size=5)
            i = int(rng.integers(5))
            x0, x1 = x.copy(), x.copy()
            x0[i], x1[i] = 0, 1
            delta = qubo_energy(q, x1) - qubo_energy(q, x0)
            assert delta == pytest.approx(-stats.mu[i], abs=1e-12)


class TestSerialization:
    def test_qubo_json_round_trip(self):
        rng = np.random.default_rng(18)
        q = random_qubo(rng, 4)
        q2 = QuboProblem.from_json(q.to_json())
        assert q2.n == q.n and q2.quadratic == q.quadratic
        np.testing.assert_array_equal(q2.linear, q.linear)
        assert q2.constant == q.constant

    def test_ising_json_round_trip(self):
        ham = IsingHamiltonian(n=3, h=np.array([0.5, -1.0, 0.0]),
                               j={(0, 2): 1.5}, offset=-2.0)
        ham2 = IsingHamiltonian.from_json(ham.to_json())
        assert ham2.j == ham.j and ham2.offset == ham.offset
        np.testing.assert_array_equal(ham2.h, ham.h)

    def test_upper_triangle_enforced(self):
        with pytest.raises(QuboError):
            QuboProblem(n=3, linear=np.zeros(3), quadratic={(2, 1): 1.0}, constant=0.0)
        with pytest.raises(QuboError):
            IsingHamiltonian(n=3, h=np.zeros(3), j={(1, 1): 1.0})


class TestBitHelpers:
    def test_round_trip(self):
        for idx in (0, 1, 5, 12, 31):
            bits = index_to_bits(idx, 5)
            assert bits_to_index(bits) == idx

    def test_string_lsb_first(self):
        assert bits_to_string(index_to_bits(6, 3)) == "011"  # x0=0 x1=1 x2=1
