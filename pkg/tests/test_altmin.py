"""Tests for the alternating-minimization module."""

import itertools
import math

import numpy as np
import pytest

from splr import linalg
from splr.altmin import (SparsityPattern, alternating_minimization,
                         fixed_pattern_certificate, iteration_bound,
                         multistart_alternating_minimization,
                         solve_lowrank_subproblem, solve_sparse_subproblem)
from splr.core import ProblemInstance, objective, unconstrained_min_value


def _rng(seed=0):
    return np.random.default_rng(seed)


def _full_pattern(n, support):
    cells = {(i, j) for i in range(n) for j in range(n)}
    keep = set(support)
    return SparsityPattern(n, frozenset(cells - keep), frozenset(keep))


class TestSparsityPattern:
    def test_overlap_rejected(self):
        with pytest.raises(ValueError):
            SparsityPattern(2, {(0, 0)}, {(0, 0)})

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            SparsityPattern(2, {(2, 0)}, set())

    def test_is_complete(self):
        full = _full_pattern(2, [(0, 1)])
        assert full.is_complete(1)
        assert SparsityPattern(2, I1={(0, 1)}).is_complete(1)
        assert not SparsityPattern(2).is_complete(1)

    def test_check_against(self):
        SparsityPattern(2, I1={(0, 0)}).check_against(1)
        with pytest.raises(ValueError):
            SparsityPattern(2, I1={(0, 0), (1, 1)}).check_against(1)
        with pytest.raises(ValueError):
            SparsityPattern(2, I0={(i, j) for i in range(2)
                                   for j in range(2)}).check_against(1)


class TestIterationBound:
    @pytest.mark.parametrize("lam,mu,eps,expected", [
        (1.0, 1.0, 2.0, 1.0),
        (1.0, 1.0, 0.1, math.log(3.0) / math.log(1.1)),
        (2.0, 2.0, 1.0, 1.0),
    ])
    def test_values(self, lam, mu, eps, expected):
        assert iteration_bound(lam, mu, eps) == pytest.approx(expected)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            iteration_bound(0.0, 1.0, 0.1)


class TestLowrankSubproblem:
    def test_diagonal(self):
        X = solve_lowrank_subproblem(np.diag([2.0, 0.0]), 1, 1.0)
        np.testing.assert_allclose(X, np.diag([1.0, 0.0]), atol=1e-12)

    def test_lambda_zero_full_rank(self):
        D = _rng(0).standard_normal((3, 3))
        np.testing.assert_allclose(solve_lowrank_subproblem(D, 3, 0.0), D,
                                   atol=1e-10)

    def test_spectral_closed_form(self):
        # objective at the minimizer:
        # lam/(1+lam)*sum_{i<=k0} phi_i^2 + sum_{i>k0} phi_i^2
        rng = _rng(1)
        G = rng.standard_normal((8, 8))
        Dbar = G + G.T
        phi = np.linalg.svd(Dbar, compute_uv=False)
        for lam in (0.3, 1.0, 4.0):
            for k0 in (1, 3, 8):
                X = solve_lowrank_subproblem(Dbar, k0, lam)
                got = np.sum((Dbar - X) ** 2) + lam * np.sum(X * X)
                ref = (lam / (1 + lam) * np.sum(phi[:k0] ** 2)
                       + np.sum(phi[k0:] ** 2))
                assert got == pytest.approx(ref, rel=1e-10)

    def test_beats_random_lowrank_competitors(self):
        rng = _rng(2)
        Dbar = rng.standard_normal((5, 5))
        lam, k0 = 0.7, 2
        X = solve_lowrank_subproblem(Dbar, k0, lam)
        best = np.sum((Dbar - X) ** 2) + lam * np.sum(X * X)
        for _ in range(50):
            W = rng.standard_normal((5, k0)) @ rng.standard_normal((k0, 5))
            val = np.sum((Dbar - W) ** 2) + lam * np.sum(W * W)
            assert val >= best - 1e-10

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            solve_lowrank_subproblem(np.eye(2), 1, 1.0, svd_mode="fast")


def _sparse_bruteforce(Dtilde, k1, mu, pattern=None):
    """Enumerate all admissible supports; inner closed form per entry."""
    n = Dtilde.shape[0]
    cells = [(i, j) for i in range(n) for j in range(n)]
    forced0 = set(pattern.I0) if pattern else set()
    forced1 = set(pattern.I1) if pattern else set()
    free = [c for c in cells if c not in forced0 and c not in forced1]
    best_val, best_Y = np.inf, None
    for extra in range(k1 - len(forced1) + 1):
        for pick in itertools.combinations(free, extra):
            supp = forced1 | set(pick)
            Y = np.zeros_like(Dtilde)
            for ij in supp:
                Y[ij] = Dtilde[ij] / (1.0 + mu)
            val = np.sum((Dtilde - Y) ** 2) + mu * np.sum(Y * Y)
            if val < best_val - 1e-15:
                best_val, best_Y = val, Y
    return best_val, best_Y


class TestSparseSubproblem:
    def test_unique_max(self):
        Y = solve_sparse_subproblem(np.array([[3.0, 1.0], [1.0, 2.0]]), 1, 1.0)
        np.testing.assert_allclose(Y, [[1.5, 0.0], [0.0, 0.0]], atol=1e-12)

    def test_k1_zero(self):
        Y = solve_sparse_subproblem(np.ones((2, 2)), 0, 1.0)
        np.testing.assert_array_equal(Y, np.zeros((2, 2)))

    def test_matches_bruteforce_with_pattern(self):
        rng = _rng(3)
        Dtilde = rng.standard_normal((3, 3))
        pattern = SparsityPattern(3, I0={(2, 2)}, I1={(1, 1)})
        mu = 1.3
        Y = solve_sparse_subproblem(Dtilde, 3, mu, pattern)
        val = np.sum((Dtilde - Y) ** 2) + mu * np.sum(Y * Y)
        ref, _ = _sparse_bruteforce(Dtilde, 3, mu, pattern)
        assert val == pytest.approx(ref, rel=1e-12)
        assert Y[2, 2] == 0.0 and Y[1, 1] != 0.0

    def test_matches_bruteforce_unpatterned(self):
        rng = _rng(4)
        for n in (2, 3):
            for k1 in range(0, 5):
                if k1 > n * n:
                    continue
                Dtilde = rng.standard_normal((n, n))
                mu = float(rng.uniform(0.2, 2.0))
                Y = solve_sparse_subproblem(Dtilde, k1, mu)
                val = np.sum((Dtilde - Y) ** 2) + mu * np.sum(Y * Y)
                ref, _ = _sparse_bruteforce(Dtilde, k1, mu)
                assert val == pytest.approx(ref, rel=1e-10)

    def test_infeasible_pattern(self):
        with pytest.raises(ValueError):
            solve_sparse_subproblem(np.eye(2), 1, 1.0,
                                    SparsityPattern(2, I1={(0, 0), (1, 1)}))


class TestAlternatingMinimization:
    def test_zero_matrix_terminates_immediately(self):
        inst = ProblemInstance(np.zeros((3, 3)), 1, 2, 1.0, 1.0)
        sol, trace = alternating_minimization(inst)
        assert trace.objective_values[0] == 0.0
        assert trace.iterations == 0
        assert trace.converged_reason == "zero-objective"
        assert sol.objective == 0.0

    def test_unconstrained_limit(self):
        rng = _rng(5)
        for _ in range(5):
            n = int(rng.integers(2, 6))
            D = rng.standard_normal((n, n))
            lam, mu = rng.uniform(0.3, 2.0, size=2)
            inst = ProblemInstance(D, n, n * n, lam, mu)
            sol, _ = alternating_minimization(inst, eps=1e-9, max_iters=5000)
            assert sol.objective == pytest.approx(unconstrained_min_value(inst),
                                                  rel=1e-6)

    def test_trace_monotone_and_strictly_decreasing_until_gap(self):
        inst = ProblemInstance(_rng(6).standard_normal((10, 10)), 2, 10,
                               1.0, 1.0)
        sol, trace = alternating_minimization(inst, eps=1e-3)
        fv = trace.objective_values
        assert all(fv[i + 1] <= fv[i] for i in range(len(fv) - 1))
        # strict decrease everywhere except possibly the final step
        assert all(fv[i + 1] < fv[i] for i in range(len(fv) - 2))
        assert sol.feasible
        assert sol.rank_of_X <= 2 and sol.nnz_of_Y <= 10

    def test_iteration_cap_grid(self):
        rng = _rng(7)
        for lam in (0.1, 1.0, 10.0):
            for mu in (0.1, 1.0, 10.0):
                for eps in (0.1, 0.01):
                    D = rng.standard_normal((6, 6))
                    inst = ProblemInstance(D, 2, 4, lam, mu)
                    _, trace = alternating_minimization(inst, eps=eps,
                                                        max_iters=10 ** 6)
                    cap = math.ceil(iteration_bound(lam, mu, eps))
                    assert trace.iterations <= cap

    def test_objective_field_consistent(self):
        inst = ProblemInstance(_rng(8).standard_normal((5, 5)), 2, 3, 0.5, 1.5)
        sol, _ = alternating_minimization(inst)
        assert sol.objective == pytest.approx(
            objective(inst, sol.X, sol.Y), abs=1e-10)

    def test_randomized_mode_monotone_and_feasible(self):
        rng = _rng(9)
        for seed in range(5):
            inst = ProblemInstance(rng.standard_normal((12, 12)), 3, 8,
                                   0.5, 0.5)
            sol, trace = alternating_minimization(inst, svd_mode="randomized",
                                                  seed=seed)
            fv = trace.objective_values
            assert all(fv[i + 1] <= fv[i] for i in range(len(fv) - 1))
            assert sol.feasible

    def test_pattern_respected(self):
        inst = ProblemInstance(_rng(10).standard_normal((4, 4)), 1, 2,
                               1.0, 1.0)
        pattern = SparsityPattern(4, I0={(0, 0), (0, 1)}, I1={(3, 3)})
        sol, _ = alternating_minimization(inst, pattern=pattern)
        assert sol.Y[0, 0] == 0.0 and sol.Y[0, 1] == 0.0
        assert sol.Y[3, 3] != 0.0

    def test_pattern_size_mismatch(self):
        inst = ProblemInstance(np.eye(3), 1, 1, 1.0, 1.0)
        with pytest.raises(ValueError):
            alternating_minimization(inst, pattern=SparsityPattern(2))

    def test_bad_eps(self):
        inst = ProblemInstance(np.eye(2), 1, 0, 1.0, 1.0)
        with pytest.raises(ValueError):
            alternating_minimization(inst, eps=0.0)

    def test_deterministic(self):
        inst = ProblemInstance(_rng(11).standard_normal((6, 6)), 2, 4,
                               1.0, 1.0)
        s1, _ = alternating_minimization(inst)
        s2, _ = alternating_minimization(inst)
        np.testing.assert_array_equal(s1.X, s2.X)
        np.testing.assert_array_equal(s1.Y, s2.Y)


class TestPgdEquivalence:
    def test_fixed_pattern_iterates_coincide(self):
        # with a complete pattern, the alternating update on X equals a
        # projected-gradient step with step size 1/(2(1+lam))
        rng = _rng(12)
        for trial in range(5):
            n, k0, k1 = 8, 2, 6
            D = rng.standard_normal((n, n))
            lam, mu = rng.uniform(0.3, 2.0, size=2)
            cells = [(i, j) for i in range(n) for j in range(n)]
            idx = rng.choice(len(cells), size=k1, replace=False)
            support = [cells[i] for i in idx]
            pattern = _full_pattern(n, support)
            S = np.zeros((n, n))
            for ij in support:
                S[ij] = 1.0
            eta = 1.0 / (2.0 * (1.0 + lam))
            X_am = np.zeros((n, n))
            X_pgd = np.zeros((n, n))
            for _ in range(50):
                Y = solve_sparse_subproblem(D - X_am, k1, mu, pattern)
                X_am = solve_lowrank_subproblem(D - Y, k0, lam)
                grad = 2.0 * ((1.0 + lam) * X_pgd - D
                              + S * ((D - X_pgd) / (1.0 + mu)))
                X_pgd = linalg.truncated_svd(X_pgd - eta * grad,
                                             k0).reconstruct()
                assert np.abs(X_am - X_pgd).max() <= 1e-10


class TestMultistart:
    def test_never_worse_than_single_start(self):
        inst = ProblemInstance(_rng(13).standard_normal((6, 6)), 2, 4,
                               1.0, 1.0)
        single, _ = alternating_minimization(inst)
        multi, _ = multistart_alternating_minimization(inst, n_starts=4)
        assert multi.objective <= single.objective + 1e-12

    def test_deterministic(self):
        inst = ProblemInstance(_rng(14).standard_normal((5, 5)), 1, 3,
                               0.5, 0.5)
        a, _ = multistart_alternating_minimization(inst, n_starts=3, seed=5)
        b, _ = multistart_alternating_minimization(inst, n_starts=3, seed=5)
        assert a.objective == b.objective


class TestFixedPatternCertificate:
    def _certified_setup(self, seed=15):
        # strong regularization makes condition 1 positive; a clear
        # spectral gap satisfies condition 2
        rng = _rng(seed)
        n, k0, k1 = 4, 1, 2
        L = 10.0 * np.outer(rng.standard_normal(n), rng.standard_normal(n))
        D = L + 0.01 * rng.standard_normal((n, n))
        inst = ProblemInstance(D, k0, k1, 1.0, 1.0)
        sol, _ = alternating_minimization(inst, eps=1e-10, max_iters=5000)
        support = [tuple(map(int, ij)) for ij in zip(*np.nonzero(sol.Y))]
        while len(support) < k1:
            extra = [(i, j) for i in range(n) for j in range(n)
                     if (i, j) not in support]
            support.append(extra[0])
        pattern = _full_pattern(n, support)
        sol, _ = alternating_minimization(inst, eps=1e-12, max_iters=5000,
                                          pattern=pattern)
        return inst, pattern, sol

    def test_condition1_arithmetic(self):
        inst, pattern, sol = self._certified_setup()
        cert = fixed_pattern_certificate(inst, pattern, sol.X)
        assert cert.condition1_value == pytest.approx(1.0)

    def test_negative_condition1_uncertified(self):
        inst, pattern, sol = self._certified_setup()
        weak = ProblemInstance(inst.D, inst.k0, inst.k1, 0.1, 0.1)
        cert = fixed_pattern_certificate(weak, pattern, sol.X)
        assert cert.condition1_value < 0
        assert not cert.certified

    def test_certified_instance_multistart_agrees(self):
        inst, pattern, sol = self._certified_setup()
        cert = fixed_pattern_certificate(inst, pattern, sol.X)
        assert cert.certified
        best, _ = multistart_alternating_minimization(
            inst, n_starts=5, eps=1e-12, max_iters=5000, pattern=pattern)
        assert best.objective == pytest.approx(sol.objective, abs=1e-8)

    def test_linear_rate_on_certified_instance(self):
        inst, pattern, sol = self._certified_setup()
        cert = fixed_pattern_certificate(inst, pattern, sol.X)
        assert cert.certified
        _, trace = alternating_minimization(inst, eps=1e-14, max_iters=200,
                                            pattern=pattern)
        fstar = sol.objective
        lam, mu = inst.lam, inst.mu
        rate = 1.0 / ((2 * lam + 1) * (1 + mu) + mu)
        gaps = [f - fstar for f in trace.objective_values]
        ratios = [gaps[t + 1] / gaps[t] for t in range(len(gaps) - 1)
                  if gaps[t] > 1e-12]
        if ratios:
            assert min(ratios) <= rate + 0.05

    def test_incomplete_pattern_rejected(self):
        inst = ProblemInstance(np.eye(3), 1, 2, 1.0, 1.0)
        with pytest.raises(ValueError):
            fixed_pattern_certificate(inst, SparsityPattern(3), np.eye(3))

    def test_degenerate_flag(self):
        # X* = 0 and D with a vanishing k0-th singular value of Dtilde
        inst = ProblemInstance(np.zeros((2, 2)), 1, 0, 1.0, 1.0)
        pattern = _full_pattern(2, [])
        cert = fixed_pattern_certificate(inst, pattern, np.zeros((2, 2)))
        assert cert.degenerate
        assert not cert.certified
