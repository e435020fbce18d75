"""Tests for the first-order cone-program solver."""

import itertools
import json

import numpy as np
import pytest
import scipy.sparse

from splr.conic import (Cone, ConicProblem, nonneg_cone, project_cone,
                        psd_cone, rsoc_cone, solve_conic, zero_cone)


def _problem(c, rows, b, cones):
    A = scipy.sparse.csr_matrix(np.asarray(rows, dtype=float))
    return ConicProblem(c=np.asarray(c, float), A=A,
                        b=np.asarray(b, float), cones=cones)


class TestValidation:
    def test_dim_mismatch(self):
        with pytest.raises(ValueError):
            _problem([1.0], [[1.0], [1.0]], [0.0, 0.0], [nonneg_cone(1)])

    def test_b_size_mismatch(self):
        with pytest.raises(ValueError):
            _problem([1.0], [[1.0]], [0.0, 0.0], [nonneg_cone(1)])

    def test_nonfinite(self):
        with pytest.raises(ValueError):
            _problem([np.nan], [[1.0]], [0.0], [nonneg_cone(1)])

    def test_rsoc_min_dim(self):
        with pytest.raises(ValueError):
            rsoc_cone(1)


class TestProjections:
    def test_zero(self):
        np.testing.assert_array_equal(
            project_cone(np.array([1.0, -2.0]), zero_cone(2)), [0.0, 0.0])

    def test_nonneg(self):
        np.testing.assert_array_equal(
            project_cone(np.array([-1.0, 3.0]), nonneg_cone(2)), [0.0, 3.0])

    def test_psd_clip(self):
        v = np.diag([1.0, -2.0]).ravel()
        out = project_cone(v, psd_cone(2)).reshape(2, 2)
        np.testing.assert_allclose(out, np.diag([1.0, 0.0]), atol=1e-12)

    def test_rsoc_idempotent_and_feasible(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            v = rng.standard_normal(5) * 3
            p = project_cone(v, rsoc_cone(5))
            p2 = project_cone(p, rsoc_cone(5))
            np.testing.assert_allclose(p, p2, atol=1e-12)
            a, b, w = p[0], p[1], p[2:]
            assert a >= -1e-12 and b >= -1e-12
            assert 2 * a * b >= np.dot(w, w) - 1e-10

    def test_rsoc_distance_minimality_grid(self):
        # dense grid search over the 3-d rotated cone
        rng = np.random.default_rng(1)
        grid = np.linspace(0.0, 3.0, 61)
        ws = np.linspace(-3.0, 3.0, 121)
        pts = [(a, b, w) for a, b in itertools.product(grid, grid)
               for w in ws if 2 * a * b >= w * w]
        pts = np.array(pts)
        for _ in range(5):
            v = rng.standard_normal(3) * 1.5
            p = project_cone(v, rsoc_cone(3))
            d_proj = np.linalg.norm(p - v)
            d_grid = np.min(np.linalg.norm(pts - v, axis=1))
            assert d_proj <= d_grid + 0.05  # grid resolution slack

    def test_nonexpansive(self):
        rng = np.random.default_rng(2)
        for cone in (nonneg_cone(4), rsoc_cone(4), psd_cone(2), zero_cone(4)):
            for _ in range(20):
                u, v = rng.standard_normal(4), rng.standard_normal(4)
                pu, pv = project_cone(u, cone), project_cone(v, cone)
                assert np.linalg.norm(pu - pv) <= np.linalg.norm(u - v) + 1e-12

    def test_size_mismatch(self):
        with pytest.raises(ValueError):
            project_cone(np.zeros(3), nonneg_cone(2))

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            project_cone(np.zeros(2), Cone("exp", 2))


class TestSolveCorpus:
    def test_linear_bound(self):
        # min x s.t. x >= 1: row s = x - 1 in nonneg
        prob = _problem([1.0], [[-1.0]], [-1.0], [nonneg_cone(1)])
        sol = solve_conic(prob)
        assert sol.status == "optimal"
        assert sol.x[0] == pytest.approx(1.0, abs=1e-4)

    def test_psd_trace(self):
        # min tr(X) s.t. X psd, X11 = 1; vars: x = vec(X) (4 entries)
        c = [1.0, 0.0, 0.0, 1.0]
        rows = [[-1.0, 0, 0, 0],       # zero cone: X11 - 1 = 0
                [-1.0, 0, 0, 0],       # psd block: s = vec(X)
                [0, -1.0, 0, 0],
                [0, 0, -1.0, 0],
                [0, 0, 0, -1.0]]
        b = [-1.0, 0, 0, 0, 0]
        prob = _problem(c, rows, b, [zero_cone(1), psd_cone(2)])
        sol = solve_conic(prob)
        assert sol.status == "optimal"
        assert sol.objective == pytest.approx(1.0, abs=1e-4)

    def test_rsoc_scalar(self):
        # min alpha s.t. y^2 <= alpha*z, z = 1, y = 2 -> alpha* = 4
        # vars (alpha, z, y); rsoc rows (alpha, z/2, y); zero rows pin z, y
        c = [1.0, 0.0, 0.0]
        rows = [[-1.0, 0, 0],
                [0, -0.5, 0],
                [0, 0, -1.0],
                [0, -1.0, 0],
                [0, 0, -1.0]]
        b = [0, 0, 0, -1.0, -2.0]
        prob = _problem(c, rows, b, [rsoc_cone(3), zero_cone(2)])
        sol = solve_conic(prob)
        assert sol.status == "optimal"
        assert sol.objective == pytest.approx(4.0, abs=10 * 1e-5 * 5)

    def test_accuracy_contract(self):
        # |objective - optimum| <= 10*tol*(1+|optimum|) across the corpus
        cases = []
        cases.append((_problem([1.0], [[-1.0]], [-1.0], [nonneg_cone(1)]),
                      1.0))
        cases.append((_problem([1.0, 0.0, 0.0],
                               [[-1.0, 0, 0], [0, -0.5, 0], [0, 0, -1.0],
                                [0, -1.0, 0], [0, 0, -1.0]],
                               [0, 0, 0, -1.0, -2.0],
                               [rsoc_cone(3), zero_cone(2)]), 4.0))
        tol = 1e-5
        for prob, opt in cases:
            sol = solve_conic(prob, tol=tol)
            assert sol.status == "optimal"
            assert abs(sol.objective - opt) <= 10 * tol * (1 + abs(opt))
            assert max(sol.primal_residual, sol.dual_residual,
                       sol.objective_gap) <= tol

    def test_deterministic(self):
        prob = _problem([1.0, 2.0],
                        [[-1.0, 0.0], [0.0, -1.0], [-1.0, -1.0]],
                        [-1.0, -1.0, -3.0],
                        [nonneg_cone(3)])
        s1 = solve_conic(prob)
        s2 = solve_conic(prob)
        np.testing.assert_array_equal(s1.x, s2.x)
        np.testing.assert_array_equal(s1.y, s2.y)
        assert s1.iterations == s2.iterations

    def test_dual_feasibility_and_gap(self):
        prob = _problem([1.0], [[-1.0]], [-1.0], [nonneg_cone(1)])
        sol = solve_conic(prob)
        # dual of min c'x s.t. Ax+s=b: max -b'y, c + A'y = 0, y in K*
        assert sol.y[0] >= -1e-6
        assert abs(sol.objective - (-prob.b @ sol.y)) <= 1e-3


class TestDumpJson:
    def test_round_trip_fields(self, tmp_path):
        prob = _problem([1.0], [[-1.0]], [-1.0], [nonneg_cone(1)])
        path = tmp_path / "prob.json"
        prob.dump_json(path)
        data = json.loads(path.read_text())
        assert data["shape"] == [1, 1]
        assert data["cones"] == [["nonneg", 1]]
        assert data["A_triplets"] == [[0, 0, -1.0]]
