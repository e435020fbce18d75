"""First-order solver for small cone programs.

Standard form:

    minimize    c'x
    subject to  Ax + s = b,  s in K,

where K is a product of zero, nonnegative, rotated second-order, and
positive-semidefinite cones (PSD blocks stored as full side*side row-major
vectors). Solved by two-block ADMM: alternate a projection onto the affine
constraint (cached Cholesky of AA' + I) with a projection onto K, carrying
a scaled dual. Data is Ruiz-equilibrated before solving. Deterministic.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse


@dataclass
class Cone:
    kind: str  # zero | nonneg | rsoc | psd
    dim: int   # row count; for psd this is side*side

    @property
    def side(self) -> int:
        if self.kind != "psd":
            raise ValueError("side only defined for psd cones")
        return int(round(self.dim ** 0.5))


def zero_cone(dim):
    return Cone("zero", dim)


def nonneg_cone(dim):
    return Cone("nonneg", dim)


def rsoc_cone(dim):
    if dim < 2:
        raise ValueError("rotated SOC needs dimension >= 2")
    return Cone("rsoc", dim)


def psd_cone(side):
    return Cone("psd", side * side)


@dataclass
class ConicProblem:
    c: np.ndarray
    A: scipy.sparse.csr_matrix
    b: np.ndarray
    cones: list

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).ravel()
        self.b = np.asarray(self.b, dtype=float).ravel()
        if not scipy.sparse.issparse(self.A):
            self.A = scipy.sparse.csr_matrix(np.asarray(self.A, dtype=float))
        else:
            self.A = self.A.tocsr().astype(float)
        m, n = self.A.shape
        if self.c.size != n:
            raise ValueError(f"c has size {self.c.size}, expected {n}")
        if self.b.size != m:
            raise ValueError(f"b has size {self.b.size}, expected {m}")
        total = sum(co.dim for co in self.cones)
        if total != m:
            raise ValueError(f"cone dims sum to {total}, expected {m} rows")
        if not (np.all(np.isfinite(self.c)) and np.all(np.isfinite(self.b))
                and np.all(np.isfinite(self.A.data))):
            raise ValueError("problem data contains non-finite entries")

    def dump_json(self, path) -> None:
        """Debug dump for cross-checking against external solvers."""
        coo = self.A.tocoo()
        payload = {
            "c": self.c.tolist(),
            "b": self.b.tolist(),
            "A_triplets": [[int(i), int(j), float(v)] for i, j, v in
                           zip(coo.row, coo.col, coo.data)],
            "shape": list(self.A.shape),
            "cones": [[co.kind, int(co.dim)] for co in self.cones],
        }
        with open(path, "w") as fh:
            json.dump(payload, fh)


@dataclass
class ConicSolution:
    x: np.ndarray
    s: np.ndarray
    y: np.ndarray
    status: str
    primal_residual: float
    dual_residual: float
    objective_gap: float
    objective: float
    iterations: int


def _project_soc(v):
    """Euclidean projection onto {(t, z): t >= ||z||}."""
    t, z = v[0], v[1:]
    nz = np.linalg.norm(z)
    if nz <= t:
        return v.copy()
    if nz <= -t:
        return np.zeros_like(v)
    coef = 0.5 * (t + nz)
    out = np.empty_like(v)
    out[0] = coef
    out[1:] = coef * z / nz
    return out


_SQ2 = np.sqrt(2.0)


def project_cone(point, cone: Cone):
    """Exact Euclidean projection of a vector onto one tagged cone."""
    v = np.asarray(point, dtype=float)
    if v.size != cone.dim:
        raise ValueError(f"point has size {v.size}, cone dim {cone.dim}")
    if cone.kind == "zero":
        return np.zeros_like(v)
    if cone.kind == "nonneg":
        return np.maximum(v, 0.0)
    if cone.kind == "rsoc":
        # rotate (a,b) -> (t,u): 2ab = t^2 - u^2 turns the cone into a
        # plain SOC on (t, [u, w]); the rotation is orthogonal so the
        # projection commutes with it
        a, b, w = v[0], v[1], v[2:]
        t = (a + b) / _SQ2
        u = (a - b) / _SQ2
        q = np.concatenate(([t, u], w))
        p = _project_soc(q)
        out = np.empty_like(v)
        out[0] = (p[0] + p[1]) / _SQ2
        out[1] = (p[0] - p[1]) / _SQ2
        out[2:] = p[2:]
        return out
    if cone.kind == "psd":
        p = cone.side
        M = 0.5 * (v.reshape(p, p) + v.reshape(p, p).T)
        w, Q = np.linalg.eigh(M)
        w = np.maximum(w, 0.0)
        return ((Q * w) @ Q.T).ravel()
    raise ValueError(f"unknown cone kind {cone.kind!r}")


def _project_product(v, cones):
    out = np.empty_like(v)
    at = 0
    for co in cones:
        out[at:at + co.dim] = project_cone(v[at:at + co.dim], co)
        at += co.dim
    return out


def _ruiz_equilibrate(A, b, c, cones, passes: int = 10):
    """Diagonal scaling D A E with uniform row scaling inside each
    rsoc/psd block (so cone membership is preserved)."""
    A = A.tocsr(copy=True)
    m, n = A.shape
    d = np.ones(m)
    e = np.ones(n)
    # row index -> cone block id, for blockwise uniformity
    block = np.empty(m, dtype=int)
    uniform = np.zeros(m, dtype=bool)
    at = 0
    for bi, co in enumerate(cones):
        block[at:at + co.dim] = bi
        if co.kind in ("rsoc", "psd"):
            uniform[at:at + co.dim] = True
        at += co.dim
    nblocks = len(cones)
    for _ in range(passes):
        Aabs = abs(A)
        rmax = Aabs.max(axis=1).toarray().ravel()
        rmax[rmax == 0] = 1.0
        r = 1.0 / np.sqrt(rmax)
        # geometric mean within uniform blocks
        logs = np.log(r)
        sums = np.bincount(block, weights=logs, minlength=nblocks)
        counts = np.bincount(block, minlength=nblocks)
        gm = np.exp(sums / np.maximum(counts, 1))
        r = np.where(uniform, gm[block], r)
        cmax = Aabs.max(axis=0).toarray().ravel()
        cmax[cmax == 0] = 1.0
        s = 1.0 / np.sqrt(cmax)
        A = scipy.sparse.diags(r) @ A @ scipy.sparse.diags(s)
        d *= r
        e *= s
    return A.tocsr(), d * b, e * c, d, e


def solve_conic(problem: ConicProblem, tol: float = 1e-5,
                max_iters: int = 50000) -> ConicSolution:
    """Solve a cone program by ADMM with Ruiz-equilibrated data.

    On status 'optimal' the relative primal/dual residuals and the
    normalized duality gap are all at most tol. No randomness: identical
    inputs give identical outputs.
    """
    A0, b0, c0 = problem.A, problem.b, problem.c
    cones = problem.cones
    m, n = A0.shape
    A, b, c, dscale, escale = _ruiz_equilibrate(A0, b0, c0, cones)
    # normalize rhs and objective scales (undone via sigb/sigc below)
    sigb = 1.0 + np.linalg.norm(b)
    sigc = 1.0 + np.linalg.norm(c)
    b = b / sigb
    c = c / sigc

    AAt = (A @ A.T).toarray()
    AAt[np.diag_indices_from(AAt)] += 1.0
    factor = scipy.linalg.cho_factor(AAt, lower=True, check_finite=False)
    At = A.T.tocsr()

    rho = 1.0
    x = np.zeros(n)
    s = np.zeros(m)
    st = np.zeros(m)   # cone-feasible copy of s
    ws = np.zeros(m)   # scaled dual for s = st
    nu = np.zeros(m)

    bnorm = 1.0 + np.linalg.norm(b0)
    cnorm = 1.0 + np.linalg.norm(c0)
    status = "max_iters"
    pres = dres = gap = np.inf
    it = 0
    check_every = 25

    while it < max_iters:
        it += 1
        # affine step: min c'x + (rho/2)(||x - a||^2 + ||s - d||^2)
        # s.t. Ax + s = b, with a = x (x is unconstrained in the cone
        # block so its consensus copy and multiplier collapse into x).
        # The factored matrix AA' + I does not depend on rho.
        a = x
        dvec = st - ws
        rhs = rho * (A @ a + dvec - b) - A @ c
        nu = scipy.linalg.cho_solve(factor, rhs, check_finite=False)
        x = a - (c + At @ nu) / rho
        s = dvec - nu / rho
        # cone step + dual update
        st_old = st
        st = _project_product(s + ws, cones)
        ws += s - st

        if it % check_every == 0 or it == max_iters:
            # residual balancing: rho starts at 1.0 and is doubled or
            # halved when the consensus and dual residuals drift apart
            rp = np.linalg.norm(s - st)
            rd = rho * np.linalg.norm(st - st_old)
            if rp > 10.0 * rd and rho < 1e6:
                rho *= 2.0
                ws *= 0.5
            elif rd > 10.0 * rp and rho > 1e-6:
                rho *= 0.5
                ws *= 2.0
            if not np.all(np.isfinite(x)):
                status = "numerical-failure"
                break
            # map back to the original scaling for termination tests
            xo = sigb * escale * x
            so = sigb * st / dscale
            yo = sigc * dscale * nu
            pres = np.linalg.norm(A0 @ xo + so - b0) / bnorm
            dres = np.linalg.norm(c0 + A0.T @ yo) / cnorm
            pobj = float(c0 @ xo)
            dobj = float(-b0 @ yo)
            gap = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
            if max(pres, dres, gap) <= tol:
                status = "optimal"
                break

    xo = sigb * escale * x
    so = sigb * st / dscale
    yo = sigc * dscale * nu
    if status == "max_iters" and not (np.isfinite(pres) and np.isfinite(dres)):
        status = "infeasible-suspected"
    return ConicSolution(x=xo, s=so, y=yo, status=status,
                         primal_residual=float(pres),
                         dual_residual=float(dres),
                         objective_gap=float(gap),
                         objective=float(c0 @ xo), iterations=it)
