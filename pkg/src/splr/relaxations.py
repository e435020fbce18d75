"""Convex relaxations of the sparse-plus-low-rank problem in cone-program form.

Three families are provided:

* the perspective relaxation: per-entry cones Y_ij^2 <= alpha_ij * Z_ij with
  a fractional support matrix Z, plus a lifted trace term for the low-rank
  part through a projection-matrix variable P;
* a nuclear-norm / l1 relaxation (after Lee and Zou) parameterized by bounds
  beta on the spectral norm of X and gamma on the entries of Y;
* a strengthened variant combining both with coupling boxes -gamma*Z <= Y
  <= gamma*Z and spectral blocks built from row/column projection variables.

When the sparse part is forced to vanish (k1 = 0 or every entry forced
zero), the residual quadratic in X is replaced by its exact linearization
||D||^2 - 2<D, X> + (1+lam)*tr(Theta), which is tight for the pure low-rank
problem; keeping the quadratic there gives a strictly weaker bound.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse

from .altmin import SparsityPattern
from .conic import Cone, ConicProblem, solve_conic
from .core import ProblemInstance


class _ConeProgramBuilder:
    """Accumulates variables, objective terms, and cone-tagged rows.

    Row semantics: each added expression e(x) becomes a slack component
    s = e(x) that must lie in the tagged cone.
    """

    def __init__(self):
        self.nvars = 0
        self.obj = {}
        self.constant = 0.0
        self._ri = []
        self._rj = []
        self._rv = []
        self._b = []
        self.cones = []

    def new_vars(self, count):
        start = self.nvars
        self.nvars += count
        return list(range(start, start + count))

    def add_objective(self, var, coef):
        self.obj[var] = self.obj.get(var, 0.0) + coef

    def _push_row(self, terms, const):
        r = len(self._b)
        for var, coef in terms:
            if coef != 0.0:
                self._ri.append(r)
                self._rj.append(var)
                self._rv.append(-coef)
        self._b.append(const)

    def add_block(self, kind, exprs):
        """exprs: list of (terms, const); appends one cone of that size."""
        for terms, const in exprs:
            self._push_row(terms, const)
        if kind == "psd":
            side = int(round(len(exprs) ** 0.5))
            self.cones.append(Cone("psd", side * side))
        else:
            self.cones.append(Cone(kind, len(exprs)))

    def build(self) -> ConicProblem:
        m = len(self._b)
        A = scipy.sparse.csr_matrix(
            (self._rv, (self._ri, self._rj)), shape=(m, self.nvars))
        c = np.zeros(self.nvars)
        for var, coef in self.obj.items():
            c[var] = coef
        return ConicProblem(c=c, A=A, b=np.array(self._b, dtype=float),
                            cones=self.cones)


def _tri_indices(n):
    return [(i, j) for i in range(n) for j in range(i, n)]


class _SymVar:
    """Symmetric n x n matrix stored as upper-triangle variables."""

    def __init__(self, bld, n):
        self.n = n
        self.pos = {}
        ids = bld.new_vars(n * (n + 1) // 2)
        for ij, v in zip(_tri_indices(n), ids):
            self.pos[ij] = v

    def var(self, i, j):
        return self.pos[(i, j) if i <= j else (j, i)]

    def extract(self, x):
        M = np.zeros((self.n, self.n))
        for (i, j), v in self.pos.items():
            M[i, j] = M[j, i] = x[v]
        return M


@dataclass
class RelaxationResult:
    lower_bound: float
    Z_fractional: np.ndarray
    P_fractional: np.ndarray
    X_relax: np.ndarray
    Y_relax: np.ndarray
    solver_status: str


@dataclass
class RelaxationModel:
    """A built cone program plus the maps needed to read its solution.

    The program is built on D/scale (unit-magnitude data keeps the ADMM
    iterates well conditioned); bounds scale back by scale^2 and the
    matrix variables by scale.
    """

    problem: ConicProblem
    constant: float
    n: int
    X_ids: list
    P_sym: _SymVar
    Y_ids: list = None
    Z_ids: list = None
    Z_fixed: dict = None   # forced Z values when Z is not a variable
    scale: float = 1.0

    def solve(self, tol: float = 1e-5, max_iters: int = 50000) -> RelaxationResult:
        sol = solve_conic(self.problem, tol=tol, max_iters=max_iters)
        n = self.n
        tau = self.scale
        x = sol.x
        X = tau * np.array(x)[self.X_ids].reshape(n, n)
        if self.Y_ids is None:
            Y = np.zeros((n, n))
        else:
            Y = tau * np.array(x)[self.Y_ids].reshape(n, n)
        if self.Z_ids is None:
            Z = np.zeros((n, n))
            if self.Z_fixed:
                for (i, j), v in self.Z_fixed.items():
                    Z[i, j] = v
        else:
            Z = np.clip(np.array(x)[self.Z_ids].reshape(n, n), 0.0, 1.0)
        P = self.P_sym.extract(x) if self.P_sym is not None else np.zeros((n, n))
        return RelaxationResult(
            lower_bound=float(sol.objective + self.constant) * tau * tau,
            Z_fractional=Z, P_fractional=P, X_relax=X, Y_relax=Y,
            solver_status=sol.status)


def _identity_expr(i, j):
    return 1.0 if i == j else 0.0


def _add_projection_constraints(bld, P: _SymVar, k0: int, n: int):
    """tr(P) <= k0, P >= 0, I - P >= 0 (PSD order)."""
    bld.add_block("nonneg", [
        ([(P.var(i, i), -1.0) for i in range(n)], float(k0))])
    bld.add_block("psd", [([(P.var(r, c), 1.0)], 0.0)
                          for r in range(n) for c in range(n)])
    bld.add_block("psd", [([(P.var(r, c), -1.0)], _identity_expr(r, c))
                          for r in range(n) for c in range(n)])


def _add_theta_block(bld, Th: _SymVar, X_ids, P: _SymVar, n: int):
    """2n x 2n block [[Theta, X], [X', P]] >= 0."""
    exprs = []
    for r in range(2 * n):
        for c in range(2 * n):
            if r < n and c < n:
                exprs.append(([(Th.var(r, c), 1.0)], 0.0))
            elif r < n <= c:
                exprs.append(([(X_ids[r * n + (c - n)], 1.0)], 0.0))
            elif c < n <= r:
                exprs.append(([(X_ids[c * n + (r - n)], 1.0)], 0.0))
            else:
                exprs.append(([(P.var(r - n, c - n), 1.0)], 0.0))
    bld.add_block("psd", exprs)


def _add_scaled_block(bld, beta, Pr: _SymVar, X_ids, Pc: _SymVar, n: int):
    """2n x 2n block [[beta*Pr, X], [X', beta*Pc]] >= 0."""
    exprs = []
    for r in range(2 * n):
        for c in range(2 * n):
            if r < n and c < n:
                exprs.append(([(Pr.var(r, c), beta)], 0.0))
            elif r < n <= c:
                exprs.append(([(X_ids[r * n + (c - n)], 1.0)], 0.0))
            elif c < n <= r:
                exprs.append(([(X_ids[c * n + (r - n)], 1.0)], 0.0))
            else:
                exprs.append(([(Pc.var(r - n, c - n), beta)], 0.0))
    bld.add_block("psd", exprs)


def _is_symmetric(D):
    return np.abs(D - D.T).max(initial=0.0) <= 1e-12 * max(1.0, np.abs(D).max(initial=0.0))


def _y_vanishes(instance: ProblemInstance, pattern) -> bool:
    if instance.k1 == 0:
        return True
    return pattern is not None and len(pattern.I0) == instance.n ** 2


def _normalized(instance: ProblemInstance):
    """Unit-magnitude copy of the instance and the applied scale factor.

    The feasible set of every relaxation is covariant under D -> D/tau
    (X, Y scale by 1/tau; Theta, alpha by 1/tau^2; Z, P unchanged), so the
    optimal value on the normalized data times tau^2 is exact. Working at
    unit scale keeps the first-order solver's iterates well conditioned.
    """
    tau = float(np.abs(instance.D).max())
    if tau <= 0 or tau == 1.0:
        return instance, 1.0
    return ProblemInstance(instance.D / tau, instance.k0, instance.k1,
                           instance.lam, instance.mu), tau


def _build_lowrank_core(bld, D, k0, lam):
    """Shared linearized low-rank model: objective constant ||D||^2 plus
    -2<D, X> + (1+lam)*tr(Theta) under the projection/block constraints."""
    n = D.shape[0]
    X_ids = bld.new_vars(n * n)
    Th = _SymVar(bld, n)
    P = _SymVar(bld, n)
    bld.constant += float(np.sum(D * D))
    for i in range(n):
        for j in range(n):
            bld.add_objective(X_ids[i * n + j], -2.0 * D[i, j])
    for i in range(n):
        bld.add_objective(Th.var(i, i), 1.0 + lam)
    _add_projection_constraints(bld, P, k0, n)
    _add_theta_block(bld, Th, X_ids, P, n)
    return X_ids, Th, P


def build_perspective_relaxation(instance: ProblemInstance,
                                 pattern: SparsityPattern | None = None,
                                 rho1: float | None = None,
                                 rho2: float | None = None) -> RelaxationModel:
    """Cone program for the perspective relaxation, honoring a partial
    pattern by pinning the corresponding Z entries.

    If rho1/rho2 are given, the trace and cardinality budgets are replaced
    by penalty terms rho1*tr(P) + rho2*<E, Z> in the objective.
    """
    n, k0, k1 = instance.n, instance.k0, instance.k1
    lam = instance.lam
    if pattern is not None:
        if pattern.n != n:
            raise ValueError("pattern size does not match instance")
        pattern.check_against(k1)
    instance, tau = _normalized(instance)

    if _y_vanishes(instance, pattern):
        bld = _ConeProgramBuilder()
        X_ids, Th, P = _build_lowrank_core(bld, instance.D, k0, lam)
        return RelaxationModel(problem=bld.build(), constant=bld.constant,
                               n=n, X_ids=X_ids, P_sym=P, scale=tau)
    if rho1 is not None:
        rho1 = rho1 / (tau * tau)
    if rho2 is not None:
        rho2 = rho2 / (tau * tau)
    model = _build_perspective_general(instance, pattern, rho1, rho2,
                                       strengthen=None)
    model.scale = tau
    return model


def build_strengthened_relaxation(instance: ProblemInstance,
                                  beta: float | None = None,
                                  gamma: float | None = None,
                                  pattern: SparsityPattern | None = None) -> RelaxationModel:
    """Perspective relaxation plus coupling boxes -gamma*Z <= Y <= gamma*Z
    and the scaled projection block [[beta*Pr, X], [X', beta*Pc]] >= 0.

    Defaults: beta = spectral norm of D, gamma = max |D_ij| (any valid
    upper bounds on the optimal X and Y preserve correctness).
    """
    if beta is None:
        beta = float(np.linalg.norm(instance.D, 2))
    if gamma is None:
        gamma = float(np.abs(instance.D).max())
    if beta <= 0 or gamma <= 0:
        raise ValueError("beta and gamma must be positive")
    n = instance.n
    instance, tau = _normalized(instance)
    beta, gamma = beta / tau, gamma / tau
    if _y_vanishes(instance, pattern):
        bld = _ConeProgramBuilder()
        X_ids, Th, P = _build_lowrank_core(bld, instance.D, instance.k0,
                                           instance.lam)
        if _is_symmetric(instance.D):
            Pr = Pc = P
        else:
            Pr = _SymVar(bld, n)
            _add_projection_constraints(bld, Pr, instance.k0, n)
            Pc = P
        _add_scaled_block(bld, beta, Pr, X_ids, Pc, n)
        return RelaxationModel(problem=bld.build(), constant=bld.constant,
                               n=n, X_ids=X_ids, P_sym=P, scale=tau)
    model = _build_perspective_general(instance, pattern, None, None,
                                       strengthen=(beta, gamma))
    model.scale = tau
    return model


def _build_perspective_general(instance, pattern, rho1, rho2, strengthen):
    n, k0, k1 = instance.n, instance.k0, instance.k1
    lam, mu = instance.lam, instance.mu
    D = instance.D
    n2 = n * n
    bld = _ConeProgramBuilder()
    t = bld.new_vars(1)[0]
    X_ids = bld.new_vars(n2)
    Y_ids = bld.new_vars(n2)
    Z_ids = bld.new_vars(n2)
    al_ids = bld.new_vars(n2)
    Th = _SymVar(bld, n)
    P = _SymVar(bld, n)

    bld.add_objective(t, 1.0)
    for i in range(n):
        bld.add_objective(Th.var(i, i), lam)
    for v in al_ids:
        bld.add_objective(v, mu)

    # residual epigraph: t >= ||D - X - Y||_F^2 as one big rotated cone
    exprs = [([(t, 1.0)], 0.0), ([], 0.5)]
    for i in range(n):
        for j in range(n):
            p = i * n + j
            exprs.append(([(X_ids[p], -1.0), (Y_ids[p], -1.0)], D[i, j]))
    bld.add_block("rsoc", exprs)

    # per-entry perspective cones Y_ij^2 <= alpha_ij * Z_ij
    for p in range(n2):
        bld.add_block("rsoc", [
            ([(al_ids[p], 1.0)], 0.0),
            ([(Z_ids[p], 0.5)], 0.0),
            ([(Y_ids[p], 1.0)], 0.0),
        ])

    # Z <= 1 (Z >= 0 is implied by the cones above)
    bld.add_block("nonneg", [([(z, -1.0)], 1.0) for z in Z_ids])

    if rho2 is None:
        bld.add_block("nonneg", [([(z, -1.0) for z in Z_ids], float(k1))])
    else:
        for z in Z_ids:
            bld.add_objective(z, rho2)
    if rho1 is None:
        bld.add_block("nonneg", [
            ([(P.var(i, i), -1.0) for i in range(n)], float(k0))])
    else:
        for i in range(n):
            bld.add_objective(P.var(i, i), rho1)

    # pattern pinning
    fixed = {}
    if pattern is not None:
        pins = []
        for (i, j) in sorted(pattern.I0):
            pins.append(([(Z_ids[i * n + j], 1.0)], 0.0))
            fixed[(i, j)] = 0.0
        for (i, j) in sorted(pattern.I1):
            pins.append(([(Z_ids[i * n + j], 1.0)], -1.0))
            fixed[(i, j)] = 1.0
        if pins:
            bld.add_block("zero", pins)

    bld.add_block("psd", [([(P.var(r, c), 1.0)], 0.0)
                          for r in range(n) for c in range(n)])
    bld.add_block("psd", [([(P.var(r, c), -1.0)], _identity_expr(r, c))
                          for r in range(n) for c in range(n)])
    _add_theta_block(bld, Th, X_ids, P, n)

    if strengthen is not None:
        beta, gamma = strengthen
        box = []
        for p in range(n2):
            box.append(([(Z_ids[p], gamma), (Y_ids[p], -1.0)], 0.0))
            box.append(([(Z_ids[p], gamma), (Y_ids[p], 1.0)], 0.0))
        bld.add_block("nonneg", box)
        if _is_symmetric(D):
            Pr = Pc = P
        else:
            Pr = _SymVar(bld, n)
            _add_projection_constraints(bld, Pr, k0, n)
            Pc = P
        _add_scaled_block(bld, beta, Pr, X_ids, Pc, n)

    return RelaxationModel(problem=bld.build(), constant=bld.constant, n=n,
                           X_ids=X_ids, P_sym=P, Y_ids=Y_ids, Z_ids=Z_ids,
                           Z_fixed=fixed or None)


def build_lee_zou_relaxation(instance: ProblemInstance, beta: float,
                             gamma: float) -> RelaxationModel:
    """Nuclear-norm / l1 relaxation: |Y| <= V entrywise with
    <E, V>/gamma <= k1, and (tr W1 + tr W2)/(2*beta) <= k0 with the block
    [[W1, X], [X', W2]] >= 0 bounding the nuclear norm of X."""
    if beta <= 0 or gamma <= 0:
        raise ValueError("beta and gamma must be positive")
    instance, tau = _normalized(instance)
    beta, gamma = beta / tau, gamma / tau
    n, k0, k1 = instance.n, instance.k0, instance.k1
    lam, mu = instance.lam, instance.mu
    D = instance.D
    n2 = n * n
    bld = _ConeProgramBuilder()
    t = bld.new_vars(1)[0]
    tx = bld.new_vars(1)[0]
    ty = bld.new_vars(1)[0]
    X_ids = bld.new_vars(n2)
    Y_ids = bld.new_vars(n2)
    V_ids = bld.new_vars(n2)
    W1 = _SymVar(bld, n)
    W2 = _SymVar(bld, n)
    bld.add_objective(t, 1.0)
    bld.add_objective(tx, lam)
    bld.add_objective(ty, mu)

    exprs = [([(t, 1.0)], 0.0), ([], 0.5)]
    for i in range(n):
        for j in range(n):
            p = i * n + j
            exprs.append(([(X_ids[p], -1.0), (Y_ids[p], -1.0)], D[i, j]))
    bld.add_block("rsoc", exprs)
    bld.add_block("rsoc", [([(tx, 1.0)], 0.0), ([], 0.5)]
                  + [([(v, 1.0)], 0.0) for v in X_ids])
    bld.add_block("rsoc", [([(ty, 1.0)], 0.0), ([], 0.5)]
                  + [([(v, 1.0)], 0.0) for v in Y_ids])

    box = []
    for p in range(n2):
        box.append(([(V_ids[p], 1.0), (Y_ids[p], -1.0)], 0.0))
        box.append(([(V_ids[p], 1.0), (Y_ids[p], 1.0)], 0.0))
    box.append(([(v, -1.0 / gamma) for v in V_ids], float(k1)))
    tr_terms = [(W1.var(i, i), -0.5 / beta) for i in range(n)]
    tr_terms += [(W2.var(i, i), -0.5 / beta) for i in range(n)]
    box.append((tr_terms, float(k0)))
    bld.add_block("nonneg", box)

    exprs = []
    for r in range(2 * n):
        for c in range(2 * n):
            if r < n and c < n:
                exprs.append(([(W1.var(r, c), 1.0)], 0.0))
            elif r < n <= c:
                exprs.append(([(X_ids[r * n + (c - n)], 1.0)], 0.0))
            elif c < n <= r:
                exprs.append(([(X_ids[c * n + (r - n)], 1.0)], 0.0))
            else:
                exprs.append(([(W2.var(r - n, c - n), 1.0)], 0.0))
    bld.add_block("psd", exprs)

    return RelaxationModel(problem=bld.build(), constant=0.0, n=n,
                           X_ids=X_ids, P_sym=None, Y_ids=Y_ids, scale=tau)


def solve_lowrank_sdp(Dbar, k0: int, lam: float, tol: float = 1e-5):
    """Semidefinite form of the regularized rank-k0 approximation problem.

    Minimizes ||Dbar||^2 + (1+lam)*tr(Theta) - 2<X, Dbar> over the lifted
    feasible set; the optimal value matches the spectral closed form
    lam/(1+lam)*sum_{i<=k0} phi_i^2 + sum_{i>k0} phi_i^2. Dbar must be
    symmetric. Returns (value, X).
    """
    Dbar = np.asarray(Dbar, dtype=float)
    if Dbar.ndim != 2 or Dbar.shape[0] != Dbar.shape[1]:
        raise ValueError("Dbar must be square")
    if not _is_symmetric(Dbar):
        raise ValueError("Dbar must be symmetric")
    n = Dbar.shape[0]
    if not 1 <= k0 <= n:
        raise ValueError("k0 out of range")
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    tau = float(np.abs(Dbar).max())
    if tau <= 0:
        tau = 1.0
    bld = _ConeProgramBuilder()
    X_ids, Th, P = _build_lowrank_core(bld, Dbar / tau, k0, lam)
    model = RelaxationModel(problem=bld.build(), constant=bld.constant,
                            n=n, X_ids=X_ids, P_sym=P, scale=tau)
    res = model.solve(tol=tol)
    return res.lower_bound, res.X_relax


def bound_gap(upper: float, lower: float) -> float:
    """Relative gap (upper - lower)/upper between a feasible value and a bound."""
    if upper <= 0:
        raise ValueError("upper must be positive")
    return (upper - lower) / upper
