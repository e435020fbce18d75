"""Alternating minimization for sparse-plus-low-rank decomposition.

Both subproblems have closed forms: the low-rank step is a scaled truncated
SVD and the sparse step is a scaled hard threshold. The main driver supports
partial sparsity patterns (forced zero / forced nonzero entries), randomized
SVD acceleration, and an a-posteriori global-optimality certificate for
complete patterns.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .core import ProblemInstance, SlrSolution, objective


@dataclass(frozen=True)
class SparsityPattern:
    """Index sets forcing entries of Y to zero (I0) or into the support (I1)."""

    n: int
    I0: frozenset = frozenset()
    I1: frozenset = frozenset()

    def __post_init__(self):
        I0 = frozenset(map(tuple, self.I0))
        I1 = frozenset(map(tuple, self.I1))
        object.__setattr__(self, "I0", I0)
        object.__setattr__(self, "I1", I1)
        if I0 & I1:
            raise ValueError("I0 and I1 overlap")
        for (i, j) in I0 | I1:
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise ValueError(f"index ({i},{j}) out of range for n={self.n}")

    def is_complete(self, k1: int) -> bool:
        return len(self.I0) == self.n * self.n - k1 or len(self.I1) == k1

    def check_against(self, k1: int) -> None:
        n2 = self.n * self.n
        if len(self.I1) > k1:
            raise ValueError(f"|I1|={len(self.I1)} exceeds k1={k1}")
        if len(self.I0) > n2 - k1:
            raise ValueError(f"|I0|={len(self.I0)} exceeds n^2-k1={n2 - k1}")


@dataclass
class AmTrace:
    objective_values: list = field(default_factory=list)
    iterations: int = 0
    converged_reason: str = ""


def iteration_bound(lam: float, mu: float, eps: float) -> float:
    """Worst-case iteration count log((mu+lam+mu*lam)/(mu*lam))/log(1+eps).

    Returned as a real; loop guards take the ceiling.
    """
    if lam <= 0 or mu <= 0 or eps <= 0:
        raise ValueError("lam, mu, eps must be positive")
    return math.log((mu + lam + mu * lam) / (mu * lam)) / math.log(1.0 + eps)


def solve_lowrank_subproblem(Dbar, k0: int, lam: float,
                             svd_mode: str = "exact", seed: int = 0):
    """Minimize ||Dbar - X||_F^2 + lam*||X||_F^2 over rank(X) <= k0.

    The minimizer is the rank-k0 truncation of Dbar scaled by 1/(1+lam).
    svd_mode 'randomized' uses the sketched SVD (seed-deterministic).
    """
    X, _ = _lowrank_step(Dbar, k0, lam, svd_mode, seed)
    return X


def _lowrank_step(Dbar, k0: int, lam: float, svd_mode: str, seed: int = 0,
                  power_iters: int = 2):
    """Low-rank update returning (X, kept singular values of Dbar)."""
    Dbar = np.asarray(Dbar, dtype=float)
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    if svd_mode == "randomized":
        fact = linalg.randomized_svd(Dbar, k0, power_iters=power_iters,
                                     seed=seed)
    elif svd_mode == "exact":
        fact = linalg.truncated_svd(Dbar, k0)
    else:
        raise ValueError(f"unknown svd_mode {svd_mode!r}")
    return fact.reconstruct() / (1.0 + lam), fact.singular_values


def solve_sparse_subproblem(Dtilde, k1: int, mu: float,
                            pattern: SparsityPattern | None = None):
    """Minimize ||Dtilde - Y||_F^2 + mu*||Y||_F^2 over ||Y||_0 <= k1.

    The support is the k1 largest |Dtilde| entries (respecting any pattern
    forcing) and each kept entry equals Dtilde_ij/(1+mu).
    """
    Dtilde = np.asarray(Dtilde, dtype=float)
    if mu < 0:
        raise ValueError("mu must be nonnegative")
    if k1 == 0 and (pattern is None or not pattern.I1):
        return np.zeros_like(Dtilde)
    fz, fk = (), ()
    if pattern is not None:
        pattern.check_against(k1)
        fz, fk = pattern.I0, pattern.I1
    S = linalg.top_k_abs_select(Dtilde, k1, forced_zero=fz, forced_keep=fk)
    return S * Dtilde / (1.0 + mu)


def _rank_of(X, tol: float = 1e-9) -> int:
    s = np.linalg.svd(X, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > tol * s[0]))


def alternating_minimization(instance: ProblemInstance, eps: float = 1e-4,
                             max_iters: int = 1000, init=None,
                             pattern: SparsityPattern | None = None,
                             svd_mode: str = "exact", seed: int = 0):
    """Alternate the sparse and low-rank closed-form updates on D.

    Starting from (X0, Y0) = (0, 0) unless init is given, each iteration
    sets Y from D - X (hard threshold) then X from D - Y (truncated SVD),
    and stops when the relative objective decrease drops below eps, the
    objective hits zero, or the iteration cap is reached. The cap is the
    smaller of max_iters and the analytic worst-case bound.

    svd_mode 'randomized' sketches the SVD every iteration except the last,
    which reruns exactly; if a sketched update would increase the objective
    the exact update is used for that iteration instead.

    Returns (SlrSolution, AmTrace). The trace is non-increasing.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    D = instance.D
    k0, k1 = instance.k0, instance.k1
    lam, mu = instance.lam, instance.mu
    if pattern is not None:
        if pattern.n != instance.n:
            raise ValueError("pattern size does not match instance")
        pattern.check_against(k1)

    if init is None:
        X = np.zeros_like(D)
        Y = np.zeros_like(D)
    else:
        X = np.asarray(init[0], dtype=float).copy()
        Y = np.asarray(init[1], dtype=float).copy()

    cap = min(max_iters, math.ceil(iteration_bound(lam, mu, eps)))
    trace = AmTrace()
    f_prev = objective(instance, X, Y)
    trace.objective_values.append(f_prev)
    reason = "max-iters"
    randomized = svd_mode == "randomized"
    sv_final = None

    t = 0
    while t < cap:
        if f_prev == 0.0:
            reason = "zero-objective"
            break
        t += 1
        Y_new = solve_sparse_subproblem(D - X, k1, mu, pattern)
        Dbar = D - Y_new
        if randomized:
            X_new, sv = _lowrank_step(Dbar, k0, lam, "randomized",
                                      seed=seed + t)
            f_t = objective(instance, X_new, Y_new)
            if f_t > f_prev:
                # refine the sketch before resorting to an exact pass
                X_new, sv = _lowrank_step(Dbar, k0, lam, "randomized",
                                          seed=seed + t, power_iters=6)
                f_t = objective(instance, X_new, Y_new)
            if f_t > f_prev:
                X_new, sv = _lowrank_step(Dbar, k0, lam, "exact")
                f_t = objective(instance, X_new, Y_new)
        else:
            X_new, sv = _lowrank_step(Dbar, k0, lam, "exact")
            f_t = objective(instance, X_new, Y_new)
        X, Y = X_new, Y_new
        sv_final = sv
        trace.objective_values.append(f_t)
        if f_t == 0.0:
            f_prev = f_t
            reason = "zero-objective"
            break
        if (f_prev - f_t) / f_t < eps:
            f_prev = f_t
            reason = "relative-gap"
            break
        f_prev = f_t

    if randomized and t > 0:
        # final pass with exact SVD so the returned X is a true subproblem
        # minimizer for the final Y
        X_exact, sv_exact = _lowrank_step(D - Y, k0, lam, "exact")
        f_exact = objective(instance, X_exact, Y)
        if f_exact <= f_prev:
            X = X_exact
            sv_final = sv_exact
            f_prev = f_exact
            trace.objective_values.append(f_exact)

    trace.iterations = t
    trace.converged_reason = reason
    if sv_final is None:
        rank_x = _rank_of(X)
    else:
        # X was built as a truncated SVD scaled by a positive constant, so
        # its rank is the number of retained singular values above cutoff
        top = sv_final[0] if sv_final.size else 0.0
        rank_x = int(np.sum(sv_final > 1e-9 * top)) if top > 0 else 0
    sol = SlrSolution(X=X, Y=Y, objective=f_prev, rank_of_X=rank_x,
                      nnz_of_Y=int(np.count_nonzero(Y)))
    sol.feasible = sol.rank_of_X <= k0 and sol.nnz_of_Y <= k1
    return sol, trace


def multistart_alternating_minimization(instance: ProblemInstance,
                                        n_starts: int = 5, eps: float = 1e-4,
                                        max_iters: int = 1000,
                                        pattern: SparsityPattern | None = None,
                                        seed: int = 0):
    """Best AM solution over the zero start plus random Gaussian starts."""
    best, best_trace = alternating_minimization(
        instance, eps=eps, max_iters=max_iters, pattern=pattern)
    rng = np.random.default_rng(seed)
    n = instance.n
    for _ in range(max(0, n_starts - 1)):
        X0 = rng.standard_normal((n, n))
        Y0 = np.zeros((n, n))
        sol, tr = alternating_minimization(
            instance, eps=eps, max_iters=max_iters, init=(X0, Y0),
            pattern=pattern)
        if sol.objective < best.objective:
            best, best_trace = sol, tr
    return best, best_trace


@dataclass(frozen=True)
class PatternCertificate:
    certified: bool
    condition1_value: float
    gamma_value: float
    threshold: float
    degenerate: bool = False


def fixed_pattern_certificate(instance: ProblemInstance,
                              pattern: SparsityPattern,
                              Xstar) -> PatternCertificate:
    """Check sufficient conditions for global optimality on a fixed support.

    With S* the complete support indicator and
    Dtilde = (1/(1+lam)) * [D - S* o ((D - X*)/(1+mu))], the fixed point X*
    is the unique global optimum when

        condition1 = lam + 2*mu/(1+mu) - 1 > 0

    and, if rank(X*) = k0, additionally the spectral-gap ratio
    sigma_{k0+1}(Dtilde)/sigma_{k0}(Dtilde) < condition1/(1+lam).
    """
    n, k0, k1 = instance.n, instance.k0, instance.k1
    lam, mu = instance.lam, instance.mu
    if len(pattern.I0) != n * n - k1:
        raise ValueError("pattern is not complete (|I0| != n^2 - k1)")
    Xstar = np.asarray(Xstar, dtype=float)
    S = np.ones((n, n))
    for (i, j) in pattern.I0:
        S[i, j] = 0.0
    Dtilde = (instance.D - S * ((instance.D - Xstar) / (1.0 + mu))) / (1.0 + lam)
    cond1 = lam + 2.0 * mu / (1.0 + mu) - 1.0
    threshold = cond1 / (1.0 + lam)
    s = np.linalg.svd(Dtilde, compute_uv=False)
    if k0 >= n:
        gamma = 0.0
    elif s[k0 - 1] <= 0:
        return PatternCertificate(False, cond1, float("nan"), threshold,
                                  degenerate=True)
    else:
        gamma = float(s[k0] / s[k0 - 1])
    rank_x = _rank_of(Xstar)
    if rank_x < k0:
        certified = cond1 > 0
    else:
        certified = cond1 > 0 and gamma < threshold
    return PatternCertificate(bool(certified), float(cond1), float(gamma),
                              float(threshold))
