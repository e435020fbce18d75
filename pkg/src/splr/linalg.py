"""Dense linear-algebra primitives shared by the rest of the package.

All routines operate on plain numpy arrays (row-major, float64) and are
pure functions: no global state, safe to call concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SpectralFactorization:
    """Truncated SVD: ``U @ diag(s) @ V.T`` approximates the input.

    singular_values are nonnegative and non-increasing; left_vectors and
    right_vectors have orthonormal columns.
    """

    singular_values: np.ndarray
    left_vectors: np.ndarray
    right_vectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.left_vectors * self.singular_values) @ self.right_vectors.T


def _as_matrix(A) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise ValueError(f"expected a 2-d array, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix contains non-finite entries")
    return A


def sym_eig(A) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a symmetric matrix, eigenvalues descending.

    Returns (eigenvalues, eigenvectors) with A = Q diag(w) Q.T.
    Raises ValueError for non-square or asymmetric input.
    """
    A = _as_matrix(A)
    n, m = A.shape
    if n != m:
        raise ValueError(f"matrix is not square: {A.shape}")
    scale = max(1.0, np.abs(A).max()) if A.size else 1.0
    if np.abs(A - A.T).max(initial=0.0) > 1e-12 * scale:
        raise ValueError("matrix is not symmetric to 1e-12")
    w, Q = np.linalg.eigh(0.5 * (A + A.T))
    order = np.argsort(-w, kind="stable")
    return w[order], Q[:, order]


def truncated_svd(A, k: int) -> SpectralFactorization:
    """Leading-k singular triplets of A.

    The rank-k reconstruction is a Frobenius-optimal rank-<=k approximation
    (unique only when sigma_k > sigma_{k+1}; ties resolved by LAPACK order).
    """
    A = _as_matrix(A)
    if not 1 <= k <= min(A.shape):
        raise ValueError(f"k={k} out of range for shape {A.shape}")
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    return SpectralFactorization(s[:k].copy(), U[:, :k].copy(), Vt[:k].T.copy())


def truncated_svd_sym(A, k: int) -> SpectralFactorization:
    """Fast path for symmetric A: SVD from the eigendecomposition."""
    w, Q = sym_eig(A)
    order = np.argsort(-np.abs(w), kind="stable")[:k]
    s = np.abs(w[order])
    U = Q[:, order]
    V = U * np.sign(w[order] + (w[order] == 0))
    return SpectralFactorization(s.copy(), U.copy(), V.copy())


def randomized_svd(A, k: int, oversampling: int = 10, power_iters: int = 2,
                   seed: int = 0) -> SpectralFactorization:
    """Randomized range-finder SVD (Gaussian sketch + power iterations).

    Deterministic for a fixed seed. Requires k + oversampling <= min(shape).
    """
    A = _as_matrix(A)
    if not 1 <= k <= min(A.shape):
        raise ValueError(f"k={k} out of range for shape {A.shape}")
    n_samples = k + oversampling
    if n_samples > min(A.shape):
        n_samples = min(A.shape)
    rng = np.random.default_rng(seed)
    G = rng.standard_normal((A.shape[1], n_samples))
    Q, _ = np.linalg.qr(A @ G)
    for _ in range(power_iters):
        Q, _ = np.linalg.qr(A.T @ Q)
        Q, _ = np.linalg.qr(A @ Q)
    B = Q.T @ A
    Ub, s, Vt = np.linalg.svd(B, full_matrices=False)
    return SpectralFactorization(s[:k].copy(), (Q @ Ub[:, :k]).copy(),
                                 Vt[:k].T.copy())


def top_k_abs_select(M, k: int, forced_zero=(), forced_keep=()) -> np.ndarray:
    """Binary matrix marking the k largest-|entry| positions of M.

    forced_keep positions are always selected and forced_zero never are;
    remaining slots go to the largest |M_ij| among free positions, ties
    broken in row-major order.
    """
    M = _as_matrix(M)
    forced_zero = set(map(tuple, forced_zero))
    forced_keep = set(map(tuple, forced_keep))
    if forced_zero & forced_keep:
        raise ValueError("forced_zero and forced_keep overlap")
    if len(forced_keep) > k:
        raise ValueError(f"{len(forced_keep)} forced-keep entries exceed k={k}")
    if k > M.size - len(forced_zero):
        raise ValueError("k exceeds the number of admissible entries")
    S = np.zeros(M.shape)
    for ij in forced_keep:
        S[ij] = 1.0
    budget = k - len(forced_keep)
    if budget > 0:
        flat = np.abs(M).ravel()
        ncols = M.shape[1]
        for (i, j) in forced_zero | forced_keep:
            flat[i * ncols + j] = -1.0
        # threshold at the budget-th largest magnitude, then resolve ties
        # at the boundary in row-major order
        th = np.partition(flat, flat.size - budget)[flat.size - budget]
        above = flat > th
        n_above = int(np.count_nonzero(above))
        S.ravel()[above] = 1.0
        remaining = budget - n_above
        if remaining > 0:
            tied = np.flatnonzero(flat == th)[:remaining]
            S.ravel()[tied] = 1.0
    return S


def pseudoinverse(A, tol: float = 1e-12) -> np.ndarray:
    """Moore-Penrose pseudoinverse, zeroing singular values < tol * sigma_max."""
    A = _as_matrix(A)
    if tol <= 0:
        raise ValueError("tol must be positive")
    return np.linalg.pinv(A, rcond=tol)


def read_matrix_csv(path) -> np.ndarray:
    """Read the repo-wide matrix format: headerless CSV, one row per line.

    Dimensions are inferred; ragged rows raise ValueError.
    """
    rows = []
    with open(path, "r") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rows.append([float(tok) for tok in line.split(",")])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: non-numeric entry") from exc
    if not rows:
        raise ValueError(f"{path}: empty matrix file")
    width = len(rows[0])
    for i, row in enumerate(rows, start=1):
        if len(row) != width:
            raise ValueError(f"{path}:{i}: ragged row ({len(row)} != {width})")
    return np.array(rows, dtype=float)


def write_matrix_csv(path, A) -> None:
    A = _as_matrix(A)
    with open(path, "w") as fh:
        for row in A:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
