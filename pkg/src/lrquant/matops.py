"""Dense matrix primitives: norms, symmetric eigendecomposition, spectral
function application, and singular-value soft-thresholding.

All routines operate on plain 2-D float ndarrays and are pure functions of
their inputs. Eigen/singular values are returned in descending order and
eigenvector/singular-vector columns carry a fixed sign convention (first
non-negligible component >= 0) so factorizations are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Inputs produced by averaging large sums accumulate roundoff; anything
# asymmetric beyond this (max-norm) is treated as a caller error.
SYM_TOL = 1e-9

_NORM_KINDS = ("fro", "op", "nuclear", "max")


def as_matrix(a) -> np.ndarray:
    """Coerce to a finite 2-D float array, validating shape and entries."""
    m = np.asarray(a, dtype=float)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got ndim={m.ndim}")
    if m.size and not np.all(np.isfinite(m)):
        raise ValueError("matrix entries must be finite (no NaN/Inf)")
    return m


@dataclass(frozen=True)
class SymEigen:
    """Eigendecomposition A = V diag(w) V^T with w descending, V orthonormal."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


@dataclass(frozen=True)
class Svd:
    """Thin SVD A = U diag(s) V^T with s descending and nonnegative."""

    u: np.ndarray
    s: np.ndarray
    v: np.ndarray


def _fix_column_signs(V: np.ndarray, *companions: np.ndarray) -> None:
    """Flip column signs in place so each column's first non-negligible
    component is >= 0; companion matrices get the matching flips."""
    for j in range(V.shape[1]):
        col = V[:, j]
        scale = np.max(np.abs(col))
        if scale == 0.0:
            continue
        nz = np.nonzero(np.abs(col) > 1e-12 * scale)[0]
        if nz.size and col[nz[0]] < 0:
            V[:, j] = -col
            for W in companions:
                W[:, j] = -W[:, j]


def matrix_norm(A, kind: str) -> float:
    """Matrix norm of the named kind: 'fro', 'op' (spectral), 'nuclear'
    (sum of singular values), or 'max' (entrywise maximum magnitude)."""
    M = as_matrix(A)
    if kind not in _NORM_KINDS:
        raise ValueError(f"unknown norm kind {kind!r}; expected one of {_NORM_KINDS}")
    if M.size == 0:
        return 0.0
    if kind == "fro":
        return float(np.linalg.norm(M, "fro"))
    if kind == "max":
        return float(np.max(np.abs(M)))
    s = np.linalg.svd(M, compute_uv=False)
    return float(s[0]) if kind == "op" else float(np.sum(s))


def sym_eigen(A, tol: float = SYM_TOL) -> SymEigen:
    """Eigendecomposition of a symmetric matrix.

    The input may carry roundoff-level asymmetry up to `tol` (max-norm); it
    is symmetrized as (A + A^T)/2 before factorization. Raises ValueError if
    A is not square or is asymmetric beyond tolerance.
    """
    M = as_matrix(A)
    if M.shape[0] != M.shape[1]:
        raise ValueError(f"matrix is not square: shape {M.shape}")
    if M.size and np.max(np.abs(M - M.T)) > tol:
        raise ValueError(f"matrix is not symmetric within tolerance {tol}")
    S = 0.5 * (M + M.T)
    w, V = np.linalg.eigh(S)
    w = w[::-1].copy()
    V = V[:, ::-1].copy()
    _fix_column_signs(V)
    return SymEigen(eigenvalues=w, eigenvectors=V)


def svd(A) -> Svd:
    """Thin SVD with descending singular values and sign-fixed U columns."""
    M = as_matrix(A)
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    V = Vt.T.copy()
    _fix_column_signs(U, V)
    return Svd(u=U, s=s, v=V)


def apply_spectral_fn(A, f) -> np.ndarray:
    """Apply a scalar function to a symmetric matrix through its spectrum:
    returns V f(w) V^T where A = V diag(w) V^T.

    `f` is called on the eigenvalue vector; scalar-only callables are applied
    elementwise as a fallback.
    """
    eig = sym_eigen(A)
    w = eig.eigenvalues
    try:
        fw = np.asarray(f(w), dtype=float)
        if fw.shape != w.shape:
            raise TypeError("not vectorized")
    except (TypeError, ValueError):
        fw = np.fromiter((float(f(x)) for x in w), dtype=float, count=w.size)
    V = eig.eigenvectors
    return (V * fw) @ V.T


def clip_spectrum(A, tau: float) -> np.ndarray:
    """Spectral truncation psi_tau: clip eigenvalues of symmetric A to
    [-tau, tau]; the output's operator norm is at most tau."""
    if tau <= 0:
        raise ValueError(f"clip level must be positive, got {tau}")
    return apply_spectral_fn(A, lambda w: np.clip(w, -tau, tau))


def svt(A, t: float) -> np.ndarray:
    """Singular-value soft-thresholding U max(s - t, 0) V^T, the proximal
    map of t * nuclear norm."""
    if t < 0:
        raise ValueError(f"threshold must be nonnegative, got {t}")
    M = as_matrix(A)
    if t == 0:
        return M.copy()
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    shrunk = np.maximum(s - t, 0.0)
    keep = shrunk > 0
    if not np.any(keep):
        return np.zeros_like(M)
    return (U[:, keep] * shrunk[keep]) @ Vt[keep, :]
