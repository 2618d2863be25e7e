"""Moment estimators feeding the solvers.

Sample sums are accumulated in fixed index-ascending order with pairwise
combination over chunk partials, so results are reproducible run-to-run and
independent of worker thread counts. Heavy-tail defenses live in the inputs
(shrinkage/quantization for the multi-task estimators) or in the spectral
clipping applied here (cross-moment estimator for matrix responses).
"""

from __future__ import annotations

import numpy as np

from .matops import apply_spectral_fn, as_matrix, clip_spectrum

_CHUNK = 2048


def _pairwise_fold(parts: list[np.ndarray]) -> np.ndarray:
    """Sum a list of equal-shape arrays by pairwise folding (fixed tree)."""
    while len(parts) > 1:
        folded = []
        for i in range(0, len(parts) - 1, 2):
            folded.append(parts[i] + parts[i + 1])
        if len(parts) % 2:
            folded.append(parts[-1])
        parts = folded
    return parts[0]


def _sum_outer(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """sum_i outer(X_i, Y_i) over rows, chunked pairwise accumulation."""
    n = X.shape[0]
    parts = []
    for a in range(0, n, _CHUNK):
        b = min(a + _CHUNK, n)
        parts.append(np.sum(X[a:b, :, None] * Y[a:b, None, :], axis=0))
    return _pairwise_fold(parts)


def sigma_xx_tilde(Xq, eta1: float) -> np.ndarray:
    """Bias-corrected second moment of dithered-quantized covariates:
    (1/n) sum X~_i X~_i^T - (eta1^2 / 4) I.

    The correction removes the variance the triangular dither plus the
    rounding cell inject on the diagonal; the result is symmetric but not
    guaranteed PSD at small n (see `psd_floor`).
    """
    X = as_matrix(Xq)
    n, d = X.shape
    if n < 1:
        raise ValueError("need at least one sample")
    if eta1 < 0:
        raise ValueError(f"eta1 must be nonnegative, got {eta1}")
    S = _sum_outer(X, X) / n
    S = 0.5 * (S + S.T)
    if eta1 > 0:
        S = S - (eta1**2 / 4.0) * np.eye(d)
    return S


def sigma_xy_tilde(Xq, Yq) -> np.ndarray:
    """Cross moment (1/n) sum X~_i Y~_i^T. No correction term is needed:
    the covariate and response dithers are independent, so their error
    cross-products average to zero."""
    X = as_matrix(Xq)
    Y = as_matrix(Yq)
    if X.shape[0] != Y.shape[0]:
        raise ValueError(f"sample counts differ: {X.shape[0]} vs {Y.shape[0]}")
    if X.shape[0] < 1:
        raise ValueError("need at least one sample")
    return _sum_outer(X, Y) / X.shape[0]


def sample_cov(X) -> np.ndarray:
    """Uncentered sample covariance (1/n) sum X_i X_i^T; PSD by construction."""
    M = as_matrix(X)
    if M.shape[0] < 1:
        raise ValueError("need at least one sample")
    S = _sum_outer(M, M) / M.shape[0]
    return 0.5 * (S + S.T)


def dilation(B) -> np.ndarray:
    """Hermitian dilation [[0, B], [B^T, 0]]: symmetric, with eigenvalues
    equal to plus/minus the singular values of B (plus zeros)."""
    M = as_matrix(B)
    d1, d2 = M.shape
    out = np.zeros((d1 + d2, d1 + d2))
    out[:d1, d1:] = M
    out[d1:, :d1] = M.T
    return out


def minsker_cross_moment(xk, Ys, tau_k: float) -> np.ndarray:
    """Spectrally truncated cross-moment estimator for a matrix-response
    model: average psi_tau(dilation(x_i * Y_i)) over samples and return the
    top-right block. Clipping bounds the result's operator norm by tau_k
    regardless of how heavy-tailed the inputs are.
    """
    if tau_k <= 0:
        raise ValueError(f"tau_k must be positive, got {tau_k}")
    x = np.asarray(xk, dtype=float).ravel()
    Y = np.asarray(Ys, dtype=float)
    if Y.ndim != 3:
        raise ValueError(f"Ys must be (n, d1, d2), got shape {Y.shape}")
    n, d1, d2 = Y.shape
    if x.shape[0] != n:
        raise ValueError(f"sample counts differ: {x.shape[0]} vs {n}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(Y))):
        raise ValueError("inputs must be finite")

    parts = []
    chunk = []
    for i in range(n):
        chunk.append(clip_spectrum(dilation(x[i] * Y[i]), tau_k))
        if len(chunk) == _CHUNK:
            parts.append(np.sum(np.stack(chunk), axis=0))
            chunk = []
    if chunk:
        parts.append(np.sum(np.stack(chunk), axis=0))
    S = _pairwise_fold(parts) / n
    return S[:d1, d1:]


def psd_floor(S, floor: float = 0.0) -> np.ndarray:
    """Clip the eigenvalues of a symmetric matrix below at `floor`.
    Idempotent; a no-op (up to symmetrization) when lambda_min >= floor."""
    if floor < 0:
        raise ValueError(f"floor must be nonnegative, got {floor}")
    M = as_matrix(S)
    w = np.linalg.eigvalsh(0.5 * (M + M.T))
    if w.size and w[0] >= floor:
        return 0.5 * (M + M.T)
    return apply_spectral_fn(M, lambda v: np.maximum(v, floor))
