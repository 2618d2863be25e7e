"""Data-driven calibration of robustification thresholds.

Two adaptive equations are solved by bisection, both with a left side that
is continuous and nonincreasing in the threshold:

* covariate/response shrinkage radius tau:
      || tau^-4 sum_i (||X_i||^2 ^ tau^2)^2  X_i X_i^T / ||X_i||^2 ||_op
          = log(2 d) + log(n)

* per-coordinate truncation level tau_k for the matrix-response
  cross-moment estimator:
      || tau_k^-2 sum_i psi_{tau_k}(dilation(x_ik Y_i))^2 ||_op
          = 4 log(d1 + d2) + 4 log(n)

The left side of the first equation tends to ||sum_i u_i u_i^T||_op <= n as
tau -> 0+ and to 0 as tau -> infinity, so a root exists whenever the right
side sits below that supremum; otherwise the smallest bracket point is
returned with `no_root` set.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .matops import as_matrix

RTOL = 1e-6
MAX_BISECT = 200
MAX_DOUBLINGS = 60


@dataclass(frozen=True)
class CalibResult:
    tau: float
    residual: float
    iterations: int
    converged: bool
    no_root: bool = False


def _bisect(lhs, rhs: float, lo: float, hi: float, rtol: float, max_iter: int):
    """Bisection for lhs(tau) = rhs with lhs nonincreasing; the bracket
    satisfies lhs(lo) >= rhs >= lhs(hi) throughout."""
    tau = lo
    resid = lhs(lo) - rhs
    for it in range(1, max_iter + 1):
        tau = 0.5 * (lo + hi)
        resid = lhs(tau) - rhs
        if abs(resid) <= rtol * rhs:
            return tau, resid, it, True
        if resid > 0:
            lo = tau
        else:
            hi = tau
    return tau, resid, max_iter, False


def calibrate_tau_cov(X, rtol: float = RTOL, max_iter: int = MAX_BISECT) -> CalibResult:
    """Solve the adaptive shrinkage-radius equation on rows of X.

    Zero rows contribute nothing to the left side. Raises ValueError if all
    rows are zero or fewer than two samples are given.
    """
    M = as_matrix(X)
    n, d = M.shape
    if n < 2:
        raise ValueError("need at least two samples to calibrate")
    norms = np.linalg.norm(M, axis=1)
    nz = norms > 0
    if not np.any(nz):
        raise ValueError("degenerate data: all rows are zero")
    U = M[nz] / norms[nz, None]
    r4 = norms[nz] ** 4
    rhs = float(np.log(2 * d) + np.log(n))

    def lhs(tau: float) -> float:
        c = np.minimum(r4 / tau**4, 1.0)
        S = (U * c[:, None]).T @ U
        return float(np.linalg.eigvalsh(S)[-1])

    rmax = float(norms.max())
    lo = 1e-8 * rmax
    if lhs(lo) <= rhs:
        return CalibResult(tau=lo, residual=lhs(lo) - rhs, iterations=0,
                           converged=False, no_root=True)
    hi = rmax
    doublings = 0
    while lhs(hi) > rhs:
        hi *= 2.0
        doublings += 1
        if doublings > MAX_DOUBLINGS:
            raise RuntimeError("failed to bracket the calibration root")
    tau, resid, its, ok = _bisect(lhs, rhs, lo, hi, rtol, max_iter)
    return CalibResult(tau=tau, residual=resid, iterations=its, converged=ok)


def calibrate_tau_k(xk, Ys, rtol: float = RTOL, max_iter: int = MAX_BISECT) -> CalibResult:
    """Solve the adaptive truncation equation for one covariate coordinate.

    psi_tau(dilation(B))^2 is block diagonal with blocks U min(s,tau)^2 U^T
    and V min(s,tau)^2 V^T for B = U diag(s) V^T, so the left side only needs
    each sample's singular system, computed once and reused across bisection
    steps. The identity is exercised against the explicit dilation route in
    the test suite.
    """
    x = np.asarray(xk, dtype=float).ravel()
    Y = np.asarray(Ys, dtype=float)
    if Y.ndim != 3:
        raise ValueError(f"Ys must be (n, d1, d2), got shape {Y.shape}")
    n, d1, d2 = Y.shape
    if x.shape[0] != n:
        raise ValueError(f"sample counts differ: {x.shape[0]} vs {n}")
    if n < 2:
        raise ValueError("need at least two samples to calibrate")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(Y))):
        raise ValueError("inputs must be finite")

    # Singular system of x_i Y_i: scaling by |x_i| rescales singular values;
    # a sign flip is absorbed by U and cancels inside U m U^T.
    Us, Vs, svals = [], [], []
    for i in range(n):
        U, s, Vt = np.linalg.svd(x[i] * Y[i], full_matrices=False)
        Us.append(U)
        Vs.append(Vt.T)
        svals.append(s)
    sig = np.concatenate(svals)
    if not np.any(sig > 0):
        raise ValueError("degenerate data: all x_ik * Y_i are zero")
    Ustack = np.concatenate(Us, axis=1)
    Vstack = np.concatenate(Vs, axis=1)
    rhs = float(4.0 * np.log(d1 + d2) + 4.0 * np.log(n))

    def lhs(tau: float) -> float:
        m = np.minimum(sig, tau) ** 2
        S1 = (Ustack * m) @ Ustack.T
        S2 = (Vstack * m) @ Vstack.T
        top = max(np.linalg.eigvalsh(S1)[-1], np.linalg.eigvalsh(S2)[-1])
        return float(top) / tau**2

    smax = float(sig.max())
    lo = 1e-8 * smax
    if lhs(lo) <= rhs:
        return CalibResult(tau=lo, residual=lhs(lo) - rhs, iterations=0,
                           converged=False, no_root=True)
    hi = smax
    doublings = 0
    while lhs(hi) > rhs:
        hi *= 2.0
        doublings += 1
        if doublings > MAX_DOUBLINGS:
            raise RuntimeError("failed to bracket the calibration root")
    tau, resid, its, ok = _bisect(lhs, rhs, lo, hi, rtol, max_iter)
    return CalibResult(tau=tau, residual=resid, iterations=its, converged=ok)
