"""Nuclear-norm-regularized least-squares solvers.

Both programs share the same quadratic-plus-nuclear structure and are solved
by accelerated proximal gradient (FISTA) with singular-value thresholding as
the proximal step. The step size is 1 / (2 ||Sxx||_op), the smooth part's
exact Lipschitz constant, computed once. Monotone restart keeps the recorded
objective trace nonincreasing: if an accelerated step would increase the
objective, momentum is reset and a plain proximal step is taken instead,
which cannot increase the objective at this step size.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .matops import as_matrix, matrix_norm, svt

PSD_TOL = 1e-9
CONV_WINDOW = 5


@dataclass(frozen=True)
class SolveOpts:
    lam: float = 0.0
    max_iters: int = 5000
    tol: float = 1e-9
    acceleration: bool = True

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("regularization weight must be nonnegative")
        if not self.tol > 0:
            raise ValueError("tolerance must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")


@dataclass
class SolveResult:
    theta: np.ndarray | list[np.ndarray]
    objective_trace: np.ndarray = field(repr=False)
    iterations: int = 0
    converged: bool = False
    psd_floor_applied: bool = False


def _check_psd_symmetric(S, name: str) -> np.ndarray:
    M = as_matrix(S)
    if M.shape[0] != M.shape[1]:
        raise ValueError(f"{name} must be square, got shape {M.shape}")
    if M.size and np.max(np.abs(M - M.T)) > PSD_TOL:
        raise ValueError(f"{name} must be symmetric")
    M = 0.5 * (M + M.T)
    wmin = float(np.linalg.eigvalsh(M)[0])
    if wmin < -PSD_TOL:
        raise ValueError(f"{name} is not PSD: min eigenvalue {wmin}")
    return M


def objective_multitask(Theta, Sxx, Sxy, lam: float) -> float:
    """tr(Theta^T Sxx Theta) - 2 tr(Theta^T Sxy) + lam * ||Theta||_*."""
    T = as_matrix(Theta)
    Sxx = as_matrix(Sxx)
    Sxy = as_matrix(Sxy)
    if Sxx.shape != (T.shape[0], T.shape[0]) or Sxy.shape != T.shape:
        raise ValueError(
            f"inconsistent shapes: Theta {T.shape}, Sxx {Sxx.shape}, Sxy {Sxy.shape}"
        )
    smooth = float(np.sum(T * (Sxx @ T)) - 2.0 * np.sum(T * Sxy))
    if lam == 0:
        return smooth
    return smooth + lam * matrix_norm(T, "nuclear")


def _fista(forward, prox, objective, start, opts: SolveOpts):
    """Shared FISTA loop over a single ndarray variable (blocks are stacked
    into one array by the matrix-response wrapper). `forward` is one gradient
    step on the smooth part."""
    theta = start.copy()
    z = theta.copy()
    t_mom = 1.0
    trace = [objective(theta)]
    converged = False
    iterations = 0
    for k in range(1, opts.max_iters + 1):
        candidate = prox(forward(z)) if opts.acceleration else prox(forward(theta))
        f_new = objective(candidate)
        if f_new > trace[-1]:
            # Momentum overshoot: restart from the last accepted iterate.
            t_mom = 1.0
            candidate = prox(forward(theta))
            f_new = objective(candidate)
        if opts.acceleration:
            t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t_mom**2))
            z = candidate + ((t_mom - 1.0) / t_next) * (candidate - theta)
            t_mom = t_next
        theta = candidate
        trace.append(f_new)
        iterations = k
        if k > CONV_WINDOW:
            f_old = trace[-1 - CONV_WINDOW]
            if (f_old - f_new) <= opts.tol * max(abs(f_old), 1e-12):
                converged = True
                break
    return theta, np.asarray(trace), iterations, converged


def solve_multitask(Sxx, Sxy, opts: SolveOpts, theta0=None) -> SolveResult:
    """Minimize tr(T^T Sxx T) - 2 tr(T^T Sxy) + lam ||T||_* over T.

    Sxx must be symmetric PSD (apply `estimators.psd_floor` upstream if the
    bias correction left it indefinite). Non-convergence within max_iters is
    reported through the `converged` flag, not an exception. The default
    start is the zero matrix; the problem is convex, so the start only
    affects the iteration count.
    """
    S = _check_psd_symmetric(Sxx, "Sxx")
    B = as_matrix(Sxy)
    if B.shape[0] != S.shape[0]:
        raise ValueError(f"Sxy rows {B.shape[0]} do not match Sxx size {S.shape[0]}")
    lip = 2.0 * matrix_norm(S, "op")
    if lip == 0.0:
        if opts.lam >= 2.0 * matrix_norm(B, "op"):
            zero = np.zeros_like(B)
            return SolveResult(theta=zero, objective_trace=np.zeros(1),
                               iterations=0, converged=True)
        raise ValueError("Sxx is zero and lam is too small: objective unbounded")
    step = 1.0 / lip

    def forward(T):
        return T - step * (2.0 * (S @ T) - 2.0 * B)

    def prox(T):
        return svt(T, step * opts.lam)

    def objective(T):
        return objective_multitask(T, S, B, opts.lam)

    start = np.zeros_like(B) if theta0 is None else as_matrix(theta0).copy()
    theta, trace, iters, ok = _fista(forward, prox, objective, start, opts)
    return SolveResult(theta=theta, objective_trace=trace, iterations=iters,
                       converged=ok)


def objective_matrix_response(Thetas, Sxx, Sxy_blocks, lam: float) -> float:
    """sum_ij Sxx_ij <T_i, T_j> - 2 sum_k <Sxy_k, T_k> + lam sum_k ||T_k||_*."""
    T = _stack_blocks(Thetas, "Thetas")
    B = _stack_blocks(Sxy_blocks, "Sxy_blocks")
    S = as_matrix(Sxx)
    s = T.shape[0]
    if B.shape != T.shape or S.shape != (s, s):
        raise ValueError(
            f"inconsistent shapes: Thetas {T.shape}, Sxx {S.shape}, blocks {B.shape}"
        )
    gram = np.tensordot(T, T, axes=([1, 2], [1, 2]))
    smooth = float(np.sum(S * gram) - 2.0 * np.sum(T * B))
    if lam == 0:
        return smooth
    return smooth + lam * sum(matrix_norm(T[k], "nuclear") for k in range(s))


def _stack_blocks(blocks, name: str) -> np.ndarray:
    arr = np.asarray(blocks, dtype=float)
    if arr.ndim != 3:
        raise ValueError(f"{name} must be a list of equal-shape matrices")
    if arr.size and not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} entries must be finite")
    return arr


def solve_matrix_response(Sxx, Sxy_blocks, opts: SolveOpts, theta0=None) -> SolveResult:
    """Minimize the block objective over s coefficient matrices jointly.

    The smooth part acts on the stacked variable through Sxx (x) I with
    Lipschitz constant 2 ||Sxx||_op; each block gets its own singular-value
    threshold per iteration.
    """
    S = _check_psd_symmetric(Sxx, "Sxx")
    B = _stack_blocks(Sxy_blocks, "Sxy_blocks")
    if B.shape[0] != S.shape[0]:
        raise ValueError(f"{B.shape[0]} blocks do not match Sxx size {S.shape[0]}")
    lip = 2.0 * matrix_norm(S, "op")
    if lip == 0.0:
        raise ValueError("Sxx is zero: objective has no unique minimizer")
    step = 1.0 / lip

    def forward(T):
        return T - step * (2.0 * np.tensordot(S, T, axes=(1, 0)) - 2.0 * B)

    def prox(T):
        return np.stack([svt(T[k], step * opts.lam) for k in range(T.shape[0])])

    def objective(T):
        return objective_matrix_response(T, S, B, opts.lam)

    start = np.zeros_like(B) if theta0 is None else _stack_blocks(theta0, "theta0").copy()
    theta, trace, iters, ok = _fista(forward, prox, objective, start, opts)
    return SolveResult(theta=[theta[k] for k in range(theta.shape[0])],
                       objective_trace=trace, iterations=iters, converged=ok)
