"""Random data generation for the Monte-Carlo studies, plus the 0/1 image
parameter matrices used by the matrix-response recovery experiment.

All generators draw from a caller-supplied numpy Generator (PCG64 in the
harness) and touch it in a fixed order, so a fixed seed reproduces the same
streams. Chi-squared draws for the t samplers go through numpy's gamma
sampler (Marsaglia-Tsang), which handles the non-integer degrees of freedom
used here (2.1, 4.1, 5).
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

import numpy as np

from .matops import as_matrix, sym_eigen

IMAGE_ROWS = 43
IMAGE_COLS = 53
IMAGE_COUNT = 4

DIST_KINDS = (
    "gaussian_iid",
    "mvt",
    "scaled_t_iid",
    "t_product_noise",
    "t_column_noise",
    "wishart_centered_t",
)

TARGET_KINDS = ("v7_projector", "normalized_product_blocks", "binary_images")


@dataclass(frozen=True)
class DistSpec:
    """One sampling distribution: kind plus degrees of freedom and scale."""

    kind: str
    nu: float | None = None
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in DIST_KINDS:
            raise ValueError(f"unknown distribution kind {self.kind!r}")
        needs_nu = self.kind in (
            "mvt", "scaled_t_iid", "t_product_noise", "t_column_noise",
            "wishart_centered_t",
        )
        if needs_nu and (self.nu is None or not self.nu > 0):
            raise ValueError(f"kind {self.kind!r} needs degrees of freedom nu > 0")
        if self.kind == "wishart_centered_t" and self.nu is not None and self.nu <= 2:
            raise ValueError("wishart_centered_t needs nu > 2 for a finite center")
        if not self.scale >= 0:
            raise ValueError(f"scale must be nonnegative, got {self.scale}")


@dataclass(frozen=True)
class TargetSpec:
    """Declarative description of the ground-truth parameter matrices."""

    kind: str
    d1: int
    d2: int | None = None
    rank: int | None = None
    s: int = 1
    path: str | None = None

    def __post_init__(self):
        if self.kind not in TARGET_KINDS:
            raise ValueError(f"unknown target kind {self.kind!r}")
        if self.d1 < 1:
            raise ValueError("d1 must be positive")

    @property
    def ncols(self) -> int:
        return self.d1 if self.d2 is None else self.d2


def sample_mvt(n: int, mu, Sigma, nu: float, rng: np.random.Generator) -> np.ndarray:
    """Draw n rows from the d-variate t distribution T_d(mu, Sigma, nu),
    via Gaussian(0, Sigma) / sqrt(chi2_nu / nu) + mu."""
    if not nu > 0:
        raise ValueError(f"degrees of freedom must be positive, got {nu}")
    mu = np.asarray(mu, dtype=float).ravel()
    S = as_matrix(Sigma)
    d = mu.shape[0]
    if S.shape != (d, d):
        raise ValueError(f"Sigma shape {S.shape} does not match dimension {d}")
    try:
        L = np.linalg.cholesky(S)
    except np.linalg.LinAlgError:
        w, V = np.linalg.eigh(0.5 * (S + S.T))
        if w[0] < -1e-10 * max(1.0, abs(w[-1])):
            raise ValueError(f"Sigma is not PSD: min eigenvalue {w[0]}") from None
        L = V * np.sqrt(np.maximum(w, 0.0))
    Z = rng.standard_normal((n, d)) @ L.T
    chi = rng.chisquare(nu, size=n)
    return mu + Z * np.sqrt(nu / chi)[:, None]


def make_target_v7(d: int, rng: np.random.Generator) -> np.ndarray:
    """Rank-7 projector V7 V7^T, where V7 spans the top 7 eigenvectors of an
    empirical second moment of 100 standard Gaussian vectors. The 100-vector
    construction is kept even when d approaches or exceeds it."""
    if d < 7:
        raise ValueError(f"dimension must be at least 7, got {d}")
    Z = rng.standard_normal((100, d))
    eig = sym_eigen(Z.T @ Z / 100.0)
    V7 = eig.eigenvectors[:, :7]
    return V7 @ V7.T


def make_target_blocks(s: int, d1: int, d2: int, r: int,
                       rng: np.random.Generator) -> list[np.ndarray]:
    """s random rank-r blocks, each Frobenius-normalized to 1."""
    if not 1 <= r <= min(d1, d2):
        raise ValueError(f"rank must be in [1, {min(d1, d2)}], got {r}")
    blocks = []
    for _ in range(s):
        A = rng.standard_normal((d1, r))
        B = rng.standard_normal((d2, r))
        P = A @ B.T
        blocks.append(P / np.linalg.norm(P, "fro"))
    return blocks


def load_binary_images(path) -> list[np.ndarray]:
    """Read the four 43x53 0/1 parameter matrices from a plain-text file.

    Format: per matrix, a "rows cols" header line followed by `rows` lines
    of space-separated 0/1 integers; matrices are separated by one blank
    line. Exactly four 43x53 matrices are required.
    """
    with open(path, "r", encoding="ascii") as fh:
        text = fh.read()
    chunks = [c for c in text.split("\n\n") if c.strip()]
    if len(chunks) != IMAGE_COUNT:
        raise ValueError(f"expected {IMAGE_COUNT} matrices, found {len(chunks)}")
    mats = []
    for idx, chunk in enumerate(chunks):
        lines = [ln for ln in chunk.splitlines() if ln.strip()]
        try:
            rows, cols = (int(tok) for tok in lines[0].split())
        except (ValueError, IndexError):
            raise ValueError(f"matrix {idx}: malformed header line") from None
        if rows != IMAGE_ROWS or cols != IMAGE_COLS:
            raise ValueError(
                f"matrix {idx}: expected {IMAGE_ROWS}x{IMAGE_COLS}, header says {rows}x{cols}"
            )
        if len(lines) - 1 != rows:
            raise ValueError(f"matrix {idx}: expected {rows} data rows, found {len(lines) - 1}")
        data = []
        for ln in lines[1:]:
            vals = [float(tok) for tok in ln.split()]
            if len(vals) != cols:
                raise ValueError(f"matrix {idx}: row with {len(vals)} entries, expected {cols}")
            data.append(vals)
        M = np.asarray(data)
        if not np.all((M == 0.0) | (M == 1.0)):
            raise ValueError(f"matrix {idx}: entries must be 0 or 1")
        mats.append(M)
    return mats


def save_binary_images(mats, path) -> None:
    """Write 0/1 matrices in the format `load_binary_images` reads."""
    blocks = []
    for M in mats:
        A = as_matrix(M)
        if not np.all((A == 0.0) | (A == 1.0)):
            raise ValueError("entries must be 0 or 1")
        lines = [f"{A.shape[0]} {A.shape[1]}"]
        lines.extend(" ".join(str(int(v)) for v in row) for row in A)
        blocks.append("\n".join(lines))
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n\n".join(blocks) + "\n")


def bundled_images_path() -> str:
    """Filesystem path of the glyph fixtures shipped with the package."""
    return str(resources.files("lrquant").joinpath("data/glyphs.txt"))


def gen_multitask_data(Theta, covspec: DistSpec, noisespec: DistSpec, n: int,
                       rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Draw (X, Y) with Y_i = Theta^T X_i + eps_i, noise independent of X.

    Covariates are drawn first, then the noise, in one call each."""
    T = as_matrix(Theta)
    d1, d2 = T.shape
    X = _draw_vectors(covspec, n, d1, rng)
    E = _draw_vectors(noisespec, n, d2, rng)
    return X, X @ T + E


def _draw_vectors(spec: DistSpec, n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    if spec.kind == "gaussian_iid":
        return spec.scale * rng.standard_normal((n, d))
    if spec.kind == "mvt":
        return spec.scale * sample_mvt(n, np.zeros(d), np.eye(d), spec.nu, rng)
    if spec.kind == "scaled_t_iid":
        return spec.scale * rng.standard_t(spec.nu, size=(n, d))
    raise ValueError(f"kind {spec.kind!r} does not generate sample vectors")


def gen_matrix_response_data(Thetas, noisespec: DistSpec, n: int,
                             rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Draw (X, Ys) with Y_i = sum_k x_ik Theta_k + E_i and X ~ N(0, I_s).

    Noise kinds: 'mvt' vectorizes a (d1*d2)-variate t draw into the matrix;
    'wishart_centered_t' is (Z Z^T - nu/(nu-2) I) for a t_nu vector Z (square
    responses only); 't_product_noise' is Z1 Z2^T with independent t_nu
    factors; 't_column_noise' has i.i.d. t_nu column vectors; all scaled by
    `spec.scale`.
    """
    T = np.asarray(Thetas, dtype=float)
    if T.ndim != 3:
        raise ValueError("Thetas must be a list of equal-shape matrices")
    s, d1, d2 = T.shape
    X = rng.standard_normal((n, s))
    E = _draw_matrix_noise(noisespec, n, d1, d2, rng)
    Y = np.tensordot(X, T, axes=(1, 0)) + E
    return X, Y


def _draw_matrix_noise(spec: DistSpec, n: int, d1: int, d2: int,
                       rng: np.random.Generator) -> np.ndarray:
    if spec.kind == "gaussian_iid":
        return spec.scale * rng.standard_normal((n, d1, d2))
    if spec.kind == "mvt":
        V = sample_mvt(n, np.zeros(d1 * d2), np.eye(d1 * d2), spec.nu, rng)
        return spec.scale * V.reshape(n, d1, d2)
    if spec.kind == "wishart_centered_t":
        if d1 != d2:
            raise ValueError("wishart_centered_t noise requires square responses")
        Z = sample_mvt(n, np.zeros(d1), np.eye(d1), spec.nu, rng)
        center = spec.nu / (spec.nu - 2.0)
        outer = Z[:, :, None] * Z[:, None, :]
        return spec.scale * (outer - center * np.eye(d1))
    if spec.kind == "t_product_noise":
        Z1 = sample_mvt(n, np.zeros(d1), np.eye(d1), spec.nu, rng)
        Z2 = sample_mvt(n, np.zeros(d2), np.eye(d2), spec.nu, rng)
        return spec.scale * (Z1[:, :, None] * Z2[:, None, :])
    if spec.kind == "t_column_noise":
        cols = sample_mvt(n * d2, np.zeros(d1), np.eye(d1), spec.nu, rng)
        return spec.scale * cols.reshape(n, d2, d1).transpose(0, 2, 1)
    raise ValueError(f"kind {spec.kind!r} does not generate matrix noise")
