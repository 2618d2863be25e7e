"""Shrink-then-quantize preprocessing for heavy-tailed regression samples.

Pipeline per sample: an l2 shrinkage onto a ball of radius tau (varpi for
responses) tames heavy tails, then a random dither is added and each entry
is rounded by the uniform quantizer Q_eta(x) = eta * (floor(x / eta) + 1/2).
Covariates receive a triangular dither (sum of two independent uniforms on
[-eta/2, eta/2]); responses receive a single uniform dither. The asymmetry
is deliberate and is kept as given. eta = 0 disables quantization and
dithering for that stream so sweeps can include an unquantized baseline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import calibrate
from .matops import as_matrix

DITHER_KINDS = ("uniform", "triangular")
MODES = ("heavy_both", "heavy_response_only")


@dataclass(frozen=True)
class QuantConfig:
    """Quantization resolutions per stream; zero means pass-through."""

    eta1: float = 0.0
    eta2: float = 0.0
    dither_x: str = "triangular"
    dither_y: str = "uniform"

    def __post_init__(self):
        if self.eta1 < 0 or self.eta2 < 0:
            raise ValueError("quantization resolutions must be nonnegative")
        if self.dither_x not in DITHER_KINDS or self.dither_y not in DITHER_KINDS:
            raise ValueError(f"dither kinds must be one of {DITHER_KINDS}")


@dataclass(frozen=True)
class ShrinkConfig:
    """Shrinkage radii; None means calibrate from the data at hand."""

    tau: float | None = None
    varpi: float | None = None

    def __post_init__(self):
        for name, val in (("tau", self.tau), ("varpi", self.varpi)):
            if val is not None and not val > 0:
                raise ValueError(f"{name} must be positive, got {val}")


def shrink_l2(v, radius: float) -> np.ndarray:
    """Rescale v onto the l2 ball of the given radius, preserving direction.
    Vectors already inside the ball (and the zero vector) are unchanged."""
    if not radius > 0:
        raise ValueError(f"shrinkage radius must be positive, got {radius}")
    w = np.asarray(v, dtype=float)
    nrm = float(np.linalg.norm(w))
    if nrm <= radius or nrm == 0.0:
        return w.copy()
    return (radius / nrm) * w


def _shrink_rows(X: np.ndarray, radius: float) -> np.ndarray:
    if not radius > 0:
        raise ValueError(f"shrinkage radius must be positive, got {radius}")
    if math.isinf(radius):
        return X.copy()
    norms = np.linalg.norm(X, axis=1)
    scale = np.ones_like(norms)
    over = norms > radius
    scale[over] = radius / norms[over]
    return X * scale[:, None]


def _dither(shape, eta: float, kind: str, rng: np.random.Generator) -> np.ndarray:
    if kind == "uniform":
        return rng.uniform(-eta / 2.0, eta / 2.0, size=shape)
    if kind == "triangular":
        return rng.uniform(-eta / 2.0, eta / 2.0, size=shape) + rng.uniform(
            -eta / 2.0, eta / 2.0, size=shape
        )
    raise ValueError(f"dither kind must be one of {DITHER_KINDS}, got {kind!r}")


def gen_dither(d: int, eta: float, kind: str, rng: np.random.Generator) -> np.ndarray:
    """Draw one d-dimensional dither vector.

    'uniform' has i.i.d. coordinates on [-eta/2, eta/2] (variance eta^2/12);
    'triangular' is the sum of two such draws (support [-eta, eta], variance
    eta^2/6).
    """
    if not eta > 0:
        raise ValueError(f"eta must be positive, got {eta}")
    if d < 1:
        raise ValueError(f"dimension must be positive, got {d}")
    return _dither(d, eta, kind, rng)


def quantize_uniform(v, eta: float, dither=None) -> np.ndarray:
    """Dithered uniform quantization Q_eta(v + dither), elementwise.

    Every output entry is an odd multiple of eta/2 and lies within eta/2 of
    v + dither. Exact lattice boundaries round by floor as written; this is
    a probability-zero event under any continuous dither. eta = 0 returns v
    unchanged and ignores the dither.
    """
    w = np.asarray(v, dtype=float)
    if eta < 0:
        raise ValueError(f"eta must be nonnegative, got {eta}")
    if eta == 0:
        return w.copy()
    if dither is None:
        dith = np.zeros_like(w)
    else:
        dith = np.asarray(dither, dtype=float)
        if dith.shape != w.shape:
            raise ValueError(
                f"dither shape {dith.shape} does not match input shape {w.shape}"
            )
    return eta * (np.floor((w + dith) / eta) + 0.5)


def preprocess_multitask(X, Y, sc: ShrinkConfig, qc: QuantConfig, mode: str,
                         rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Shrink and quantize an (X, Y) sample per the chosen tail regime.

    'heavy_both' shrinks covariate and response rows before quantization;
    'heavy_response_only' leaves covariates unshrunk (sub-Gaussian case) and
    shrinks only responses. Radii set to None are calibrated on the rows of
    the corresponding stream. Dithers are drawn fresh per call and are not
    returned; only the quantized samples leave this function.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    Xm = as_matrix(X)
    Ym = as_matrix(Y)
    if Xm.shape[0] != Ym.shape[0]:
        raise ValueError(f"sample counts differ: {Xm.shape[0]} vs {Ym.shape[0]}")

    if mode == "heavy_both":
        tau = sc.tau if sc.tau is not None else calibrate.calibrate_tau_cov(Xm).tau
        Xs = _shrink_rows(Xm, tau)
    else:
        Xs = Xm.copy()
    varpi = sc.varpi if sc.varpi is not None else calibrate.calibrate_tau_cov(Ym).tau
    Ysh = _shrink_rows(Ym, varpi)

    if qc.eta1 > 0:
        Xq = quantize_uniform(Xs, qc.eta1, _dither(Xs.shape, qc.eta1, qc.dither_x, rng))
    else:
        Xq = Xs
    if qc.eta2 > 0:
        Yq = quantize_uniform(Ysh, qc.eta2, _dither(Ysh.shape, qc.eta2, qc.dither_y, rng))
    else:
        Yq = Ysh
    return Xq, Yq
