"""Robust low-rank estimation for multi-response linear models under
quantization and heavy tails: shrink-then-quantize preprocessing,
bias-corrected and spectrally truncated moment estimators, nuclear-norm
regularized solvers, adaptive threshold calibration, and a Monte-Carlo
harness."""

from .calibrate import CalibResult, calibrate_tau_cov, calibrate_tau_k
from .estimators import (
    dilation,
    minsker_cross_moment,
    psd_floor,
    sample_cov,
    sigma_xx_tilde,
    sigma_xy_tilde,
)
from .harness import (
    ExperimentSpec,
    RunRecord,
    emit_csv,
    fit_loglog_slope,
    run_experiment,
    summarize,
)
from .matops import (
    SymEigen,
    Svd,
    apply_spectral_fn,
    clip_spectrum,
    matrix_norm,
    svd,
    svt,
    sym_eigen,
)
from .preprocess import (
    QuantConfig,
    ShrinkConfig,
    gen_dither,
    preprocess_multitask,
    quantize_uniform,
    shrink_l2,
)
from .simgen import (
    DistSpec,
    TargetSpec,
    bundled_images_path,
    gen_matrix_response_data,
    gen_multitask_data,
    load_binary_images,
    make_target_blocks,
    make_target_v7,
    sample_mvt,
    save_binary_images,
)
from .solver import (
    SolveOpts,
    SolveResult,
    objective_matrix_response,
    objective_multitask,
    solve_matrix_response,
    solve_multitask,
)

__version__ = "0.1.0"

__all__ = [
    "CalibResult", "calibrate_tau_cov", "calibrate_tau_k",
    "dilation", "minsker_cross_moment", "psd_floor", "sample_cov",
    "sigma_xx_tilde", "sigma_xy_tilde",
    "ExperimentSpec", "RunRecord", "emit_csv", "fit_loglog_slope",
    "run_experiment", "summarize",
    "SymEigen", "Svd", "apply_spectral_fn", "clip_spectrum", "matrix_norm",
    "svd", "svt", "sym_eigen",
    "QuantConfig", "ShrinkConfig", "gen_dither", "preprocess_multitask",
    "quantize_uniform", "shrink_l2",
    "DistSpec", "TargetSpec", "bundled_images_path",
    "gen_matrix_response_data", "gen_multitask_data", "load_binary_images",
    "make_target_blocks", "make_target_v7", "sample_mvt", "save_binary_images",
    "SolveOpts", "SolveResult", "objective_matrix_response",
    "objective_multitask", "solve_matrix_response", "solve_multitask",
]
