"""Experiment orchestration: sweeps preprocess -> estimators -> calibrate ->
solver over (n, eta) grids with replications, records errors, and emits CSV
and plot data.

Each (grid cell, replication) gets its own PCG64 stream derived from the
master seed through numpy's SeedSequence with the cell and replication
indices as extra entropy words, so runs are reproducible and independent of
how work is distributed across threads. Both pipelines (robust and the
plain-least-squares standard baseline) are solved on the same generated
sample with the same regularization weight; a failure in one pipeline marks
its record rather than aborting the sweep.
"""

from __future__ import annotations

import csv
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import calibrate
from .estimators import (
    minsker_cross_moment,
    psd_floor,
    sample_cov,
    sigma_xx_tilde,
    sigma_xy_tilde,
)
from .matops import matrix_norm
from .preprocess import MODES, QuantConfig, ShrinkConfig, preprocess_multitask
from .simgen import (
    DistSpec,
    TargetSpec,
    bundled_images_path,
    gen_matrix_response_data,
    gen_multitask_data,
    load_binary_images,
    make_target_blocks,
    make_target_v7,
)
from .solver import SolveOpts, solve_matrix_response, solve_multitask

MODELS = ("multitask", "matrix_response")
METHODS = ("robust", "standard")

# Regularization-weight constants multiplying the theorem-order rates,
# picked by a one-time pilot sweep over powers of two on a held-out seed.
DEFAULT_LAMBDA_CONST = {"multitask": 0.5, "matrix_response": 0.25}

# wall_time_s stays on RunRecord for in-process consumers but is not
# serialized: records.csv must be byte-identical for a fixed seed.
RECORD_COLUMNS = (
    "n", "d1", "d2", "eta1", "eta2", "replication", "method",
    "err_fro", "err_op", "iterations", "failed",
)


@dataclass(frozen=True)
class ExperimentSpec:
    """Declarative description of one Monte-Carlo study."""

    model: str
    target: TargetSpec
    noisespec: DistSpec
    n_grid: tuple[int, ...]
    eta_grid: tuple[float, ...]
    replications: int
    seed: int
    lambda_const: float | None = None
    covspec: DistSpec | None = None
    mode: str = "heavy_response_only"
    max_iters: int = 5000
    tol: float = 1e-9

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"model must be one of {MODELS}, got {self.model!r}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        object.__setattr__(self, "n_grid", tuple(int(n) for n in self.n_grid))
        object.__setattr__(self, "eta_grid", tuple(float(e) for e in self.eta_grid))
        if not self.n_grid or not self.eta_grid:
            raise ValueError("n_grid and eta_grid must be nonempty")
        if any(n < 1 for n in self.n_grid):
            raise ValueError("sample sizes must be positive")
        if any(e < 0 for e in self.eta_grid):
            raise ValueError("quantization resolutions must be nonnegative")
        if self.replications < 1:
            raise ValueError("replications must be at least 1")
        if self.model == "multitask" and self.covspec is None:
            raise ValueError("multitask experiments need a covspec")
        if self.lambda_const is not None and not self.lambda_const > 0:
            raise ValueError("lambda_const must be positive")

    @property
    def lam_const(self) -> float:
        if self.lambda_const is not None:
            return self.lambda_const
        return DEFAULT_LAMBDA_CONST[self.model]


@dataclass
class RunRecord:
    """One solved (cell, replication, method) outcome."""

    n: int
    d1: int
    d2: int
    eta1: float
    eta2: float
    replication: int
    method: str
    err_fro: float
    err_op: float
    iterations: int
    wall_time_s: float
    failed: bool = False
    block_err_fro: tuple[float, ...] | None = None


def _cell_rng(seed: int, stream: int, i_n: int, i_eta: int, rep: int) -> np.random.Generator:
    ss = np.random.SeedSequence([seed, stream, i_n, i_eta, rep])
    return np.random.default_rng(ss)


def build_target(tspec: TargetSpec, rng: np.random.Generator):
    """Materialize the ground truth for a target spec."""
    if tspec.kind == "v7_projector":
        return make_target_v7(tspec.d1, rng)
    if tspec.kind == "normalized_product_blocks":
        if tspec.rank is None:
            raise ValueError("normalized_product_blocks needs a rank")
        return make_target_blocks(tspec.s, tspec.d1, tspec.ncols, tspec.rank, rng)
    path = tspec.path or bundled_images_path()
    return load_binary_images(path)


def multitask_lambda(lam_const: float, d1: int, d2: int, n: int) -> float:
    dmax = max(d1, d2)
    return lam_const * math.sqrt(dmax * math.log(dmax) / n)


def matrix_response_lambda(lam_const: float, d1: int, d2: int, n: int) -> float:
    return lam_const * math.sqrt((d1 + d2) * math.log(d1 + d2) / n)


def _failed_record(n, d1, d2, eta, rep, method) -> RunRecord:
    return RunRecord(n=n, d1=d1, d2=d2, eta1=eta, eta2=eta, replication=rep,
                     method=method, err_fro=math.nan, err_op=math.nan,
                     iterations=0, wall_time_s=0.0, failed=True)


def _run_multitask_cell(spec: ExperimentSpec, theta_star: np.ndarray,
                        n: int, eta: float, i_n: int, i_eta: int,
                        rep: int) -> list[RunRecord]:
    d1, d2 = theta_star.shape
    rng = _cell_rng(spec.seed, 1, i_n, i_eta, rep)
    X, Y = gen_multitask_data(theta_star, spec.covspec, spec.noisespec, n, rng)
    lam = multitask_lambda(spec.lam_const, d1, d2, n)
    opts = SolveOpts(lam=lam, max_iters=spec.max_iters, tol=spec.tol)
    records = []
    for method in METHODS:
        t0 = time.perf_counter()
        try:
            if method == "robust":
                Xq, Yq = preprocess_multitask(
                    X, Y, ShrinkConfig(), QuantConfig(eta1=eta, eta2=eta),
                    spec.mode, rng,
                )
                Sxx = sigma_xx_tilde(Xq, eta)
                floored = float(np.linalg.eigvalsh(Sxx)[0]) < 0.0
                if floored:
                    Sxx = psd_floor(Sxx, 0.0)
                Sxy = sigma_xy_tilde(Xq, Yq)
            else:
                Sxx = sample_cov(X)
                floored = False
                Sxy = sigma_xy_tilde(X, Y)
            result = solve_multitask(Sxx, Sxy, opts)
            result.psd_floor_applied = floored
            delta = result.theta - theta_star
            records.append(RunRecord(
                n=n, d1=d1, d2=d2, eta1=eta, eta2=eta, replication=rep,
                method=method, err_fro=matrix_norm(delta, "fro"),
                err_op=matrix_norm(delta, "op"), iterations=result.iterations,
                wall_time_s=time.perf_counter() - t0,
            ))
        except Exception:
            records.append(_failed_record(n, d1, d2, eta, rep, method))
    return records


def _run_matrix_response_cell(spec: ExperimentSpec, thetas_star,
                              n: int, eta: float, i_n: int, i_eta: int,
                              rep: int) -> list[RunRecord]:
    s = len(thetas_star)
    d1, d2 = thetas_star[0].shape
    rng = _cell_rng(spec.seed, 1, i_n, i_eta, rep)
    X, Ys = gen_matrix_response_data(thetas_star, spec.noisespec, n, rng)
    lam = matrix_response_lambda(spec.lam_const, d1, d2, n)
    opts = SolveOpts(lam=lam, max_iters=spec.max_iters, tol=spec.tol)
    Sxx = sample_cov(X)
    records = []
    for method in METHODS:
        t0 = time.perf_counter()
        try:
            if method == "robust":
                blocks = []
                for k in range(s):
                    tau_k = calibrate.calibrate_tau_k(X[:, k], Ys).tau
                    blocks.append(minsker_cross_moment(X[:, k], Ys, tau_k))
            else:
                blocks = [np.einsum("i,ipq->pq", X[:, k], Ys) / n for k in range(s)]
            result = solve_matrix_response(Sxx, blocks, opts)
            deltas = [result.theta[k] - thetas_star[k] for k in range(s)]
            block_errs = tuple(matrix_norm(dk, "fro") for dk in deltas)
            records.append(RunRecord(
                n=n, d1=d1, d2=d2, eta1=eta, eta2=eta, replication=rep,
                method=method,
                err_fro=math.sqrt(sum(e**2 for e in block_errs)),
                err_op=max(matrix_norm(dk, "op") for dk in deltas),
                iterations=result.iterations,
                wall_time_s=time.perf_counter() - t0,
                block_err_fro=block_errs,
            ))
        except Exception:
            records.append(_failed_record(n, d1, d2, eta, rep, method))
    return records


def run_experiment(spec: ExperimentSpec, threads: int = 1) -> list[RunRecord]:
    """Run the full sweep and return records in grid x replication order."""
    target_rng = np.random.default_rng(np.random.SeedSequence([spec.seed, 0]))
    target = build_target(spec.target, target_rng)
    if spec.model == "multitask":
        runner = _run_multitask_cell
    else:
        runner = _run_matrix_response_cell
    tasks = [
        (n, eta, i_n, i_eta, rep)
        for i_n, n in enumerate(spec.n_grid)
        for i_eta, eta in enumerate(spec.eta_grid)
        for rep in range(spec.replications)
    ]

    def work(task):
        n, eta, i_n, i_eta, rep = task
        return runner(spec, target, n, eta, i_n, i_eta, rep)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(work, tasks))
    else:
        chunks = [work(t) for t in tasks]
    return [rec for chunk in chunks for rec in chunk]


def fit_loglog_slope(ns, errs) -> float:
    """OLS slope of log(err) against log(n)."""
    x = np.asarray(ns, dtype=float)
    y = np.asarray(errs, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("ns and errs must be 1-D of equal length")
    if x.size < 3:
        raise ValueError(f"need at least 3 points, got {x.size}")
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("sample sizes and errors must be positive")
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def _cell_key(r: RunRecord):
    return (r.n, r.d1, r.d2, r.eta1, r.eta2, r.method)


def _mean_sd(vals: list[float]) -> tuple[float, float]:
    if not vals:
        return math.nan, math.nan
    arr = np.asarray(vals)
    mean = float(arr.mean())
    sd = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    return mean, sd


def summarize(records: list[RunRecord]) -> list[dict]:
    """Per (cell, method) means and standard deviations of the errors.

    Failed replications are excluded from the statistics and reported in the
    `failures` column. Block errors, when present, get per-block columns and
    a Table-1-style `formatted` mean_(sd) column for the total.
    """
    if not records:
        raise ValueError("no records to summarize")
    groups: dict[tuple, list[RunRecord]] = {}
    for rec in records:
        groups.setdefault(_cell_key(rec), []).append(rec)
    n_blocks = max(
        (len(r.block_err_fro) for r in records if r.block_err_fro is not None),
        default=0,
    )
    rows = []
    for key, recs in groups.items():
        ok = [r for r in recs if not r.failed]
        mean_f, sd_f = _mean_sd([r.err_fro for r in ok])
        mean_o, sd_o = _mean_sd([r.err_op for r in ok])
        row = {
            "n": key[0], "d1": key[1], "d2": key[2],
            "eta1": key[3], "eta2": key[4], "method": key[5],
            "count": len(ok), "failures": len(recs) - len(ok),
            "mean_err_fro": mean_f, "sd_err_fro": sd_f,
            "mean_err_op": mean_o, "sd_err_op": sd_o,
            "formatted": f"{mean_f:.4f}_({sd_f:.2f})",
        }
        for b in range(n_blocks):
            vals = [r.block_err_fro[b] for r in ok if r.block_err_fro is not None]
            bm, bs = _mean_sd(vals)
            row[f"mean_err_fro_block{b + 1}"] = bm
            row[f"sd_err_fro_block{b + 1}"] = bs
        rows.append(row)
    return rows


def _fmt_cell(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def records_to_rows(records: list[RunRecord]) -> tuple[list[str], list[list[str]]]:
    n_blocks = max(
        (len(r.block_err_fro) for r in records if r.block_err_fro is not None),
        default=0,
    )
    header = list(RECORD_COLUMNS) + [f"block_err_fro_{b + 1}" for b in range(n_blocks)]
    rows = []
    for r in records:
        row = [_fmt_cell(getattr(r, c)) for c in RECORD_COLUMNS]
        blocks = r.block_err_fro or ()
        row.extend(_fmt_cell(blocks[b]) if b < len(blocks) else _fmt_cell(math.nan)
                   for b in range(n_blocks))
        rows.append(row)
    return header, rows


def emit_csv(rows_or_records, path) -> None:
    """Write records or summary rows as RFC-4180-style CSV ('.' decimal
    separator, 17-significant-digit floats, CRLF line endings)."""
    if rows_or_records and isinstance(rows_or_records[0], RunRecord):
        header, rows = records_to_rows(rows_or_records)
    elif rows_or_records and isinstance(rows_or_records[0], dict):
        header = list(rows_or_records[0].keys())
        rows = [[_fmt_cell(r[k]) for k in header] for r in rows_or_records]
    else:
        header, rows = list(RECORD_COLUMNS), []
    with open(path, "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(header)
        writer.writerows(rows)


def read_records_csv(path) -> list[RunRecord]:
    """Parse a records.csv written by `emit_csv` back into RunRecords."""
    with open(path, "r", newline="", encoding="ascii") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        block_cols = [c for c in header if c.startswith("block_err_fro_")]
        records = []
        for row in reader:
            vals = dict(zip(header, row))
            blocks = tuple(float(vals[c]) for c in block_cols)
            records.append(RunRecord(
                n=int(vals["n"]), d1=int(vals["d1"]), d2=int(vals["d2"]),
                eta1=float(vals["eta1"]), eta2=float(vals["eta2"]),
                replication=int(vals["replication"]), method=vals["method"],
                err_fro=float(vals["err_fro"]), err_op=float(vals["err_op"]),
                iterations=int(vals["iterations"]),
                wall_time_s=0.0,
                failed=vals["failed"] == "1",
                block_err_fro=blocks if (blocks and not all(math.isnan(b) for b in blocks)) else None,
            ))
    return records


def mean_errors_by_n(records: list[RunRecord], eta1: float, eta2: float,
                     method: str) -> tuple[list[int], list[float], list[float]]:
    """Mean err_fro per n for one (eta, method) series, with its standard
    errors; failed replications are excluded."""
    ns = sorted({r.n for r in records})
    means, ses = [], []
    kept = []
    for n in ns:
        vals = [r.err_fro for r in records
                if r.n == n and r.eta1 == eta1 and r.eta2 == eta2
                and r.method == method and not r.failed]
        if not vals:
            continue
        arr = np.asarray(vals)
        kept.append(n)
        means.append(float(arr.mean()))
        ses.append(float(arr.std(ddof=1) / math.sqrt(arr.size)) if arr.size > 1 else 0.0)
    return kept, means, ses


def write_plot_data(records: list[RunRecord], out_dir) -> list[str]:
    """Per-series (log n, log mean err) tables with both reference rates:
    slope -1/2, and sqrt(log n / n), each anchored at the series' first
    point. Returns the written paths."""
    os.makedirs(out_dir, exist_ok=True)
    series = sorted({(r.eta1, r.eta2, r.method) for r in records})
    written = []
    for eta1, eta2, method in series:
        ns, means, _ = mean_errors_by_n(records, eta1, eta2, method)
        if len(ns) < 2 or any(m <= 0 for m in means):
            continue
        logn = np.log(ns)
        logerr = np.log(means)
        c_half = logerr[0] + 0.5 * logn[0]
        sqrtlog = 0.5 * np.log(np.log(ns)) - 0.5 * logn
        c_sq = logerr[0] - sqrtlog[0]
        name = f"series_{method}_eta1_{eta1:g}_eta2_{eta2:g}.csv"
        path = os.path.join(out_dir, name)
        with open(path, "w", newline="", encoding="ascii") as fh:
            writer = csv.writer(fh, lineterminator="\r\n")
            writer.writerow(["log_n", "log_err", "ref_half", "ref_sqrtlog"])
            for i in range(len(ns)):
                writer.writerow([
                    _fmt_cell(float(logn[i])), _fmt_cell(float(logerr[i])),
                    _fmt_cell(float(-0.5 * logn[i] + c_half)),
                    _fmt_cell(float(sqrtlog[i] + c_sq)),
                ])
        written.append(path)
    return written


def slopes_table(records: list[RunRecord]) -> list[dict]:
    """Fitted log-log slope per (eta, method) series with >= 3 n points."""
    rows = []
    for eta1, eta2, method in sorted({(r.eta1, r.eta2, r.method) for r in records}):
        ns, means, _ = mean_errors_by_n(records, eta1, eta2, method)
        if len(ns) < 3 or any(m <= 0 for m in means):
            continue
        rows.append({
            "eta1": eta1, "eta2": eta2, "method": method,
            "n_points": len(ns), "slope": fit_loglog_slope(ns, means),
        })
    return rows
