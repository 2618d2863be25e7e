"""Command-line interface for the Monte-Carlo harness.

Subcommands: `run` executes a sweep described by a TOML spec file and writes
records.csv, summary.csv, slopes.csv and plotdata/*.csv to the output
directory; `summarize` and `slope` post-process an existing records.csv;
`images` runs the 0/1 image recovery comparison. Exit codes: 0 on success,
2 on a spec/usage error, 3 on an I/O error.
"""

from __future__ import annotations

import argparse
import os
import sys

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .harness import (
    ExperimentSpec,
    emit_csv,
    fit_loglog_slope,
    mean_errors_by_n,
    read_records_csv,
    run_experiment,
    slopes_table,
    summarize,
    write_plot_data,
)
from .simgen import DistSpec, TargetSpec

EXIT_OK = 0
EXIT_SPEC_ERROR = 2
EXIT_IO_ERROR = 3


def spec_from_dict(raw: dict) -> ExperimentSpec:
    """Build an ExperimentSpec from parsed TOML, field names as documented."""
    data = dict(raw)
    try:
        target = TargetSpec(**data.pop("target"))
        noisespec = DistSpec(**data.pop("noisespec"))
        cov = data.pop("covspec", None)
        covspec = DistSpec(**cov) if cov is not None else None
        return ExperimentSpec(target=target, noisespec=noisespec,
                              covspec=covspec, **data)
    except TypeError as exc:
        raise ValueError(f"bad experiment spec: {exc}") from None


def load_spec(path: str) -> ExperimentSpec:
    with open(path, "rb") as fh:
        try:
            raw = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ValueError(f"cannot parse spec file {path}: {exc}") from None
    return spec_from_dict(raw)


def _write_outputs(records, out_dir: str) -> None:
    os.makedirs(out_dir, exist_ok=True)
    emit_csv(records, os.path.join(out_dir, "records.csv"))
    emit_csv(summarize(records), os.path.join(out_dir, "summary.csv"))
    slopes = slopes_table(records)
    if slopes:
        emit_csv(slopes, os.path.join(out_dir, "slopes.csv"))
    write_plot_data(records, os.path.join(out_dir, "plotdata"))


def cmd_run(args) -> int:
    spec = load_spec(args.spec)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.reps is not None:
        overrides["replications"] = args.reps
    if overrides:
        spec = ExperimentSpec(**{
            **{f: getattr(spec, f) for f in (
                "model", "target", "noisespec", "n_grid", "eta_grid",
                "replications", "seed", "lambda_const", "covspec", "mode",
                "max_iters", "tol")},
            **overrides,
        })
    records = run_experiment(spec, threads=args.threads)
    _write_outputs(records, args.out)
    print(f"wrote {len(records)} records to {args.out}")
    return EXIT_OK


def cmd_summarize(args) -> int:
    records = read_records_csv(args.infile)
    emit_csv(summarize(records), args.out)
    print(f"wrote summary to {args.out}")
    return EXIT_OK


def _parse_series(series: str) -> dict:
    out = {}
    if not series:
        return out
    for part in series.split(","):
        key, _, val = part.partition("=")
        key = key.strip()
        if key not in ("method", "eta1", "eta2"):
            raise ValueError(f"unknown series key {key!r} (use method/eta1/eta2)")
        out[key] = val.strip()
    return out


def cmd_slope(args) -> int:
    records = read_records_csv(args.infile)
    filt = _parse_series(args.series or "")
    method = filt.get("method", "robust")
    eta1 = float(filt.get("eta1", records[0].eta1 if records else 0.0))
    eta2 = float(filt.get("eta2", eta1))
    ns, means, _ = mean_errors_by_n(records, eta1, eta2, method)
    slope = fit_loglog_slope(ns, means)
    print(f"series method={method} eta1={eta1:g} eta2={eta2:g}: "
          f"slope={slope:.6f} over {len(ns)} points")
    return EXIT_OK


def cmd_images(args) -> int:
    noise = (DistSpec(kind="t_product_noise", nu=3.0)
             if args.noise == "t_product"
             else DistSpec(kind="t_column_noise", nu=2.1))
    spec = ExperimentSpec(
        model="matrix_response",
        target=TargetSpec(kind="binary_images", d1=43, d2=53, s=4,
                          path=args.fixtures),
        noisespec=noise,
        n_grid=(args.n,),
        eta_grid=(0.0,),
        replications=args.reps,
        seed=args.seed,
    )
    records = run_experiment(spec, threads=args.threads)
    _write_outputs(records, args.out)
    for row in summarize(records):
        print(f"{row['method']:>8}: total err {row['formatted']} "
              f"({row['count']} replications, {row['failures']} failures)")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lrquant",
        description="Monte-Carlo harness for robust low-rank estimation "
                    "under quantization and heavy tails",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a sweep from a TOML spec file")
    p_run.add_argument("--spec", required=True, help="spec file path")
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.add_argument("--seed", type=int, default=None, help="override spec seed")
    p_run.add_argument("--reps", type=int, default=None,
                       help="override spec replications")
    p_run.add_argument("--threads", type=int, default=1, help="worker threads")
    p_run.set_defaults(func=cmd_run)

    p_sum = sub.add_parser("summarize", help="summarize a records.csv")
    p_sum.add_argument("--in", dest="infile", required=True)
    p_sum.add_argument("--out", required=True)
    p_sum.set_defaults(func=cmd_summarize)

    p_slope = sub.add_parser("slope", help="log-log slope of one series")
    p_slope.add_argument("--in", dest="infile", required=True)
    p_slope.add_argument("--series", default="",
                         help="filters, e.g. 'method=robust,eta1=0.4'")
    p_slope.set_defaults(func=cmd_slope)

    p_img = sub.add_parser("images", help="0/1 image recovery comparison")
    p_img.add_argument("--fixtures", default=None,
                       help="image fixtures path (default: bundled glyphs)")
    p_img.add_argument("--n", type=int, default=500, help="sample size")
    p_img.add_argument("--reps", type=int, default=20)
    p_img.add_argument("--seed", type=int, default=0)
    p_img.add_argument("--noise", choices=("t_product", "t_column"),
                       default="t_product")
    p_img.add_argument("--out", default="images_out")
    p_img.add_argument("--threads", type=int, default=1)
    p_img.set_defaults(func=cmd_images)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, KeyError) as exc:
        print(f"spec error: {exc}", file=sys.stderr)
        return EXIT_SPEC_ERROR
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO_ERROR


if __name__ == "__main__":
    sys.exit(main())
