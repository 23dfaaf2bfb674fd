"""Command-line interface: fdr fitting, standalone pi0, and simulations.

Outputs are a structured JSON report plus plot-ready CSV curves.  Floats are
serialized with shortest round-trip precision (up to 17 significant digits),
decimal point and LF line endings regardless of locale, and every file is
written to a temporary name and renamed, so failures leave no partial files.

Exit codes: 0 success, 2 input/configuration error, 3 numerical failure
(message carries the pipeline step label).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import tempfile

import numpy as np

from .betafit import smooth_pvalues
from .density import clipped_measure, eval_comparison_density_many, integrate_comparison_density
from .errors import (
    CdfdrError,
    ConfigError,
    DegenerateSampleError,
    InputError,
    InsufficientDataError,
)
from .pipeline import (
    CdfrModel,
    NullSpec,
    discoveries,
    fit_cdfdr,
    integrate_nonnull_density,
    t_to_z,
    to_pvalues,
)
from .simulate import (
    EstimatorConfig,
    MixtureNormalDesign,
    MixtureUniformDesign,
    run_replicates,
)

__all__ = ["main"]

_INPUT_ERRORS = (InputError, ConfigError, InsufficientDataError, DegenerateSampleError)


# ---------------------------------------------------------------------------
# Serialization helpers
# ---------------------------------------------------------------------------

def _fmt(x) -> str:
    """Shortest round-trip decimal representation of a float."""
    return repr(float(x))


def _jsonable(obj):
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    return obj


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(prefix=".cdfdr-", dir=directory)
    try:
        with os.fdopen(fd, "w", newline="") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_json(path: str, payload: dict) -> None:
    _atomic_write(path, json.dumps(_jsonable(payload), indent=1) + "\n")


def _write_csv(path: str, header: list[str], rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(row))
    _atomic_write(path, "\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# Input parsing
# ---------------------------------------------------------------------------

def read_input_table(path: str, column: str) -> tuple[list[str], np.ndarray]:
    """Read the id (optional) and value columns from a headered CSV.

    Every value must parse as a finite number; p-values must lie in [0, 1].
    Violations raise :class:`InputError` citing the data row number.
    """
    if column not in ("stat", "pvalue"):
        raise ConfigError(f"column must be 'stat' or 'pvalue', got {column!r}")
    try:
        handle = open(path, "r", encoding="utf-8", newline="")
    except OSError as exc:
        raise InputError(f"cannot open input file {path!r}: {exc}") from exc
    with handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise InputError(f"{path!r} is empty (header row required)")
        header = [h.strip() for h in header]
        if column not in header:
            raise InputError(
                f"{path!r} has no {column!r} column (header: {header})"
            )
        value_idx = header.index(column)
        id_idx = header.index("id") if "id" in header else None
        ids: list[str] = []
        values: list[float] = []
        for row_number, row in enumerate(reader, start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise InputError(
                    f"row {row_number}: expected {len(header)} fields, got {len(row)}"
                )
            cell = row[value_idx].strip()
            if not cell:
                raise InputError(f"row {row_number}: missing {column} value")
            try:
                value = float(cell)
            except ValueError:
                raise InputError(
                    f"row {row_number}: {column} value {cell!r} is not a number"
                )
            if not math.isfinite(value):
                raise InputError(f"row {row_number}: {column} value {cell!r} is not finite")
            if column == "pvalue" and not 0.0 <= value <= 1.0:
                raise InputError(
                    f"row {row_number}: p-value {value!r} outside [0, 1]"
                )
            ids.append(row[id_idx].strip() if id_idx is not None else str(row_number))
            values.append(value)
    if not values:
        raise InputError(f"{path!r} contains a header but no data rows")
    return ids, np.array(values)


def parse_null_spec(text: str) -> NullSpec:
    """Parse ``std-normal``, ``normal:MU,SIGMA``, or ``t:DF``."""
    if text == "std-normal":
        return NullSpec.standard_normal()
    if text.startswith("normal:"):
        parts = text[len("normal:"):].split(",")
        if len(parts) != 2:
            raise ConfigError(f"expected normal:MU,SIGMA, got {text!r}")
        try:
            mu, sigma = float(parts[0]), float(parts[1])
        except ValueError:
            raise ConfigError(f"non-numeric null parameters in {text!r}")
        return NullSpec.normal(mu, sigma)
    if text.startswith("t:"):
        try:
            df = float(text[len("t:"):])
        except ValueError:
            raise ConfigError(f"non-numeric degrees of freedom in {text!r}")
        return NullSpec.student_t(df)
    raise ConfigError(
        f"unknown null spec {text!r} (use std-normal, normal:MU,SIGMA, or t:DF)"
    )


# ---------------------------------------------------------------------------
# fdr subcommand
# ---------------------------------------------------------------------------

def _prepare_model(args) -> tuple[list[str], np.ndarray | None, np.ndarray, CdfrModel]:
    """Shared ingestion + fitting for the fdr and pi0 subcommands."""
    ids, values = read_input_table(args.input, args.column)
    mode = args.transform.replace("-", "_")
    if args.column == "pvalue":
        null_spec = NullSpec.precomputed()
        stats = None
        data = values
    else:
        null_spec = parse_null_spec(args.null)
        stats = t_to_z(values, args.df) if args.df is not None else values
        data = stats
    model = fit_cdfdr(
        data, null_spec, mode=mode,
        m_density=args.m_density, m_mdc=args.m_mdc, grid_step=args.lambda_step,
    )
    return ids, stats, values, model


def _case_table(ids, stats, model: CdfrModel) -> dict:
    u = model.pvalues
    d_hat = eval_comparison_density_many(model.cd_model, u)
    fdr = np.minimum(model.pi0 / d_hat, 1.0)
    return {
        "id": list(ids),
        "stat": None if stats is None else [float(s) for s in stats],
        "pvalue": u,
        "smooth_pvalue": model.smooth,
        "d_hat": d_hat,
        "fdr": fdr,
    }


def _curve_rows(model: CdfrModel, stats: np.ndarray | None) -> list[list[str]]:
    """Evaluation-grid rows followed by one row per observed case."""
    if stats is not None:
        t_grid = np.linspace(float(np.min(stats)), float(np.max(stats)), 401)
        t_all = np.concatenate([t_grid, stats])
        u_all = to_pvalues(t_all, model.null_spec, model.transform_mode)
        t_text = [_fmt(t) for t in t_all]
    else:
        u_grid = np.linspace(0.0, 1.0, 403)[1:-1]
        u_all = np.concatenate([u_grid, model.pvalues])
        t_text = ["" for _ in u_all]
    v_all = smooth_pvalues(u_all, model.beta_fit)
    d_all = eval_comparison_density_many(model.cd_model, u_all)
    fdr_all = np.minimum(model.pi0 / d_all, 1.0)
    return [
        [t_text[i], _fmt(u_all[i]), _fmt(v_all[i]), _fmt(d_all[i]), _fmt(fdr_all[i])]
        for i in range(u_all.size)
    ]


def _config_echo(args, keys: list[str]) -> dict:
    return {key: getattr(args, key.replace("-", "_")) for key in keys}


def cmd_fdr(args) -> int:
    ids, stats, _, model = _prepare_model(args)
    fit = model.beta_fit
    coeffs = model.cd_model.coeffs
    path = model.deviance_path
    report_stats = model.pvalues if stats is None else stats
    disc = discoveries(model, report_stats, threshold=args.fdr_threshold)
    diag_f1 = None if model.pi0 >= 1.0 else integrate_nonnull_density(model)
    report = {
        "config": _config_echo(args, [
            "input", "column", "null", "transform", "df",
            "m_density", "m_mdc", "lambda_step", "fdr_threshold",
        ]),
        "n": fit.n,
        "beta_fit": {
            "alpha": fit.alpha,
            "beta": fit.beta,
            "log_likelihood": fit.log_likelihood,
            "n": fit.n,
            "iterations": fit.iterations,
            "converged": fit.converged,
        },
        "coefficients": {
            "m": coeffs.m,
            "theta_tilde": coeffs.theta_tilde,
            "theta_hat": coeffs.theta_hat,
            "threshold": coeffs.threshold,
            "selected": coeffs.selected(),
        },
        "pi0": {
            "lambda_star": path.lambda_star,
            "pi0_hat": path.pi0_hat,
            "flat_path": path.flat,
            "n_missing": int(np.sum(path.n_lambda == 0)),
        },
        "discoveries": {
            "threshold": disc.threshold,
            "n_discoveries": disc.n_discoveries,
            "n_left": disc.n_left,
            "n_right": disc.n_right,
            "indices": disc.indices,
            "cases": [
                {
                    "index": rec.index,
                    "id": ids[rec.index],
                    "stat": rec.statistic,
                    "pvalue": rec.pvalue,
                    "fdr": rec.fdr,
                }
                for rec in disc.records
            ],
        },
        "cases": _case_table(ids, stats, model),
        "diagnostics": {
            "clipped_measure": clipped_measure(model.cd_model),
            "integral_d_hat": integrate_comparison_density(model.cd_model),
            "integral_f1": diag_f1,
        },
    }
    _write_json(args.out, report)
    _write_csv(args.curves, ["t", "u", "v", "d_hat", "fdr"], _curve_rows(model, stats))
    return 0


def cmd_pi0(args) -> int:
    _, _, _, model = _prepare_model(args)
    path = model.deviance_path
    _write_json(args.out, {"lambda_star": path.lambda_star, "pi0_hat": path.pi0_hat})
    rows = [
        [_fmt(path.lambdas[k]), _fmt(path.deviances[k]), str(int(path.n_lambda[k]))]
        for k in range(path.lambdas.size)
        if path.n_lambda[k] > 0
    ]
    _write_csv(args.curves, ["lambda", "D_lambda", "n_lambda"], rows)
    return 0


def cmd_simulate(args) -> int:
    config = EstimatorConfig(
        m_density=args.m_density, m_mdc=args.m_mdc, grid_step=args.lambda_step,
    )
    if args.design == "mixnorm":
        if args.mu is None:
            raise ConfigError("--design mixnorm requires --mu")
        design = MixtureNormalDesign(
            mu=args.mu, n=args.n, n_null=args.n_null,
            replicates=args.replicates, seed=args.seed,
            mu_redraw="once" if args.mu_redraw == "once" else "per_replicate",
        )
    else:
        if args.pi0 is None or args.a is None:
            raise ConfigError("--design mixunif requires --pi0 and --a")
        design = MixtureUniformDesign(
            pi0=args.pi0, a=args.a, n=args.n,
            replicates=args.replicates, seed=args.seed,
        )
    report = run_replicates(design, config)
    payload = {
        "design": _config_echo(args, [
            "design", "mu", "pi0", "a", "n", "n_null",
            "replicates", "seed", "mu_redraw",
        ]),
        "estimator": {
            "m_density": config.m_density,
            "m_mdc": config.m_mdc,
            "grid_step": config.grid_step,
        },
        "grid": report.grid,
        "true_fdr": report.true_fdr,
        "mean_fdr": report.mean_fdr,
        "sd_fdr": report.sd_fdr,
        "mise": report.mise,
        "tail_mise": report.tail_mise,
        "pi0_estimates": report.pi0_estimates,
        "n_replicates": report.n_replicates,
        "failed_replicates": report.failed_replicates,
    }
    _write_json(args.out, payload)
    rows = [
        [
            _fmt(report.grid[k]), _fmt(report.true_fdr[k]),
            _fmt(report.mean_fdr[k]), _fmt(report.sd_fdr[k]),
        ]
        for k in range(report.grid.size)
    ]
    _write_csv(args.curves, ["grid", "true_fdr", "mean_fdr", "sd_fdr"], rows)
    return 0


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def _add_input_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--input", required=True, help="CSV file with a header row")
    parser.add_argument("--column", choices=["stat", "pvalue"], required=True,
                        help="which column to analyze")
    parser.add_argument("--null", default="std-normal",
                        help="null model: std-normal | normal:MU,SIGMA | t:DF")
    parser.add_argument("--transform", choices=["pit", "two-sided"], default="pit",
                        help="statistic-to-p-value transform")
    parser.add_argument("--df", type=float, default=None,
                        help="convert input t statistics to z scale with this df first")
    parser.add_argument("--m-density", type=int, default=6, dest="m_density",
                        help="series length for the density estimate")
    parser.add_argument("--m-mdc", type=int, default=10, dest="m_mdc",
                        help="series length for the deviance scan")
    parser.add_argument("--lambda-step", type=float, default=0.01, dest="lambda_step",
                        help="grid step of the deviance scan over [1, 3.5]")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cdfdr",
        description="Local false discovery rate estimation via comparison density",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_fdr = sub.add_parser("fdr", help="fit the model and report discoveries")
    _add_input_flags(p_fdr)
    p_fdr.add_argument("--fdr-threshold", type=float, default=0.2, dest="fdr_threshold",
                       help="discovery threshold on the estimated fdr")
    p_fdr.add_argument("--out", required=True, help="output JSON report path")
    p_fdr.add_argument("--curves", required=True, help="output curves CSV path")
    p_fdr.set_defaults(func=cmd_fdr)

    p_pi0 = sub.add_parser("pi0", help="estimate the true-null proportion only")
    _add_input_flags(p_pi0)
    p_pi0.add_argument("--out", required=True, help="output JSON path")
    p_pi0.add_argument("--curves", required=True, help="output deviance-path CSV path")
    p_pi0.set_defaults(func=cmd_pi0)

    p_sim = sub.add_parser("simulate", help="run a seeded replicate study")
    p_sim.add_argument("--design", choices=["mixnorm", "mixunif"], required=True)
    p_sim.add_argument("--mu", type=float, default=None, help="signal mean (mixnorm)")
    p_sim.add_argument("--pi0", type=float, default=None, help="null proportion (mixunif)")
    p_sim.add_argument("--a", type=float, default=None, help="signal interval length (mixunif)")
    p_sim.add_argument("--n", type=int, default=5000, help="cases per replicate")
    p_sim.add_argument("--n-null", type=int, default=4500, dest="n_null",
                       help="null cases per replicate (mixnorm)")
    p_sim.add_argument("--replicates", type=int, default=20)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--mu-redraw", choices=["once", "per-rep"], default="once",
                       dest="mu_redraw", help="draw non-null means once or per replicate")
    p_sim.add_argument("--m-density", type=int, default=6, dest="m_density")
    p_sim.add_argument("--m-mdc", type=int, default=10, dest="m_mdc")
    p_sim.add_argument("--lambda-step", type=float, default=0.01, dest="lambda_step")
    p_sim.add_argument("--out", required=True, help="output JSON report path")
    p_sim.add_argument("--curves", required=True, help="output curves CSV path")
    p_sim.set_defaults(func=cmd_simulate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _INPUT_ERRORS as exc:
        print(f"cdfdr: input error: {exc}", file=sys.stderr)
        return 2
    except CdfdrError as exc:
        print(f"cdfdr: numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
