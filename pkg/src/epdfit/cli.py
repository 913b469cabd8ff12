"""Command-line interface: fitting, tuning, regression and curve emission.

Every command writes one machine-readable document to standard output
(JSON by default, CSV on request) echoing its inputs, the results, and
solver diagnostics.  Failures produce a structured error document and a
nonzero exit code.
"""

from __future__ import annotations

import json
import sys

import click
import numpy as np

from . import __version__
from .asymptotics import ges, model_jkxi, sandwich_variance
from .bregman import DomainError, ParameterError, Triplet
from .curves import emit_curve
from .datasets import DatasetError, load_dataset
from .estimation import EstimationError, Sample, fit_mepde, fit_mle
from .models import get_model
from .quadrature import IntegrationError
from .regression import (
    RegressionError, RegressionProblem, fit_regression_mepde, ols_fit,
    tune_regression_wj,
)
from .tuning import TuneConfig, TuningError, tune_wj

_HANDLED = (DatasetError, DomainError, EstimationError, IntegrationError,
            ParameterError, RegressionError, TuningError, ValueError)

KL_TRIPLET = Triplet(0.0, 0.0, 0.0)


def _emit(doc: dict, fmt: str) -> None:
    if fmt == "json":
        click.echo(json.dumps(doc, indent=2, default=_jsonify))
        return
    # CSV: tables become header + rows; everything else key,value pairs
    if "table" in doc.get("results", {}):
        tbl = doc["results"]["table"]
        click.echo(",".join(tbl["columns"]))
        for row in tbl["rows"]:
            click.echo(",".join(repr(float(v)) for v in row))
        return
    click.echo("key,value")
    for key, val in _flatten(doc):
        click.echo(f"{key},{val}")


def _jsonify(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"not JSON serializable: {type(obj)!r}")


def _flatten(doc, prefix=""):
    items = []
    if isinstance(doc, dict):
        for k, v in doc.items():
            items.extend(_flatten(v, f"{prefix}{k}." if prefix or True else k))
    elif isinstance(doc, (list, tuple, np.ndarray)):
        for i, v in enumerate(np.asarray(doc).tolist() if isinstance(doc, np.ndarray) else doc):
            items.extend(_flatten(v, f"{prefix}{i}."))
    else:
        key = prefix[:-1] if prefix.endswith(".") else prefix
        val = repr(doc) if isinstance(doc, float) else doc
        items.append((key, val))
    return items


def _fail(fmt: str, exc: Exception) -> None:
    doc = {"error": {"type": type(exc).__name__, "message": str(exc)}}
    click.echo(json.dumps(doc, indent=2) if fmt == "json"
               else f"error.type,{type(exc).__name__}\nerror.message,{exc}")
    sys.exit(1)


def _load_sample(data: str) -> tuple[Sample, dict]:
    record = load_dataset(data)
    if record.kind != "univariate":
        raise DatasetError(f"dataset {data!r} is not univariate")
    return record.values, record.validation_status


def _load_regression(data: str, intercept: bool) -> tuple[RegressionProblem, dict]:
    record = load_dataset(data)
    if record.kind == "regression":
        problem = record.values
        if intercept and not np.all(problem.design[:, 0] == 1.0):
            problem = RegressionProblem(
                np.column_stack([np.ones(problem.n), problem.design]),
                problem.response, name=problem.name)
        return problem, record.validation_status
    sample = record.values
    if not intercept:
        raise DatasetError(
            "univariate data as regression input needs --intercept")
    problem = RegressionProblem(np.ones((sample.n, 1)), sample.observations,
                                name=record.name)
    return problem, record.validation_status


def _parse_range(text: str, label: str) -> tuple[float, float]:
    try:
        lo, hi = (float(v) for v in text.split(":"))
    except ValueError:
        raise ValueError(f"{label} must look like lo:hi, got {text!r}") from None
    return lo, hi


def _tune_config(alpha_range, beta_range, gamma_range, grid) -> TuneConfig:
    kwargs = {}
    if alpha_range:
        kwargs["alpha_range"] = _parse_range(alpha_range, "--alpha-range")
    if beta_range:
        kwargs["beta_range"] = _parse_range(beta_range, "--beta-range")
    if gamma_range:
        kwargs["gamma_range"] = _parse_range(gamma_range, "--gamma-range")
    if grid:
        try:
            sizes = tuple(int(v) for v in grid.split(","))
            assert len(sizes) == 3
        except (ValueError, AssertionError):
            raise ValueError(f"--grid must look like a,b,g, got {grid!r}") from None
        kwargs["grid_sizes"] = sizes
    return TuneConfig(**kwargs)


def _fit_doc(fit, trip=None):
    doc = {
        "theta_hat": fit.theta_hat,
        "objective": fit.objective,
        "converged": fit.converged,
    }
    if trip is not None:
        doc["triplet"] = {"alpha": trip.alpha, "beta": trip.beta,
                          "gamma": trip.gamma}
    return doc


def _tune_doc(result):
    return {
        "triplet": {"alpha": result.triplet.alpha, "beta": result.triplet.beta,
                    "gamma": result.triplet.gamma},
        "theta_hat": result.theta_hat,
        "empirical_mse": result.empirical_mse,
        "pilot": result.pilot,
    }


fmt_option = click.option("--format", "fmt", type=click.Choice(["json", "csv"]),
                          default="json", show_default=True,
                          help="Output document format.")
seed_option = click.option("--seed", type=int, default=0, show_default=True,
                           help="Seed echoed into the output; all analyses "
                                "here are deterministic.")


@click.group()
@click.version_option(__version__)
def main():
    """Robust minimum-divergence estimation for classic parametric models."""


@main.command()
@click.option("--model", "model_name", required=True,
              type=click.Choice(["normal", "exponential"]))
@click.option("--data", required=True, help="Bundled dataset name or CSV path.")
@click.option("--alpha", type=float, required=True)
@click.option("--beta", type=float, required=True)
@click.option("--gamma", type=float, required=True)
@click.option("--init", "init_text", default=None,
              help="Comma-separated starting parameters.")
@click.option("--variance", is_flag=True, help="Report the sandwich variance.")
@fmt_option
@seed_option
def fit(model_name, data, alpha, beta, gamma, init_text, variance, fmt, seed):
    """Fit the minimum-divergence estimator at one tuning triplet."""
    try:
        model = get_model(model_name)
        sample, validation = _load_sample(data)
        trip = Triplet(alpha, beta, gamma)
        init = (np.array([float(v) for v in init_text.split(",")])
                if init_text else None)
        result = fit_mepde(sample, model, trip, init=init)
        results = _fit_doc(result, trip)
        results["sigma"] = _sigma_report(model, result.theta_hat)
        if variance:
            results["variance"] = sandwich_variance(
                sample, model, result.theta_hat, trip)
        doc = {
            "command": "fit",
            "inputs": {"model": model_name, "data": data, "seed": seed,
                       "n": sample.n,
                       "triplet": {"alpha": alpha, "beta": beta, "gamma": gamma}},
            "results": results,
            "diagnostics": {
                "iterations": result.iterations,
                "ee_residual_norm": result.ee_residual_norm,
                "quadrature_err_est": _quadrature_error(
                    model, result.theta_hat, trip),
                "multiple_roots": result.multiple_roots,
                "message": result.message,
            },
            "dataset_validation": validation,
        }
        _emit(doc, fmt)
    except _HANDLED as exc:
        _fail(fmt, exc)


def _sigma_report(model, theta):
    # univariate fits report both sigma^2 and sigma when the model has scale
    if model.name == "normal":
        return float(np.sqrt(theta[1]))
    return None


def _quadrature_error(model, theta, trip):
    """Error estimate of the objective's normalization integral at theta."""
    from .estimation import _const_exp
    from .quadrature import integrate

    a, b, g = trip.as_tuple()

    def integrand(x):
        f = model.density(theta, x)
        out = (1.0 - b) * f ** (g + 1.0)
        if b > 0.0:
            out = out + b * _const_exp(f, a)
        return out

    res = integrate(integrand, model.integration_window(theta))
    return res.err_est


@main.command()
@click.option("--model", "model_name", required=True,
              type=click.Choice(["normal", "exponential"]))
@click.option("--data", required=True)
@fmt_option
@seed_option
def mle(model_name, data, fmt, seed):
    """Maximum-likelihood fit (the efficiency end of the family)."""
    try:
        model = get_model(model_name)
        sample, validation = _load_sample(data)
        result = fit_mle(sample, model)
        results = _fit_doc(result)
        results["sigma"] = _sigma_report(model, result.theta_hat)
        doc = {
            "command": "mle",
            "inputs": {"model": model_name, "data": data, "seed": seed,
                       "n": sample.n},
            "results": results,
            "diagnostics": {"iterations": result.iterations,
                            "ee_residual_norm": result.ee_residual_norm,
                            "quadrature_err_est": _quadrature_error(
                                model, result.theta_hat, KL_TRIPLET)},
            "dataset_validation": validation,
        }
        _emit(doc, fmt)
    except _HANDLED as exc:
        _fail(fmt, exc)


@main.command()
@click.option("--model", "model_name", required=True,
              type=click.Choice(["normal", "exponential"]))
@click.option("--data", required=True)
@click.option("--alpha-range", default=None)
@click.option("--beta-range", default=None)
@click.option("--gamma-range", default=None)
@click.option("--grid", default=None)
@click.option("--dpd-only", is_flag=True,
              help="Restrict the search to the beta = 0 subfamily.")
@fmt_option
@seed_option
def tune(model_name, data, alpha_range, beta_range, gamma_range, grid,
         dpd_only, fmt, seed):
    """Select the tuning triplet by minimum empirical summed MSE."""
    try:
        model = get_model(model_name)
        sample, validation = _load_sample(data)
        config = _tune_config(alpha_range, beta_range, gamma_range, grid)
        if dpd_only:
            config = TuneConfig(alpha_range=(0.0, 0.0),
                                beta_range=(0.0, 0.0),
                                gamma_range=config.gamma_range,
                                grid_sizes=(1, 1, config.grid_sizes[2]),
                                refine=config.refine,
                                pilot_gamma=config.pilot_gamma)
        result = tune_wj(sample, model, config)
        results = _tune_doc(result)
        if result.dpd_restricted is not None:
            results["dpd_restricted"] = _tune_doc(result.dpd_restricted)
        doc = {
            "command": "tune",
            "inputs": {"model": model_name, "data": data, "seed": seed,
                       "dpd_only": dpd_only},
            "results": results,
            "diagnostics": {"surface_points": len(result.surface)},
            "dataset_validation": validation,
        }
        _emit(doc, fmt)
    except _HANDLED as exc:
        _fail(fmt, exc)


@main.command()
@click.option("--data", required=True)
@click.option("--intercept", is_flag=True,
              help="Prepend an intercept column to external designs.")
@click.option("--alpha", type=float, required=True)
@click.option("--beta", type=float, required=True)
@click.option("--gamma", type=float, required=True)
@click.option("--variance", is_flag=True)
@fmt_option
@seed_option
def regress(data, intercept, alpha, beta, gamma, variance, fmt, seed):
    """Robust linear regression at one tuning triplet."""
    try:
        problem, validation = _load_regression(data, intercept)
        trip = Triplet(alpha, beta, gamma)
        result = fit_regression_mepde(problem, trip)
        eta_ols, s2_ols = ols_fit(problem)
        results = {
            "eta_hat": result.eta_hat,
            "sigma2_hat": result.sigma2_hat,
            "converged": result.converged,
            "objective": result.objective,
            "ols": {"eta": eta_ols, "sigma2": s2_ols},
            "triplet": {"alpha": alpha, "beta": beta, "gamma": gamma},
        }
        if variance:
            results["variance"] = result.variance
        doc = {
            "command": "regress",
            "inputs": {"data": data, "seed": seed, "n": problem.n,
                       "p": problem.p},
            "results": results,
            "diagnostics": {"iterations": result.iterations,
                            "ee_residual_norm": result.ee_residual_norm,
                            "quadrature_err_est": _quadrature_error(
                                get_model("normal"),
                                np.array([0.0, result.sigma2_hat]), trip),
                            "message": result.message},
            "dataset_validation": validation,
        }
        _emit(doc, fmt)
    except _HANDLED as exc:
        _fail(fmt, exc)


@main.command("tune-regress")
@click.option("--data", required=True)
@click.option("--intercept", is_flag=True)
@click.option("--alpha-range", default=None)
@click.option("--beta-range", default=None)
@click.option("--gamma-range", default=None)
@click.option("--grid", default=None)
@fmt_option
@seed_option
def tune_regress(data, intercept, alpha_range, beta_range, gamma_range, grid,
                 fmt, seed):
    """Tuning-triplet selection for robust regression."""
    try:
        problem, validation = _load_regression(data, intercept)
        config = _tune_config(alpha_range, beta_range, gamma_range, grid)
        result = tune_regression_wj(problem, config)
        results = _tune_doc(result)
        if result.dpd_restricted is not None:
            results["dpd_restricted"] = _tune_doc(result.dpd_restricted)
        doc = {
            "command": "tune-regress",
            "inputs": {"data": data, "seed": seed},
            "results": results,
            "diagnostics": {"surface_points": len(result.surface)},
            "dataset_validation": validation,
        }
        _emit(doc, fmt)
    except _HANDLED as exc:
        _fail(fmt, exc)


@main.command()
@click.argument("kind", type=click.Choice(["influence", "weight"]))
@click.option("--model", "model_name", default="normal",
              type=click.Choice(["normal", "exponential"]))
@click.option("--theta", "theta_text", default=None,
              help="Comma-separated model parameters (influence curves).")
@click.option("--alpha", type=float, required=True)
@click.option("--beta", type=float, required=True)
@click.option("--gamma", type=float, required=True)
@click.option("--grid", "grid_text", required=True,
              help="Abscissa grid as lo:hi:n.")
@fmt_option
@seed_option
def curve(kind, model_name, theta_text, alpha, beta, gamma, grid_text,
          fmt, seed):
    """Emit a plot-ready influence or weight curve table."""
    try:
        trip = Triplet(alpha, beta, gamma)
        try:
            lo, hi, num = grid_text.split(":")
            grid = np.linspace(float(lo), float(hi), int(num))
        except ValueError:
            raise ValueError(
                f"--grid must look like lo:hi:n, got {grid_text!r}") from None
        model = get_model(model_name)
        theta = (np.array([float(v) for v in theta_text.split(",")])
                 if theta_text else None)
        columns, table = emit_curve(kind, model, theta, trip, grid)
        results = {"table": {"columns": columns, "rows": table}}
        if kind == "influence":
            g = ges(model, theta, trip)
            results["ges"] = {"value": g.value, "y_star": g.y_star,
                              "bounded": g.bounded}
        doc = {
            "command": "curve",
            "inputs": {"kind": kind, "model": model_name, "seed": seed,
                       "triplet": {"alpha": alpha, "beta": beta,
                                   "gamma": gamma}},
            "results": results,
        }
        _emit(doc, fmt)
    except _HANDLED as exc:
        _fail(fmt, exc)


@main.command("mse-surface")
@click.option("--model", "model_name", default=None,
              type=click.Choice(["normal", "exponential"]))
@click.option("--data", required=True)
@click.option("--intercept", is_flag=True)
@click.option("--alpha-range", default=None)
@click.option("--beta-range", default=None)
@click.option("--gamma-range", default=None)
@click.option("--grid", default=None)
@fmt_option
@seed_option
def mse_surface(model_name, data, intercept, alpha_range, beta_range,
                gamma_range, grid, fmt, seed):
    """Emit the empirical-MSE tuning surface without refinement."""
    try:
        base = _tune_config(alpha_range, beta_range, gamma_range, grid)
        config = TuneConfig(alpha_range=base.alpha_range,
                            beta_range=base.beta_range,
                            gamma_range=base.gamma_range,
                            grid_sizes=base.grid_sizes, refine=False,
                            pilot_gamma=base.pilot_gamma)
        record = load_dataset(data)
        if record.kind == "regression":
            problem, validation = _load_regression(data, intercept)
            result = tune_regression_wj(problem, config)
        else:
            if model_name is None:
                raise ValueError("--model is required for univariate data")
            sample, validation = _load_sample(data)
            result = tune_wj(sample, get_model(model_name), config)
        rows = np.array([[t.alpha, t.beta, t.gamma, mse]
                         for t, mse in result.surface])
        doc = {
            "command": "mse-surface",
            "inputs": {"model": model_name, "data": data, "seed": seed},
            "results": {
                "table": {"columns": ["alpha", "beta", "gamma", "mse"],
                          "rows": rows},
                "argmin": _tune_doc(result),
            },
            "dataset_validation": validation,
        }
        _emit(doc, fmt)
    except _HANDLED as exc:
        _fail(fmt, exc)


if __name__ == "__main__":
    main()
