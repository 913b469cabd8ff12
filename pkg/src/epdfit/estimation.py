"""Minimum exponential-polynomial divergence fitting for IID samples.

The empirical objective is the sample mean of a per-observation term
V_theta(x) whose constant part is a single model integral per theta.  The
fitted parameter minimizes that objective and zeroes the M-estimating
equation built from the weighted score.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .bregman import ALPHA_LIMIT, EXP_CLIP, GAMMA_LIMIT, KL, Triplet, exp_clipped, weight
from .models import Model
from .quadrature import LOOSE_ABS_TOL, LOOSE_REL_TOL, IntegrationError, integrate


class EstimationError(RuntimeError):
    """Quadrature failure or other unrecoverable estimation problem."""


@dataclass(frozen=True)
class Sample:
    """An IID univariate sample."""

    observations: np.ndarray
    name: str = ""
    provenance: str = ""

    def __post_init__(self):
        obs = np.asarray(self.observations, dtype=float)
        if obs.ndim != 1 or obs.size < 1 or not np.all(np.isfinite(obs)):
            raise ValueError("observations must be a finite 1-d array")
        object.__setattr__(self, "observations", obs)

    @property
    def n(self) -> int:
        return self.observations.size


@dataclass
class FitResult:
    theta_hat: np.ndarray
    objective: float
    ee_residual_norm: float
    converged: bool
    iterations: int
    variance: np.ndarray | None = None
    multiple_roots: bool = False
    message: str = ""


@dataclass(frozen=True)
class SolverConfig:
    max_iter: int = 2000
    xatol_rel: float = 1e-9
    residual_tol: float = 1e-7
    # multistart kicks in for strongly robust triplets where the objective
    # can be multimodal under heavy contamination
    multistart_gamma: float = 0.3
    multistart_beta: float = 0.5
    n_starts: int = 5
    rel_tol: float = LOOSE_REL_TOL
    abs_tol: float = LOOSE_ABS_TOL


DEFAULT_SOLVER = SolverConfig()


# ---------------------------------------------------------------------------
# per-observation objective pieces, with alpha->0 / gamma->0 limit branches
# ---------------------------------------------------------------------------

def _phi_exp(f, alpha):
    """(e^{a f} - 1)/a, the data-dependent exponential term."""
    if abs(alpha) < ALPHA_LIMIT:
        return f + alpha * f * f / 2.0
    return np.expm1(np.clip(alpha * f, -EXP_CLIP, EXP_CLIP)) / alpha


def _phi_poly(f, gamma):
    """((g+1) f^g - 1)/g, the data-dependent polynomial term."""
    if gamma < GAMMA_LIMIT:
        with np.errstate(divide="ignore"):
            logf = np.log(f)
        return 1.0 + logf + gamma * (logf + logf * logf / 2.0)
    return ((gamma + 1.0) * f**gamma - 1.0) / gamma


def _const_exp(f, alpha):
    """(e^{a f}(a f - 1) + 1)/a^2, integrand of the theta-only exponential term."""
    if abs(alpha) < ALPHA_LIMIT:
        return f * f / 2.0 + alpha * f**3 / 3.0
    af = np.clip(alpha * f, -EXP_CLIP, EXP_CLIP)
    return (np.exp(af) * (af - 1.0) + 1.0) / (alpha * alpha)


def objective_constant(model: Model, theta, trip: Triplet,
                       rel_tol=LOOSE_REL_TOL, abs_tol=LOOSE_ABS_TOL) -> float:
    """Theta-dependent constant of V_theta: one integral over the support."""
    theta = model.check_params(theta)
    a, b, g = trip.as_tuple()

    def integrand(x):
        f = model.density(theta, x)
        out = 0.0
        if b > 0.0:
            out = out + b * _const_exp(f, a)
        if b < 1.0:
            out = out + (1.0 - b) * f ** (g + 1.0)
        return out

    res = integrate(integrand, model.integration_window(theta), rel_tol, abs_tol)
    if not res.converged:
        raise EstimationError(
            f"objective constant integral did not converge (err={res.err_est:.2e})"
        )
    return float(res.value)


def v_theta(model: Model, theta, trip: Triplet, x, constant: float | None = None):
    """Per-observation objective term V_theta(x)."""
    theta = model.check_params(theta)
    a, b, g = trip.as_tuple()
    if constant is None:
        constant = objective_constant(model, theta, trip)
    f = model.density(theta, x)
    out = constant
    if b > 0.0:
        out = out - b * _phi_exp(f, a)
    if b < 1.0:
        out = out - (1.0 - b) * _phi_poly(f, g)
    return out


def objective_hn(sample: Sample, model: Model, theta, trip: Triplet,
                 rel_tol=LOOSE_REL_TOL, abs_tol=LOOSE_ABS_TOL) -> float:
    """Empirical objective: mean of V_theta over the observations."""
    const = objective_constant(model, theta, trip, rel_tol, abs_tol)
    vals = v_theta(model, theta, trip, sample.observations, constant=const)
    return float(np.mean(vals))


def score_weight_terms(model: Model, theta, trip: Triplet, x):
    """T_theta(x) = u_theta(x) * w(f_theta(x)): the weighted score, shape (m, p)."""
    f = model.density(theta, x)
    u = model.score(theta, x)
    w = weight(f, trip)
    return np.atleast_2d(u) * np.asarray(w, dtype=float).reshape(-1, 1)


def expected_weighted_score(model: Model, theta, trip: Triplet,
                            rel_tol=LOOSE_REL_TOL, abs_tol=LOOSE_ABS_TOL) -> np.ndarray:
    """E_{f_theta} T_theta(X) = integral of u * w(f) * f over the support."""
    theta = model.check_params(theta)

    def integrand(x):
        f = model.density(theta, x)
        u = model.score(theta, x)
        return u * (weight(f, trip) * f).reshape(-1, 1)

    res = integrate(integrand, model.integration_window(theta), rel_tol, abs_tol)
    if not res.converged:
        raise EstimationError(
            f"weighted-score integral did not converge (err={res.err_est:.2e})"
        )
    return np.atleast_1d(res.value)


def estimating_residual(sample: Sample, model: Model, theta, trip: Triplet,
                        rel_tol=LOOSE_REL_TOL, abs_tol=LOOSE_ABS_TOL) -> np.ndarray:
    """Mean estimating-equation value (1/n) sum_i [T(X_i) - E_f T]; zero at the fit."""
    t_bar = score_weight_terms(model, theta, trip, sample.observations).mean(axis=0)
    return t_bar - expected_weighted_score(model, theta, trip, rel_tol, abs_tol)


# ---------------------------------------------------------------------------
# solver
# ---------------------------------------------------------------------------

def _starting_points(sample, model, init, trip, config):
    z0 = model.to_unconstrained(model.robust_init(sample.observations)
                                if init is None else np.asarray(init, dtype=float))
    multistart = trip.gamma >= config.multistart_gamma or trip.beta >= config.multistart_beta
    starts = [z0]
    if multistart:
        mle = model.closed_form_mle(sample.observations)
        if mle is not None and np.all(np.isfinite(mle)):
            try:
                starts.append(model.to_unconstrained(mle))
            except Exception:
                pass
        delta = np.maximum(0.5, 0.5 * np.abs(z0))
        patterns = [np.ones_like(z0), -np.ones_like(z0)]
        if z0.size > 1:
            alt = np.array([(-1.0) ** k for k in range(z0.size)])
            patterns += [alt, -alt]
        for pat in patterns:
            if len(starts) >= config.n_starts:
                break
            starts.append(z0 + delta * pat)
    return starts


def fit_mepde(sample: Sample, model: Model, trip: Triplet,
              init=None, config: SolverConfig = DEFAULT_SOLVER) -> FitResult:
    """Fit the minimum-EPD estimator for one tuning triplet.

    Derivative-free simplex minimization of the empirical objective (with
    deterministic multistart for strongly robust triplets), followed by
    root-polishing of the estimating equation.
    """
    if sample.n < model.param_dim + (1 if model.param_dim > 1 else 0):
        raise ValueError(f"need at least {model.param_dim + 1} observations")

    def obj_z(z):
        try:
            theta = model.from_unconstrained(z)
            return objective_hn(sample, model, theta, trip,
                                config.rel_tol, config.abs_tol)
        except (EstimationError, IntegrationError, FloatingPointError):
            return np.inf

    candidates = []
    total_iters = 0
    for z0 in _starting_points(sample, model, init, trip, config):
        scale = np.maximum(np.abs(z0), 1.0)
        res = optimize.minimize(
            obj_z, z0, method="Nelder-Mead",
            options={
                "maxiter": config.max_iter,
                "xatol": config.xatol_rel * float(np.max(scale)),
                "fatol": 1e-14,
            },
        )
        total_iters += res.nit
        if np.isfinite(res.fun):
            candidates.append((float(res.fun), res.x, bool(res.success)))

    if not candidates:
        raise EstimationError("all starting points failed to produce a finite objective")

    candidates.sort(key=lambda c: c[0])
    best_obj, best_z, nm_ok = candidates[0]
    best_theta = model.from_unconstrained(best_z)
    multiple = any(
        np.max(np.abs(model.from_unconstrained(z) - best_theta)
               / np.maximum(np.abs(best_theta), 1e-8)) > 1e-3
        for _, z, _ in candidates[1:]
    )

    # polish: drive the estimating equation to a root from the simplex optimum
    def res_z(z):
        try:
            return estimating_residual(sample, model, model.from_unconstrained(z),
                                       trip, config.rel_tol, config.abs_tol)
        except (EstimationError, IntegrationError):
            return np.full(model.param_dim, 1e6)

    polished = optimize.root(res_z, best_z, method="hybr", options={"xtol": 1e-12})
    final_z = best_z
    if polished.success and np.all(np.isfinite(polished.x)):
        cand_obj = obj_z(polished.x)
        if cand_obj <= best_obj + 1e-9 * (1.0 + abs(best_obj)):
            final_z = polished.x
            best_obj = cand_obj

    theta_hat = model.from_unconstrained(final_z)
    resid = estimating_residual(sample, model, theta_hat, trip,
                                config.rel_tol, config.abs_tol)
    resid_norm = float(np.linalg.norm(resid))
    converged = resid_norm <= config.residual_tol and np.isfinite(best_obj)

    return FitResult(
        theta_hat=theta_hat,
        objective=float(best_obj),
        ee_residual_norm=resid_norm,
        converged=converged,
        iterations=total_iters,
        multiple_roots=multiple,
        message="" if converged else
        f"estimating-equation residual {resid_norm:.3e} above tolerance",
    )


def fit_mle(sample: Sample, model: Model,
            config: SolverConfig = DEFAULT_SOLVER) -> FitResult:
    """Maximum likelihood as the beta=0, gamma->0 member of the family."""
    closed = model.closed_form_mle(sample.observations)
    if closed is not None:
        theta = model.check_params(closed)
        obj = objective_hn(sample, model, theta, KL, config.rel_tol, config.abs_tol)
        resid = estimating_residual(sample, model, theta, KL,
                                    config.rel_tol, config.abs_tol)
        resid_norm = float(np.linalg.norm(resid))
        return FitResult(theta_hat=theta, objective=obj,
                         ee_residual_norm=resid_norm,
                         converged=resid_norm <= config.residual_tol,
                         iterations=0)
    return fit_mepde(sample, model, KL, init=None, config=config)
