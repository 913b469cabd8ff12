"""Asymptotic variance machinery: J/K/xi matrices, influence functions,
gross-error sensitivity and the empirical sandwich variance estimate.

The asymptotic covariance of sqrt(n) times the estimator is J^{-1} K J^{-1},
with J the expected derivative of the estimating function and K its
covariance.  At the model the two specialize to closed integrals against
the model density; for general data densities extra correction terms
involving (g - f_theta) appear.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .bregman import EXP_CLIP, Triplet, weight
from .estimation import EstimationError, Sample, score_weight_terms
from .models import Model
from .quadrature import DEFAULT_ABS_TOL, DEFAULT_REL_TOL, IntegrandDomain, integrate

# condition number beyond which J is reported as degenerate
CONDITION_LIMIT = 1e12


@dataclass
class SandwichMatrices:
    J: np.ndarray
    K: np.ndarray
    xi: np.ndarray
    variance: np.ndarray  # J^{-1} K J^{-1}, covariance of sqrt(n)*theta_hat
    condition: float
    degenerate: bool


@dataclass
class GesResult:
    y_star: float
    value: float
    bounded: bool


def _sym(m):
    return 0.5 * (m + m.T)


def _invert_pd(J):
    """Inverse of a symmetric (near-)PD matrix with condition reporting."""
    Js = _sym(J)
    eigvals = np.linalg.eigvalsh(Js)
    lo, hi = float(eigvals[0]), float(eigvals[-1])
    cond = np.inf if lo <= 0.0 else hi / lo
    degenerate = not np.isfinite(cond) or cond > CONDITION_LIMIT
    if degenerate:
        Jinv = np.linalg.pinv(Js)
    else:
        c, low = linalg.cho_factor(Js)
        Jinv = linalg.cho_solve((c, low), np.eye(J.shape[0]))
    return Jinv, cond, degenerate


def _exp_af(f, alpha):
    return np.exp(np.clip(alpha * f, -EXP_CLIP, EXP_CLIP))


def _pack(mats):
    """Flatten a list of (m, ...) arrays into one (m, k) block for quadrature."""
    flat = [m.reshape(m.shape[0], -1) for m in mats]
    splits = np.cumsum([f.shape[1] for f in flat])[:-1]
    return np.concatenate(flat, axis=1), splits


def model_jkxi(model: Model, theta, trip: Triplet,
               rel_tol=DEFAULT_REL_TOL, abs_tol=DEFAULT_ABS_TOL) -> SandwichMatrices:
    """J, K, xi and the sandwich variance at the model (g = f_theta)."""
    theta = model.check_params(theta)
    a, b, g = trip.as_tuple()
    p = model.param_dim

    def integrand(x):
        f = model.density(theta, x)
        u = np.atleast_2d(model.score(theta, x))
        uu = u[:, :, None] * u[:, None, :]
        w = weight(f, trip)
        j_term = np.zeros_like(uu)
        if b > 0.0:
            j_term = j_term + (b * f * f * _exp_af(f, a))[:, None, None] * uu
        if b < 1.0:
            j_term = j_term + ((1.0 - b) * (g + 1.0) * f ** (g + 1.0))[:, None, None] * uu
        k_term = (w * w * f)[:, None, None] * uu
        xi_term = u * (w * f)[:, None]
        return _pack([j_term, k_term, xi_term])[0]

    res = integrate(integrand, model.integration_window(theta), rel_tol, abs_tol)
    if not res.converged:
        raise EstimationError(f"J/K/xi integrals did not converge (err={res.err_est:.2e})")
    vals = np.atleast_1d(res.value)
    J = vals[: p * p].reshape(p, p)
    K_raw = vals[p * p: 2 * p * p].reshape(p, p)
    xi = vals[2 * p * p:]
    K = _sym(K_raw - np.outer(xi, xi))
    Jinv, cond, degenerate = _invert_pd(J)
    variance = _sym(Jinv @ K @ Jinv)
    return SandwichMatrices(_sym(J), K, xi, variance, cond, degenerate)


def general_jk(g, model: Model, theta, trip: Triplet,
               rel_tol=DEFAULT_REL_TOL, abs_tol=DEFAULT_ABS_TOL) -> SandwichMatrices:
    """J, K, xi for a general data distribution.

    ``g`` is either a Sample (empirical plug-in: integrals against g become
    sample means) or a callable density over the model support.
    """
    theta = model.check_params(theta)
    a, b, gam = trip.as_tuple()
    p = model.param_dim

    def g_terms(x):
        """Integrands paired with g(x): correction pieces, K and xi."""
        f = model.density(theta, x)
        u = np.atleast_2d(model.score(theta, x))
        uu = u[:, :, None] * u[:, None, :]
        info = model.information(theta, x)
        w = weight(f, trip)
        pieces = []
        # J corrections: the (g - f) terms of the general J, g-part
        c = np.zeros_like(uu)
        if b < 1.0:
            c = c + (1.0 - b) * (gam + 1.0) * (f**gam)[:, None, None] * (info - gam * uu)
        if b > 0.0:
            fe = f * _exp_af(f, a)
            c = c + b * fe[:, None, None] * (info - uu)
            c = c - a * b * (f * fe)[:, None, None] * uu
        pieces.append(c)
        pieces.append((w * w)[:, None, None] * uu)   # K raw
        pieces.append(u * w[:, None])                # xi
        return pieces

    if isinstance(g, Sample):
        vals = g_terms(g.observations)
        corr_g = vals[0].mean(axis=0)
        k_raw = vals[1].mean(axis=0)
        xi = vals[2].mean(axis=0)
    else:
        def integrand(x):
            pieces = g_terms(x)
            gx = np.asarray(g(x), dtype=float)
            packed, _ = _pack(pieces)
            return packed * gx[:, None]
        res = integrate(integrand, model.integration_window(theta), rel_tol, abs_tol)
        if not res.converged:
            raise EstimationError("general J/K integrals did not converge")
        vals = np.atleast_1d(res.value)
        corr_g = vals[: p * p].reshape(p, p)
        k_raw = vals[p * p: 2 * p * p].reshape(p, p)
        xi = vals[2 * p * p:]

    # model-side integrals: at-model J plus the f-part of the corrections
    def f_integrand(x):
        f = model.density(theta, x)
        u = np.atleast_2d(model.score(theta, x))
        uu = u[:, :, None] * u[:, None, :]
        info = model.information(theta, x)
        j0 = np.zeros_like(uu)
        corr_f = np.zeros_like(uu)
        if b > 0.0:
            fe = f * _exp_af(f, a)
            j0 = j0 + (f * fe)[:, None, None] * uu * b
            corr_f = corr_f + b * (f * fe)[:, None, None] * (info - uu)
            corr_f = corr_f - a * b * (f * f * fe)[:, None, None] * uu
        if b < 1.0:
            j0 = j0 + ((1.0 - b) * (gam + 1.0) * f ** (gam + 1.0))[:, None, None] * uu
            corr_f = corr_f + (1.0 - b) * (gam + 1.0) * (f ** (gam + 1.0))[:, None, None] \
                * (info - gam * uu)
        return _pack([j0, corr_f])[0]

    res = integrate(f_integrand, model.integration_window(theta), rel_tol, abs_tol)
    if not res.converged:
        raise EstimationError("model-side J integrals did not converge")
    vals = np.atleast_1d(res.value)
    j0 = vals[: p * p].reshape(p, p)
    corr_f = vals[p * p:].reshape(p, p)

    J = _sym(j0 + corr_g - corr_f)
    K = _sym(k_raw - np.outer(xi, xi))
    Jinv, cond, degenerate = _invert_pd(J)
    variance = _sym(Jinv @ K @ Jinv)
    return SandwichMatrices(J, K, xi, variance, cond, degenerate)


def influence(y, model: Model, theta, trip: Triplet,
              matrices: SandwichMatrices | None = None) -> np.ndarray:
    """Influence function J^{-1}[u(y) w(f(y)) - xi] at the model; (m, p) for array y."""
    theta = model.check_params(theta)
    if matrices is None:
        matrices = model_jkxi(model, theta, trip)
    Jinv, _, degenerate = _invert_pd(matrices.J)
    if degenerate:
        raise EstimationError("J matrix is numerically singular; influence undefined")
    y_arr = np.atleast_1d(np.asarray(y, dtype=float))
    t = score_weight_terms(model, theta, trip, y_arr)
    out = (t - matrices.xi) @ Jinv.T
    return out[0] if np.ndim(y) == 0 else out


def ges(model: Model, theta, trip: Triplet, search_grid=None,
        n_grid: int = 4001) -> GesResult:
    """Gross-error sensitivity: supremum of the influence-norm over the support.

    A supremum still growing at the grid edge is flagged as unbounded
    (the maximum-likelihood case).
    """
    theta = model.check_params(theta)
    if search_grid is None:
        window = model.integration_window(theta)
        if window.lower == 0.0:  # positive-support models
            lo, hi = 0.0, float(theta[0]) * 20.0
        else:
            mu = float(theta[0])
            sd = float(np.sqrt(theta[1]))
            lo, hi = mu - 12.0 * sd, mu + 12.0 * sd
        search_grid = np.linspace(lo, hi, n_grid)
    else:
        search_grid = np.asarray(search_grid, dtype=float)

    matrices = model_jkxi(model, theta, trip)
    norms = np.linalg.norm(influence(search_grid, model, theta, trip, matrices), axis=1)
    idx = int(np.argmax(norms))
    if idx == 0 or idx == len(search_grid) - 1:
        return GesResult(float(search_grid[idx]), np.inf, bounded=False)

    # golden-section refinement inside the bracketing cells
    lo, hi = search_grid[idx - 1], search_grid[idx + 1]
    phi = (np.sqrt(5.0) - 1.0) / 2.0

    def neg_norm(yv):
        return -float(np.linalg.norm(influence(float(yv), model, theta, trip, matrices)))

    a_, b_ = lo, hi
    c_ = b_ - phi * (b_ - a_)
    d_ = a_ + phi * (b_ - a_)
    fc, fd = neg_norm(c_), neg_norm(d_)
    for _ in range(80):
        if fc < fd:
            b_, d_, fd = d_, c_, fc
            c_ = b_ - phi * (b_ - a_)
            fc = neg_norm(c_)
        else:
            a_, c_, fc = c_, d_, fd
            d_ = a_ + phi * (b_ - a_)
            fd = neg_norm(d_)
        if abs(b_ - a_) < 1e-10 * (1.0 + abs(a_)):
            break
    y_star = 0.5 * (a_ + b_)
    return GesResult(float(y_star), -neg_norm(y_star), bounded=True)


def sandwich_variance(sample: Sample, model: Model, theta_hat, trip: Triplet,
                      rel_tol=DEFAULT_REL_TOL, abs_tol=DEFAULT_ABS_TOL) -> np.ndarray:
    """Empirical sandwich estimate of Cov(theta_hat).

    J is the empirical plug-in J(G_n); the middle matrix is the sample
    covariance (n-1 denominator) of the weighted scores R_i = u(X_i) w(f(X_i)).
    The returned matrix is scaled by 1/n, so its diagonal holds squared
    standard errors of theta_hat itself.
    """
    theta_hat = model.check_params(theta_hat)
    mats = general_jk(sample, model, theta_hat, trip, rel_tol, abs_tol)
    if mats.degenerate:
        raise EstimationError("empirical J matrix is numerically singular")
    r = score_weight_terms(model, theta_hat, trip, sample.observations)
    r_centered = r - r.mean(axis=0)
    middle = r_centered.T @ r_centered / (sample.n - 1)
    Jinv, _, _ = _invert_pd(mats.J)
    return _sym(Jinv @ middle @ Jinv) / sample.n


def asymptotic_summed_mse(theta_g, theta_star, J, K, n: int) -> float:
    """Summed mean-square error: n^{-1} tr(J^{-1} K J^{-1}) + ||theta_g - theta_star||^2."""
    theta_g = np.asarray(theta_g, dtype=float)
    theta_star = np.asarray(theta_star, dtype=float)
    Jinv, cond, degenerate = _invert_pd(np.asarray(J, dtype=float))
    if degenerate:
        raise EstimationError(f"J is numerically singular (condition {cond:.2e})")
    var_term = float(np.trace(Jinv @ np.asarray(K, dtype=float) @ Jinv)) / n
    bias = theta_g - theta_star
    return var_term + float(bias @ bias)
