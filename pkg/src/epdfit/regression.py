"""Robust linear regression with normal errors via the divergence family.

Observations are independent but non-homogeneous: Y_i ~ N(x_i' eta, sigma^2)
with a fixed design.  The per-observation objective shares the IID machinery
(every model integral is shift-invariant, so one integral serves all i); the
estimating equations are solved by alternating a weighted-least-squares step
for eta with a scalar root-find for sigma^2, then polishing the full system.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .bregman import EXP_CLIP, Triplet, weight
from .estimation import (
    EstimationError, SolverConfig, _phi_exp, _phi_poly, objective_constant,
)
from .models import NORMAL
from .quadrature import (
    IntegrandDomain, IntegrationError, LOOSE_ABS_TOL, LOOSE_REL_TOL, integrate,
)

_SQRT_2PI = math.sqrt(2.0 * math.pi)


class RegressionError(RuntimeError):
    """Rank deficiency or non-convergence in the regression solver."""


@dataclass(frozen=True)
class RegressionProblem:
    """A fixed-design regression dataset; design includes any intercept column."""

    design: np.ndarray
    response: np.ndarray
    name: str = ""

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.design, dtype=float))
        y = np.asarray(self.response, dtype=float)
        if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.size:
            raise ValueError("design must be n x p with a length-n response")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise ValueError("design and response must be finite")
        n, p = X.shape
        if n <= p:
            raise ValueError(f"need more observations than coefficients ({n} <= {p})")
        if np.linalg.matrix_rank(X) < p:
            raise ValueError("design matrix is rank deficient")
        object.__setattr__(self, "design", X)
        object.__setattr__(self, "response", y)

    @property
    def n(self) -> int:
        return self.design.shape[0]

    @property
    def p(self) -> int:
        return self.design.shape[1]


@dataclass
class RegressionFit:
    eta_hat: np.ndarray
    sigma2_hat: float
    psi_n: np.ndarray
    omega_n: np.ndarray
    variance: np.ndarray
    converged: bool
    objective: float = math.nan
    ee_residual_norm: float = math.nan
    iterations: int = 0
    message: str = ""

    @property
    def theta_hat(self) -> np.ndarray:
        return np.append(self.eta_hat, self.sigma2_hat)


def _phi0(r, sigma2):
    """Centered normal density values at residuals r."""
    return np.exp(-0.5 * r * r / sigma2) / (_SQRT_2PI * math.sqrt(sigma2))


def _weight_over_f(f, trip: Triplet):
    """w(f)/f = beta f e^{alpha f} + (1-beta)(1+gamma) f^gamma, vectorized."""
    a, b, g = trip.as_tuple()
    out = np.zeros_like(f)
    if b > 0.0:
        # evaluate f e^{af} in log space so the clip saturates instead of
        # overflowing for large positive exponents
        with np.errstate(divide="ignore"):
            log_term = np.where(f > 0.0, np.log(f), -np.inf) + a * f
        out = out + b * np.exp(np.clip(log_term, -EXP_CLIP, EXP_CLIP))
    if b < 1.0:
        out = out + (1.0 - b) * (g + 1.0) * f**g
    return out


def ols_fit(problem: RegressionProblem):
    """Classical least squares: coefficients and the (n - p)-denominator sigma^2."""
    X, y = problem.design, problem.response
    eta, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ eta
    sigma2 = float(resid @ resid) / (problem.n - problem.p)
    return eta, sigma2


def lad_init(problem: RegressionProblem, iters: int = 50):
    """Least-absolute-deviation start via iteratively reweighted least squares,
    with sigma^2 from the normalized MAD of its residuals."""
    X, y = problem.design, problem.response
    eta, _ = ols_fit(problem)
    for _ in range(iters):
        r = y - X @ eta
        w = 1.0 / np.maximum(np.abs(r), 1e-8)
        Xw = X * w[:, None]
        eta_new = np.linalg.solve(X.T @ Xw, Xw.T @ y)
        if np.max(np.abs(eta_new - eta)) <= 1e-10 * (1.0 + np.max(np.abs(eta))):
            eta = eta_new
            break
        eta = eta_new
    r = y - X @ eta
    mad = float(np.median(np.abs(r - np.median(r))))
    scale = 1.4826 * mad
    if scale <= 0.0:
        scale = max(float(np.std(r)), 1e-8)
    return eta, scale * scale


def _repeated_median_line(x, y):
    """Siegel's repeated-median slope/intercept for a single predictor."""
    n = x.size
    slopes = np.empty(n)
    for i in range(n):
        dx = x - x[i]
        keep = dx != 0.0
        slopes[i] = np.median((y[keep] - y[i]) / dx[keep]) if np.any(keep) else 0.0
    b1 = float(np.median(slopes))
    b0 = float(np.median(y - b1 * x))
    return np.array([b0, b1])


def _concentrate(problem: RegressionProblem, eta, frac: float = 0.75,
                 max_steps: int = 100):
    """Trimmed-squares concentration: refit repeatedly on the fraction of
    observations with the smallest absolute residuals.  Deterministic given
    the starting coefficients; pulls the start onto the majority structure
    even under leverage outliers."""
    X, y = problem.design, problem.response
    h = int(math.ceil(frac * problem.n))
    eta = np.asarray(eta, dtype=float)
    for _ in range(max_steps):
        r = y - X @ eta
        idx = np.argsort(np.abs(r), kind="stable")[:h]
        eta_new, *_ = np.linalg.lstsq(X[idx], y[idx], rcond=None)
        if np.max(np.abs(eta_new - eta)) < 1e-12 * (1.0 + np.max(np.abs(eta))):
            eta = eta_new
            break
        eta = eta_new
    r = y - X @ eta
    kept = np.sort(np.abs(r))[:h]
    sigma2 = max(float(np.mean(kept * kept)), 1e-12)
    return eta, sigma2


def robust_starts(problem: RegressionProblem, fast: bool = False):
    """Deterministic starting points, most robust first.

    ``fast`` returns only the trimmed-concentration seed (used inside
    tuning scans where a warm start covers the efficient branch).
    """
    X = problem.design
    starts = []
    # repeated-median seed when the model is intercept + one predictor
    cols_const = [j for j in range(problem.p)
                  if np.all(X[:, j] == X[0, j]) and X[0, j] != 0.0]
    if problem.p == 2 and len(cols_const) == 1:
        jx = 1 - cols_const[0]
        line = _repeated_median_line(X[:, jx], problem.response)
        eta_rm = np.zeros(2)
        eta_rm[cols_const[0]] = line[0] / X[0, cols_const[0]]
        eta_rm[jx] = line[1]
        starts.append(_concentrate(problem, eta_rm))
        if fast:
            return starts
    eta_lad, s2_lad = lad_init(problem)
    if not starts:
        starts.append(_concentrate(problem, eta_lad))
        if fast:
            return starts
    starts.append((eta_lad, s2_lad))
    eta_ols, s2_ols = ols_fit(problem)
    starts.append((eta_ols, s2_ols))
    return starts


def _sigma_rhs(sigma2, trip: Triplet, rel_tol, abs_tol) -> float:
    """Model-side integral of the sigma^2 estimating equation.

    integral of (y^2 - sigma^2) [beta f^2 e^{alpha f} + (1-beta)(1+gamma) f^{gamma+1}]
    against y for a centered normal; shifting y -> y - x_i'eta shows the same
    value serves every observation.
    """
    a, b, g = trip.as_tuple()
    half = 32.0 * math.sqrt(sigma2)

    def integrand(y):
        f = _phi0(y, sigma2)
        return (y * y - sigma2) * _weight_over_f(f, trip) * f

    res = integrate(integrand, IntegrandDomain(-half, half), rel_tol, abs_tol)
    if not res.converged:
        raise EstimationError("sigma^2 equation integral did not converge")
    return float(res.value)


def regression_objective(problem: RegressionProblem, eta, sigma2, trip: Triplet,
                         rel_tol=LOOSE_REL_TOL, abs_tol=LOOSE_ABS_TOL) -> float:
    """Empirical objective for the non-homogeneous family: mean of V_i(Y_i)."""
    const = objective_constant(NORMAL, np.array([0.0, sigma2]), trip,
                               rel_tol, abs_tol)
    r = problem.response - problem.design @ np.asarray(eta, dtype=float)
    f = _phi0(r, sigma2)
    a, b, g = trip.as_tuple()
    out = np.full_like(f, const)
    if b > 0.0:
        out = out - b * _phi_exp(f, a)
    if b < 1.0:
        out = out - (1.0 - b) * _phi_poly(f, g)
    return float(np.mean(out))


def regression_residual(problem: RegressionProblem, eta, sigma2, trip: Triplet,
                        rel_tol=LOOSE_REL_TOL, abs_tol=LOOSE_ABS_TOL) -> np.ndarray:
    """Mean estimating-equation vector: p weighted-orthogonality components
    for eta plus the weighted second-moment balance for sigma^2."""
    X, y = problem.design, problem.response
    eta = np.asarray(eta, dtype=float)
    r = y - X @ eta
    f = _phi0(r, sigma2)
    wf = _weight_over_f(f, trip)
    eta_part = X.T @ (r * wf) / problem.n
    lhs = float(np.mean((r * r - sigma2) * wf))
    rhs = _sigma_rhs(sigma2, trip, rel_tol, abs_tol)
    return np.append(eta_part, lhs - rhs)


def _solve_single(problem: RegressionProblem, trip: Triplet, eta, sigma2,
                  config: SolverConfig):
    """Alternating solve from one starting point; returns (eta, sigma2,
    residual_norm, iterations)."""
    X, y = problem.design, problem.response
    eta = np.asarray(eta, dtype=float).copy()
    sigma2 = float(sigma2)
    rel_tol, abs_tol = config.rel_tol, config.abs_tol

    # cheap attempt first: the full-system root finder from the raw start;
    # the alternation below only runs when that is rejected
    def full_res(z):
        if not np.all(np.isfinite(z)) or not -60.0 < z[-1] < 60.0:
            return np.full(problem.p + 1, 1e6)
        try:
            return regression_residual(problem, z[:-1], math.exp(z[-1]), trip,
                                       rel_tol, abs_tol)
        except (EstimationError, IntegrationError, ValueError,
                FloatingPointError):
            return np.full(problem.p + 1, 1e6)

    z0 = np.append(eta, math.log(sigma2))
    sol = optimize.root(full_res, z0, method="hybr", options={"xtol": 1e-12})
    if sol.success and np.all(np.isfinite(sol.x)):
        cand = sol.x
        rn = float(np.linalg.norm(full_res(cand)))
        if rn <= config.residual_tol:
            return (np.asarray(cand[:-1], dtype=float),
                    math.exp(min(cand[-1], 60.0)), rn, int(sol.nfev))

    iters = 0
    for iters in range(1, 31):
        r = y - X @ eta
        wf = _weight_over_f(_phi0(r, sigma2), trip)
        Xw = X * wf[:, None]
        try:
            eta_new = np.linalg.solve(X.T @ Xw, Xw.T @ y)
        except np.linalg.LinAlgError:
            break

        def sigma_eq(log_s2):
            s2 = math.exp(min(log_s2, 60.0))
            rr = y - X @ eta_new
            wfs = _weight_over_f(_phi0(rr, s2), trip)
            return float(np.mean((rr * rr - s2) * wfs)) - _sigma_rhs(
                s2, trip, rel_tol, abs_tol)

        try:
            lo = math.log(sigma2) - 3.0
            hi = math.log(sigma2) + 3.0
            flo, fhi = sigma_eq(lo), sigma_eq(hi)
            tries = 0
            while flo * fhi > 0.0 and tries < 10:
                lo -= 2.0
                hi += 2.0
                flo, fhi = sigma_eq(lo), sigma_eq(hi)
                tries += 1
            if flo * fhi <= 0.0:
                sigma2_new = math.exp(optimize.brentq(sigma_eq, lo, hi, xtol=1e-13))
            else:
                sigma2_new = sigma2
        except (ValueError, EstimationError, IntegrationError):
            sigma2_new = sigma2

        delta = max(float(np.max(np.abs(eta_new - eta))) / (1.0 + float(np.max(np.abs(eta)))),
                    abs(sigma2_new - sigma2) / (1.0 + sigma2))
        eta, sigma2 = eta_new, sigma2_new
        if delta < 1e-10:
            break

    # polish the full system in (eta, log sigma^2)
    z0 = np.append(eta, math.log(sigma2))
    sol = optimize.root(full_res, z0, method="hybr", options={"xtol": 1e-12})
    if sol.success and np.all(np.isfinite(sol.x)):
        cand_eta, cand_s2 = sol.x[:-1], math.exp(min(sol.x[-1], 60.0))
        obj_cand = regression_objective(problem, cand_eta, cand_s2, trip,
                                        rel_tol, abs_tol)
        obj_cur = regression_objective(problem, eta, sigma2, trip, rel_tol, abs_tol)
        if obj_cand <= obj_cur + 1e-9 * (1.0 + abs(obj_cur)):
            eta, sigma2 = cand_eta, cand_s2

    resid = regression_residual(problem, eta, sigma2, trip, rel_tol, abs_tol)
    resid_norm = float(np.linalg.norm(resid))

    if resid_norm > config.residual_tol:
        # fall back: simplex on the objective from the robust start
        def obj_z(z):
            if not np.all(np.isfinite(z)) or not -60.0 < z[-1] < 60.0:
                return np.inf
            try:
                return regression_objective(problem, z[:-1], math.exp(z[-1]),
                                            trip, rel_tol, abs_tol)
            except (EstimationError, IntegrationError, ValueError,
                    FloatingPointError):
                return np.inf

        nm = optimize.minimize(obj_z, np.append(eta, math.log(sigma2)),
                               method="Nelder-Mead",
                               options={"maxiter": 4000, "xatol": 1e-10,
                                        "fatol": 1e-14})
        iters += nm.nit
        z = nm.x
        sol = optimize.root(full_res, z, method="hybr", options={"xtol": 1e-12})
        if sol.success and np.all(np.isfinite(sol.x)):
            z = sol.x
        eta, sigma2 = z[:-1], math.exp(min(z[-1], 60.0))
        resid = regression_residual(problem, eta, sigma2, trip, rel_tol, abs_tol)
        resid_norm = float(np.linalg.norm(resid))

    return np.asarray(eta, dtype=float), float(sigma2), resid_norm, iters


def fit_regression_mepde(problem: RegressionProblem, trip: Triplet, init=None,
                         config: SolverConfig = SolverConfig(),
                         multistart=None) -> RegressionFit:
    """Joint (eta, sigma^2) fit for one tuning triplet.

    Alternates a weighted-least-squares eta-step with a scalar sigma^2
    root-find, polishing the full estimating system afterwards.  Without an
    explicit ``init`` the solve is repeated from several deterministic
    robust starting points (trimmed-squares concentration, least absolute
    deviations, least squares) and the root with the lowest objective wins;
    the objective can carry several local minima under heavy contamination.
    ``multistart`` overrides that default: True adds the robust starts even
    when ``init`` is given, False solves from ``init`` alone.
    """
    rel_tol, abs_tol = config.rel_tol, config.abs_tol
    if multistart is None:
        multistart = init is None
    starts = []
    if init is not None:
        init = np.asarray(init, dtype=float)
        if float(init[-1]) <= 0.0:
            raise ValueError("initial sigma^2 must be positive")
        starts.append((init[:-1], float(init[-1])))
    if multistart:
        starts.extend(robust_starts(problem, fast=(multistart == "fast")))
    if not starts:
        starts = robust_starts(problem)

    best = None
    iters_total = 0
    for eta0, s20 in starts:
        try:
            eta_c, s2_c, rn, its = _solve_single(problem, trip, eta0, s20, config)
        except (EstimationError, IntegrationError):
            continue
        iters_total += its
        try:
            obj = regression_objective(problem, eta_c, s2_c, trip, rel_tol, abs_tol)
        except (EstimationError, IntegrationError):
            continue
        if math.isfinite(obj) and (best is None or obj < best[0]):
            best = (obj, eta_c, s2_c, rn)
    if best is None:
        raise RegressionError("no starting point produced a finite fit")
    _, eta, sigma2, resid_norm = best

    converged = resid_norm <= config.residual_tol
    psi, omega = psi_omega_matrices(problem, sigma2, trip, rel_tol, abs_tol)
    try:
        psi_inv = np.linalg.inv(psi)
        variance = psi_inv @ omega @ psi_inv / problem.n
        variance = 0.5 * (variance + variance.T)
    except np.linalg.LinAlgError:
        variance = np.full((problem.p + 1, problem.p + 1), np.nan)

    return RegressionFit(
        eta_hat=np.asarray(eta, dtype=float),
        sigma2_hat=float(sigma2),
        psi_n=psi,
        omega_n=omega,
        variance=variance,
        converged=converged,
        objective=regression_objective(problem, eta, sigma2, trip, rel_tol, abs_tol),
        ee_residual_norm=resid_norm,
        iterations=iters_total,
        message="" if converged else
        f"estimating-equation residual {resid_norm:.3e} above tolerance",
    )


# ---------------------------------------------------------------------------
# block matrices
# ---------------------------------------------------------------------------

def omega_integrals(sigma2: float, trip: Triplet,
                    rel_tol=LOOSE_REL_TOL, abs_tol=LOOSE_ABS_TOL):
    """The four scalar integrals behind the block matrices.

    omega1, omega2 weight (y^2/sigma^4) and ((y^2-sigma^2)^2/(4 sigma^8)) by
    [beta f^2 e^{alpha f} + (1-beta)(1+gamma) f^{gamma+1}]; omega3, omega4 use
    the squared weight-over-density factor times f, with omega4 centered by
    the squared first moment of its score component.
    """
    if sigma2 <= 0.0:
        raise ValueError("sigma2 must be positive")
    half = 32.0 * math.sqrt(sigma2)
    s4 = sigma2 * sigma2

    def integrand(y):
        f = _phi0(y, sigma2)
        wf = _weight_over_f(f, trip)
        u1sq = y * y / s4
        u2 = (y * y - sigma2) / (2.0 * s4)
        cols = [
            u1sq * wf * f,            # omega1
            u2 * u2 * wf * f,         # omega2
            u1sq * wf * wf * f,       # omega3
            u2 * u2 * wf * wf * f,    # omega4 second moment
            u2 * wf * f,              # omega4 centering term
        ]
        return np.stack(cols, axis=-1)

    res = integrate(integrand, IntegrandDomain(-half, half), rel_tol, abs_tol)
    if not res.converged:
        raise EstimationError("omega integrals did not converge")
    v = np.atleast_1d(res.value)
    return float(v[0]), float(v[1]), float(v[2]), float(v[3] - v[4] * v[4])


def psi_omega_matrices(problem: RegressionProblem, sigma2: float, trip: Triplet,
                       rel_tol=LOOSE_REL_TOL, abs_tol=LOOSE_ABS_TOL):
    """Block-diagonal Psi_n and Omega_n at the model."""
    w1, w2, w3, w4 = omega_integrals(sigma2, trip, rel_tol, abs_tol)
    X = problem.design
    xtx = X.T @ X / problem.n
    p = problem.p
    psi = np.zeros((p + 1, p + 1))
    omega = np.zeros((p + 1, p + 1))
    psi[:p, :p] = w1 * xtx
    psi[p, p] = w2
    omega[:p, :p] = w3 * xtx
    omega[p, p] = w4
    return psi, omega


def general_inh_matrices(problem: RegressionProblem, trip: Triplet, theta,
                         gs="empirical",
                         rel_tol=LOOSE_REL_TOL, abs_tol=LOOSE_ABS_TOL):
    """General-g Psi_n, Omega_n and the xi_i vectors.

    ``gs`` selects the plug-in for the unknown per-observation densities:
    "empirical" uses the point mass at Y_i for each g_i-weighted integral,
    while "model" substitutes g_i = f_i(.; theta) (every correction then
    vanishes and the result matches ``psi_omega_matrices``).  Omega's
    centering vectors xi_i are always computed against the model density:
    a point mass would collapse the variance of a single observation to zero.
    """
    theta = np.asarray(theta, dtype=float)
    eta, sigma2 = theta[:-1], float(theta[-1])
    if sigma2 <= 0.0:
        raise ValueError("sigma^2 must be positive")
    X, y = problem.design, problem.response
    n, p = problem.n, problem.p
    a, b, g = trip.as_tuple()
    s4 = sigma2 * sigma2
    half = 32.0 * math.sqrt(sigma2)

    # residual-moment integrals against f needed to assemble the f-side of
    # J^(i); all are shift-invariant scalars (odd cross terms vanish)
    def f_side(rv):
        f = _phi0(rv, sigma2)
        fe = f * np.exp(np.clip(a * f, -EXP_CLIP, EXP_CLIP))
        j_f = b * f * fe + (1.0 - b) * (g + 1.0) * f ** (g + 1.0)
        u1sq = rv * rv / s4                     # x-block of u u^T (times x x^T)
        u2 = (rv * rv - sigma2) / (2.0 * s4)
        i11 = 1.0 / sigma2                      # x-block of I_i (times x x^T)
        i22 = rv * rv / sigma2**3 - 1.0 / (2.0 * s4)
        cols = []
        # at-model J pieces (j0): [u1sq, u2^2] * j_f
        cols.append(u1sq * j_f)
        cols.append(u2 * u2 * j_f)
        # f-part of the corrections: same tensor split, times f
        poly = (1.0 - b) * (g + 1.0) * f**g
        c11 = poly * (i11 - g * u1sq)
        c22 = poly * (i22 - g * u2 * u2)
        if b > 0.0:
            c11 = c11 + b * fe * (i11 - u1sq) - a * b * f * fe * u1sq
            c22 = c22 + b * fe * (i22 - u2 * u2) - a * b * f * fe * u2 * u2
        cols.append(c11 * f)
        cols.append(c22 * f)
        # model-side xi component for sigma^2 (eta components vanish by symmetry)
        wf = _weight_over_f(f, trip)
        cols.append(u2 * wf * f)
        return np.stack(cols, axis=-1)

    res = integrate(f_side, IntegrandDomain(-half, half), rel_tol, abs_tol)
    if not res.converged:
        raise EstimationError("general block-matrix integrals did not converge")
    j0_11, j0_22, cf_11, cf_22, xi_sigma = np.atleast_1d(res.value)

    xtx = X.T @ X / n
    psi = np.zeros((p + 1, p + 1))
    psi[:p, :p] = j0_11 * xtx
    psi[p, p] = j0_22

    xi_list = [np.append(np.zeros(p), xi_sigma) for _ in range(n)]

    if gs == "model":
        # corrections vanish; Omega from the closed at-model blocks
        _, omega = psi_omega_matrices(problem, sigma2, trip, rel_tol, abs_tol)
        return psi, omega, xi_list
    if gs != "empirical":
        raise ValueError("gs must be 'empirical' or 'model'")

    r = y - X @ eta
    f = _phi0(r, sigma2)
    fe = f * np.exp(np.clip(a * f, -EXP_CLIP, EXP_CLIP))
    u1 = (r / sigma2)[:, None] * X              # (n, p) eta-scores
    u2 = (r * r - sigma2) / (2.0 * s4)
    i22 = r * r / sigma2**3 - 1.0 / (2.0 * s4)
    i12 = (r / s4)[:, None] * X
    wf = _weight_over_f(f, trip)

    # g-part of the corrections, point mass at Y_i
    poly = (1.0 - b) * (g + 1.0) * f**g
    c_scalar = poly
    exp_scalar = b * fe if b > 0.0 else np.zeros_like(f)
    lin_scalar = a * b * f * fe if b > 0.0 else np.zeros_like(f)

    corr = np.zeros((p + 1, p + 1))
    omega = np.zeros((p + 1, p + 1))
    for i in range(n):
        ui = np.append(u1[i], u2[i])
        uu = np.outer(ui, ui)
        Ii = np.zeros((p + 1, p + 1))
        Ii[:p, :p] = np.outer(X[i], X[i]) / sigma2
        Ii[:p, p] = Ii[p, :p] = i12[i]
        Ii[p, p] = i22[i]
        ci = c_scalar[i] * (Ii - g * uu) + exp_scalar[i] * (Ii - uu) - lin_scalar[i] * uu
        corr += ci
        omega += wf[i] * wf[i] * uu - np.outer(xi_list[i], xi_list[i])
    corr /= n
    omega /= n

    # subtract the f-part of the corrections (block structure)
    corr_f = np.zeros((p + 1, p + 1))
    corr_f[:p, :p] = cf_11 * xtx
    corr_f[p, p] = cf_22
    psi = psi + corr - corr_f
    psi = 0.5 * (psi + psi.T)
    omega = 0.5 * (omega + omega.T)
    return psi, omega, xi_list


# ---------------------------------------------------------------------------
# tuning-parameter selection for regression
# ---------------------------------------------------------------------------

def regression_pilot(problem: RegressionProblem, pilot_gamma: float = 0.5,
                     config: SolverConfig = SolverConfig()) -> np.ndarray:
    """Robust pilot for tuning: the beta=0 regression fit at the pilot power."""
    fit = fit_regression_mepde(problem, Triplet(0.0, 0.0, pilot_gamma),
                               config=config)
    if not fit.converged:
        raise RegressionError("pilot regression fit did not converge")
    return fit.theta_hat


def regression_empirical_mse(problem: RegressionProblem, trip: Triplet, pilot,
                             fit: RegressionFit | None = None,
                             config: SolverConfig = SolverConfig()) -> float:
    """Empirical summed MSE of the regression fit at one triplet.

    Variance term from the model-based block matrices at the fitted
    parameter; bias term is the squared distance to the pilot.
    """
    mse, _ = _regression_mse_fit(problem, trip, pilot, fit=fit, config=config)
    return mse


def _regression_mse_fit(problem, trip, pilot, fit=None, warm=None,
                        config: SolverConfig = SolverConfig()):
    pilot = np.asarray(pilot, dtype=float)
    try:
        if fit is None:
            fit = fit_regression_mepde(problem, trip, init=warm,
                                       config=config, multistart="fast")
        if not fit.converged:
            return math.inf, fit
        var_term = float(np.trace(fit.variance))
        bias = fit.theta_hat - pilot
        return var_term + float(bias @ bias), fit
    except (RegressionError, EstimationError, IntegrationError,
            np.linalg.LinAlgError):
        return math.inf, fit


def tune_regression_wj(problem: RegressionProblem, config=None,
                       solver: SolverConfig = SolverConfig()):
    """Select the regression tuning triplet by minimum empirical summed MSE.

    Same scan-and-refine procedure as the IID selector, with the regression
    pilot and block-matrix variance; the polynomial-only (beta = 0)
    companion is always reported.
    """
    from .tuning import TuneConfig, TuneResult, _canonical, scan_and_refine

    if config is None:
        config = TuneConfig()
    pilot = regression_pilot(problem, config.pilot_gamma, solver)

    def evaluate(trip, warm):
        mse, fit = _regression_mse_fit(problem, trip, pilot, warm=warm,
                                       config=solver)
        theta = fit.theta_hat if fit is not None and fit.converged else None
        return mse, theta

    trip_r, mse_r, theta_r, surface_r = scan_and_refine(evaluate, config,
                                                        beta_fixed=0.0)
    restricted = TuneResult(_canonical(trip_r), np.asarray(theta_r), mse_r,
                            surface_r, pilot)
    trip_u, mse_u, theta_u, surface_u = scan_and_refine(evaluate, config)
    if mse_r < mse_u:
        trip_u, mse_u, theta_u = trip_r, mse_r, theta_r
    return TuneResult(_canonical(trip_u), np.asarray(theta_u), mse_u,
                      surface_u, pilot, dpd_restricted=restricted)
