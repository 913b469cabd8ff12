"""Data-driven tuning-parameter selection.

Follows the minimum empirical summed-MSE recipe: a robust pilot fit anchors
the bias term, the empirical plug-in sandwich supplies the variance term,
and the sum is minimized over the (alpha, beta, gamma) box by a coarse grid
scan plus local simplex refinement.  A polynomial-only companion run
(beta pinned to 0) is always reported for comparison.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .asymptotics import model_jkxi
from .bregman import Triplet
from .estimation import (
    EstimationError, FitResult, Sample, SolverConfig, fit_mepde,
)
from .models import Model
from .quadrature import IntegrationError, LOOSE_ABS_TOL, LOOSE_REL_TOL

# mse values closer than this are treated as ties and broken toward the
# most efficient triplet (smaller gamma, then beta, then |alpha|)
TIE_TOL = 1e-10

# solver used inside the tuning scan: warm starts make multistart wasteful
SCAN_SOLVER = SolverConfig(multistart_gamma=math.inf, multistart_beta=math.inf,
                           max_iter=800)


@dataclass(frozen=True)
class TuneConfig:
    alpha_range: tuple[float, float] = (-50.0, 2.0)
    beta_range: tuple[float, float] = (0.0, 1.0)
    gamma_range: tuple[float, float] = (0.0, 1.0)
    grid_sizes: tuple[int, int, int] = (13, 6, 11)
    refine: bool = True
    refine_top: int = 3
    pilot_gamma: float = 0.5

    def __post_init__(self):
        for lo, hi in (self.alpha_range, self.beta_range, self.gamma_range):
            if not lo <= hi:
                raise ValueError("tuning ranges must be non-empty")
        if self.pilot_gamma <= 0.0:
            raise ValueError("pilot_gamma must be > 0")


@dataclass
class TuneResult:
    triplet: Triplet
    theta_hat: np.ndarray
    empirical_mse: float
    surface: list[tuple[Triplet, float]]
    pilot: np.ndarray
    dpd_restricted: "TuneResult | None" = None


class TuningError(RuntimeError):
    """Every grid cell degenerate: no usable tuning surface."""


def pilot_estimate(sample: Sample, model: Model, pilot_gamma: float = 0.5,
                   config: SolverConfig | None = None) -> np.ndarray:
    """Robust pilot: the beta=0 fit at the pilot power (default 0.5)."""
    fit = fit_mepde(sample, model, Triplet(0.0, 0.0, pilot_gamma),
                    config=config or SolverConfig())
    if not fit.converged:
        raise EstimationError(f"pilot fit did not converge: {fit.message}")
    return fit.theta_hat


def empirical_mse(sample: Sample, model: Model, trip: Triplet, pilot,
                  fit: FitResult | None = None,
                  solver: SolverConfig = SCAN_SOLVER) -> float:
    """Empirical summed MSE of the fit at one triplet around the pilot.

    The variance term plugs the fitted parameter into the model-based
    sandwich matrices; the bias term is the squared distance to the pilot.
    """
    mse, _ = _empirical_mse_fit(sample, model, trip, pilot, fit, solver)
    return mse


def _empirical_mse_fit(sample, model, trip, pilot, fit=None,
                       solver: SolverConfig = SCAN_SOLVER, init=None):
    pilot = np.asarray(pilot, dtype=float)
    try:
        if fit is None:
            fit = fit_mepde(sample, model, trip, init=init, config=solver)
        mats = model_jkxi(model, fit.theta_hat, trip,
                          rel_tol=LOOSE_REL_TOL, abs_tol=LOOSE_ABS_TOL)
        if mats.degenerate:
            return math.inf, fit
        var_term = float(np.trace(mats.variance)) / sample.n
        bias = fit.theta_hat - pilot
        return var_term + float(bias @ bias), fit
    except (EstimationError, IntegrationError):
        return math.inf, fit


# ---------------------------------------------------------------------------
# generic grid scan + simplex refinement over the triplet box
# ---------------------------------------------------------------------------

def _tie_key(trip: Triplet):
    return (trip.gamma, trip.beta, abs(trip.alpha))


def _grid(rng, size):
    lo, hi = rng
    if size <= 1 or lo == hi:
        return np.array([lo])
    return np.linspace(lo, hi, size)


def scan_and_refine(evaluate, config: TuneConfig, beta_fixed: float | None = None):
    """Minimize an mse function over the triplet box.

    ``evaluate(trip, warm)`` returns (mse, state); ``state`` (e.g. the fitted
    parameter) is threaded to neighboring evaluations as the warm start.
    Returns (best_triplet, best_mse, best_state, surface).
    """
    alphas = _grid(config.alpha_range, config.grid_sizes[0])
    betas = np.array([beta_fixed]) if beta_fixed is not None \
        else _grid(config.beta_range, config.grid_sizes[1])
    gammas = _grid(config.gamma_range, config.grid_sizes[2])

    surface = []
    cells = []  # (mse, trip, state)
    warm = None
    dpd_cache = {}
    for b in betas:
        for g in gammas:
            for a in alphas:
                trip = Triplet(float(a), float(b), float(g))
                if b == 0.0:
                    # alpha is inert in the polynomial-only family
                    if g in dpd_cache:
                        mse, state = dpd_cache[g]
                    else:
                        mse, state = evaluate(trip, warm)
                        dpd_cache[g] = (mse, state)
                else:
                    mse, state = evaluate(trip, warm)
                if state is not None:
                    warm = state
                surface.append((trip, mse))
                cells.append((mse, trip, state))

    finite = [c for c in cells if math.isfinite(c[0])]
    if not finite:
        raise TuningError("all tuning grid cells were degenerate")
    finite.sort(key=lambda c: (c[0], _tie_key(c[1])))

    best_mse, best_trip, best_state = finite[0]
    if config.refine:
        lo = np.array([config.alpha_range[0], config.beta_range[0], config.gamma_range[0]])
        hi = np.array([config.alpha_range[1], config.beta_range[1], config.gamma_range[1]])
        if beta_fixed is not None:
            lo[1] = hi[1] = beta_fixed
        for _, cell_trip, cell_state in finite[: config.refine_top]:
            state_box = {"state": cell_state}

            def mse_at(v):
                v = np.clip(v, lo, hi)
                trip = Triplet(float(v[0]), float(v[1]), float(v[2]))
                mse, st = evaluate(trip, state_box["state"])
                if st is not None:
                    state_box["state"] = st
                surface.append((trip, mse))
                return mse if math.isfinite(mse) else 1e30

            x0 = np.array(cell_trip.as_tuple())
            res = optimize.minimize(
                mse_at, x0, method="Nelder-Mead",
                options={"maxiter": 120, "xatol": 1e-4, "fatol": 1e-12},
            )
            v = np.clip(res.x, lo, hi)
            trip = Triplet(float(v[0]), float(v[1]), float(v[2]))
            mse, st = evaluate(trip, state_box["state"])
            surface.append((trip, mse))
            better = mse < best_mse - TIE_TOL or (
                abs(mse - best_mse) <= TIE_TOL and _tie_key(trip) < _tie_key(best_trip)
            )
            if math.isfinite(mse) and better:
                best_mse, best_trip, best_state = mse, trip, st

    return best_trip, best_mse, best_state, surface


def tune_wj(sample: Sample, model: Model,
            config: TuneConfig = TuneConfig(),
            solver: SolverConfig = SCAN_SOLVER) -> TuneResult:
    """Select the tuning triplet minimizing the empirical summed MSE.

    The returned result carries the full surface and a companion run
    restricted to the polynomial (beta = 0) subfamily; the unrestricted
    optimum never exceeds the restricted one.
    """
    pilot = pilot_estimate(sample, model, config.pilot_gamma)

    def evaluate(trip, warm):
        mse, fit = _empirical_mse_fit(sample, model, trip, pilot,
                                      solver=solver, init=warm)
        theta = fit.theta_hat if fit is not None and fit.converged else None
        return mse, theta

    trip_r, mse_r, theta_r, surface_r = scan_and_refine(evaluate, config, beta_fixed=0.0)
    restricted = TuneResult(_canonical(trip_r), np.asarray(theta_r), mse_r,
                            surface_r, pilot)

    trip_u, mse_u, theta_u, surface_u = scan_and_refine(evaluate, config)
    if mse_r < mse_u:
        # the restricted optimum lives in the unrestricted family too
        trip_u, mse_u, theta_u = trip_r, mse_r, theta_r
    result = TuneResult(_canonical(trip_u), np.asarray(theta_u), mse_u,
                        surface_u, pilot, dpd_restricted=restricted)
    return result


def _canonical(trip: Triplet) -> Triplet:
    # alpha is inert when beta = 0; report the canonical representative
    if trip.beta == 0.0 and trip.alpha != 0.0:
        return Triplet(0.0, 0.0, trip.gamma)
    return trip
