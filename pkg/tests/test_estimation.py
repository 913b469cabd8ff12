"""Minimum-divergence fitting against independent oracles."""

import math

import numpy as np
import pytest
from scipy.optimize import minimize

from epdfit.bregman import Triplet
from epdfit.estimation import (
    Sample, SolverConfig, estimating_residual, fit_mepde, fit_mle,
    objective_hn,
)
from epdfit.models import EXPONENTIAL, NORMAL

KL = Triplet(0.0, 0.0, 0.0)


def dpd_objective_oracle(x, mu, s2, gamma):
    """Direct power-divergence objective for the normal model.

    Uses closed-form Gaussian power integrals, no shared quadrature code:
    integral of f^{1+g} is (2 pi s2)^{-g/2} / sqrt(1+g).
    """
    c0 = (2 * math.pi * s2) ** (-gamma / 2) / math.sqrt(1 + gamma)
    f = np.exp(-0.5 * (x - mu) ** 2 / s2) / math.sqrt(2 * math.pi * s2)
    return c0 - (1 + 1 / gamma) * np.mean(f ** gamma)


def test_kl_limit_equals_closed_form_mle():
    rng = np.random.default_rng(11)
    x = rng.normal(2.0, 3.0, 80)
    tight = SolverConfig(residual_tol=1e-10, rel_tol=1e-12, abs_tol=1e-14)
    fit = fit_mepde(Sample(x), NORMAL, KL, config=tight)
    assert np.allclose(fit.theta_hat, [np.mean(x), np.var(x)],
                       rtol=1e-8, atol=1e-8)


def test_fit_mle_matches_closed_form():
    rng = np.random.default_rng(12)
    x = rng.normal(-1.0, 0.5, 60)
    fit = fit_mle(Sample(x), NORMAL)
    assert np.allclose(fit.theta_hat, NORMAL.closed_form_mle(x), rtol=1e-9)
    lam = fit_mle(Sample(np.abs(x) + 0.1), EXPONENTIAL)
    assert math.isclose(lam.theta_hat[0], np.mean(np.abs(x) + 0.1),
                        rel_tol=1e-9)


@pytest.mark.parametrize("gamma", [0.1, 0.25, 0.5, 1.0])
def test_dpd_fit_matches_independent_minimizer(gamma):
    rng = np.random.default_rng(100)
    for _ in range(5):
        x = rng.normal(0.0, 1.0, 50)
        fit = fit_mepde(Sample(x), NORMAL, Triplet(0.0, 0.0, gamma))

        def obj(z):
            return dpd_objective_oracle(x, z[0], math.exp(z[1]), gamma)

        z0 = np.array([np.mean(x), math.log(np.var(x))])
        res = minimize(obj, z0, method="Nelder-Mead",
                       options={"xatol": 1e-12, "fatol": 1e-14,
                                "maxiter": 4000})
        res = minimize(obj, res.x, method="Nelder-Mead",
                       options={"xatol": 1e-12, "fatol": 1e-14,
                                "maxiter": 4000})
        oracle = np.array([res.x[0], math.exp(res.x[1])])
        assert np.allclose(fit.theta_hat, oracle, rtol=0, atol=1e-6)


def test_estimating_residual_is_negative_objective_gradient():
    rng = np.random.default_rng(5)
    x = Sample(rng.normal(0.0, 1.0, 30))
    trip = Triplet(-1.0, 0.4, 0.3)
    theta = np.array([0.1, 1.2])
    h = 1e-6
    grad = np.zeros(2)
    for i in range(2):
        e = np.zeros(2)
        e[i] = h
        grad[i] = (objective_hn(x, NORMAL, theta + e, trip)
                   - objective_hn(x, NORMAL, theta - e, trip)) / (2 * h)
    resid = estimating_residual(x, NORMAL, theta, trip)
    assert np.allclose(grad, -resid, rtol=1e-5, atol=1e-9)


def test_residual_vanishes_at_fit():
    rng = np.random.default_rng(21)
    x = Sample(rng.normal(1.0, 2.0, 40))
    trip = Triplet(-2.0, 0.6, 0.2)
    fit = fit_mepde(x, NORMAL, trip)
    assert fit.converged
    resid = estimating_residual(x, NORMAL, fit.theta_hat, trip)
    assert np.linalg.norm(resid) < 1e-6


def test_tiny_sample_grid_oracle():
    x = Sample(np.array([-0.8, -0.1, 0.2, 0.9, 1.4]))
    trip = Triplet(-1.5, 0.5, 0.4)
    fit = fit_mepde(x, NORMAL, trip)
    mus = np.linspace(fit.theta_hat[0] - 0.5, fit.theta_hat[0] + 0.5, 81)
    s2s = np.linspace(max(0.05, fit.theta_hat[1] - 0.5),
                      fit.theta_hat[1] + 0.5, 81)
    best = min(((objective_hn(x, NORMAL, np.array([m, s]), trip), m, s)
                for m in mus for s in s2s))
    assert abs(best[1] - fit.theta_hat[0]) < 2e-2
    assert abs(best[2] - fit.theta_hat[1]) < 2e-2
    assert objective_hn(x, NORMAL, fit.theta_hat, trip) <= best[0] + 2e-3


def test_outlier_resistance_of_downweighted_fit():
    rng = np.random.default_rng(8)
    clean = rng.normal(0.0, 1.0, 60)
    dirty = np.concatenate([clean, [40.0, 45.0]])
    robust = fit_mepde(Sample(dirty), NORMAL, Triplet(-2.0, 1.0, 0.0))
    ml = fit_mle(Sample(dirty), NORMAL)
    assert abs(robust.theta_hat[0]) < 0.5
    assert ml.theta_hat[1] > 10 * robust.theta_hat[1]


def test_deterministic_refit():
    rng = np.random.default_rng(30)
    x = Sample(rng.normal(0, 1, 45))
    trip = Triplet(-1.0, 0.5, 0.5)
    f1 = fit_mepde(x, NORMAL, trip)
    f2 = fit_mepde(x, NORMAL, trip)
    assert np.array_equal(f1.theta_hat, f2.theta_hat)
    assert f1.objective == f2.objective


def test_sample_validation():
    with pytest.raises(Exception):
        Sample(np.array([]))
    with pytest.raises(Exception):
        Sample(np.array([1.0, np.nan]))
