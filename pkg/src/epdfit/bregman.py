"""Generating function of the exponential-polynomial divergence family.

The family is indexed by a triplet (alpha, beta, gamma): a convex
combination (weight ``beta``) of an exponential generating function with
scale ``alpha`` and a power-polynomial generating function with exponent
``gamma``.  ``beta = 0`` recovers the density power divergence, ``beta = 1``
the exponential divergence, and ``beta = 0, gamma -> 0`` the
Kullback-Leibler / maximum-likelihood case.

All functions are pure, vectorized over ``t`` and safe to call concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Direct evaluation of the polynomial summand loses all precision as
# gamma -> 0 (and the exponential summand as alpha -> 0); below these
# thresholds we switch to the analytic limit plus a first-order series
# correction.
GAMMA_LIMIT = 1e-6
ALPHA_LIMIT = 1e-8

# exp arguments are clipped here: exp(700) ~ 1e304 is still finite, so the
# functions saturate instead of overflowing to inf/NaN.
EXP_CLIP = 700.0


class DomainError(ValueError):
    """Function argument outside its mathematical domain (t < 0)."""


class ParameterError(ValueError):
    """Invalid tuning triplet or model parameter."""


@dataclass(frozen=True)
class Triplet:
    """Tuning-parameter triplet (alpha, beta, gamma) of the divergence family.

    alpha is the exponential-component scale (any finite real), beta the
    mixing weight in [0, 1], gamma the power-divergence exponent (>= 0).
    """

    alpha: float
    beta: float
    gamma: float

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ParameterError(f"{name} must be finite, got {v!r}")
        if not 0.0 <= self.beta <= 1.0:
            raise ParameterError(f"beta must lie in [0, 1], got {self.beta}")
        if self.gamma < 0.0:
            raise ParameterError(f"gamma must be >= 0, got {self.gamma}")

    @property
    def is_dpd(self) -> bool:
        return self.beta == 0.0

    @property
    def is_ml(self) -> bool:
        return self.beta == 0.0 and self.gamma < GAMMA_LIMIT

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.alpha, self.beta, self.gamma)


KL = Triplet(0.0, 0.0, 0.0)


def _check_t(t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0.0):
        raise DomainError("generating function defined for t >= 0 only")
    return t


def exp_clipped(x):
    """exp with the argument clipped to +-EXP_CLIP (finite saturation)."""
    return np.exp(np.clip(x, -EXP_CLIP, EXP_CLIP))


def _xlogx(t):
    # t*log(t) with the 0*log(0) := 0 convention
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(t > 0.0, t * np.log(np.where(t > 0.0, t, 1.0)), 0.0)
    return out


def b_value(t, trip: Triplet):
    """Generating function B(t) = beta*(e^{at}-1-at)/a^2 + (1-beta)*(t^{g+1}-t)/g."""
    t = _check_t(t)
    a, b, g = trip.as_tuple()

    if b > 0.0:
        if abs(a) < ALPHA_LIMIT:
            exp_part = t * t / 2.0 + a * t**3 / 6.0
        else:
            exp_part = (np.expm1(np.clip(a * t, -EXP_CLIP, EXP_CLIP)) - a * t) / (a * a)
    else:
        exp_part = 0.0

    if b < 1.0:
        if g < GAMMA_LIMIT:
            lt = _xlogx(t)
            # (t^{g+1}-t)/g = t*log t + g*t*(log t)^2/2 + O(g^2)
            with np.errstate(divide="ignore", invalid="ignore"):
                logt = np.where(t > 0.0, np.log(np.where(t > 0.0, t, 1.0)), 0.0)
            poly_part = lt + g * t * logt * logt / 2.0
        else:
            poly_part = (t ** (g + 1.0) - t) / g
    else:
        poly_part = 0.0

    out = b * exp_part + (1.0 - b) * poly_part
    return out if out.ndim else float(out)


def b_prime(t, trip: Triplet):
    """First derivative B'(t)."""
    t = _check_t(t)
    a, b, g = trip.as_tuple()

    if b > 0.0:
        if abs(a) < ALPHA_LIMIT:
            exp_part = t + a * t * t / 2.0
        else:
            exp_part = np.expm1(np.clip(a * t, -EXP_CLIP, EXP_CLIP)) / a
    else:
        exp_part = 0.0

    if b < 1.0:
        if g < GAMMA_LIMIT:
            with np.errstate(divide="ignore"):
                logt = np.log(t)
            # ((g+1)t^g - 1)/g = 1 + log t + g*(log t + (log t)^2/2) + O(g^2)
            poly_part = 1.0 + logt + g * (logt + logt * logt / 2.0)
        else:
            poly_part = ((g + 1.0) * t**g - 1.0) / g
    else:
        poly_part = 0.0

    out = b * exp_part + (1.0 - b) * poly_part
    return out if out.ndim else float(out)


def b_second(t, trip: Triplet):
    """Second derivative B''(t) = beta*e^{at} + (1-beta)*(g+1)*t^{g-1}.

    Strictly positive for t > 0.  For gamma in [0, 1) the polynomial term is
    singular at t = 0; the boundary value is reported as +inf.
    """
    t = _check_t(t)
    a, b, g = trip.as_tuple()

    exp_part = exp_clipped(a * t) if b > 0.0 else 0.0
    if b < 1.0:
        with np.errstate(divide="ignore"):
            poly_part = (g + 1.0) * t ** (g - 1.0)
    else:
        poly_part = 0.0

    out = b * exp_part + (1.0 - b) * poly_part
    return out if out.ndim else float(out)


def weight(t, trip: Triplet):
    """Estimating-equation weight w(t) = t * B''(t).

    Equals beta*t*e^{at} + (1-beta)*(g+1)*t^g; nonnegative everywhere, and
    continuous at t = 0 (w(0) = 0 for gamma > 0).
    """
    t = _check_t(t)
    a, b, g = trip.as_tuple()

    exp_part = t * exp_clipped(a * t) if b > 0.0 else 0.0
    poly_part = (g + 1.0) * t**g if b < 1.0 else 0.0
    out = b * exp_part + (1.0 - b) * poly_part
    return out if out.ndim else float(out)
