"""Parametric model descriptors: density, score and information functions.

Two univariate families are provided: the normal location-scale model
parameterized as (mu, sigma^2), and the exponential model parameterized by
its mean.  Descriptors are immutable and every evaluation is pure.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod

import numpy as np

from .bregman import ParameterError
from .quadrature import IntegrandDomain

_SQRT_2PI = math.sqrt(2.0 * math.pi)


class Model(ABC):
    """A univariate parametric family with smooth densities."""

    name: str
    param_dim: int
    param_names: tuple[str, ...]

    @abstractmethod
    def check_params(self, theta: np.ndarray) -> np.ndarray:
        """Validate and return theta as a float array; raise ParameterError."""

    @abstractmethod
    def density(self, theta, x):
        ...

    @abstractmethod
    def log_density(self, theta, x):
        ...

    @abstractmethod
    def score(self, theta, x):
        """Gradient of the log density w.r.t. theta; shape (m, p) for array x."""

    @abstractmethod
    def information(self, theta, x):
        """Negative score gradient -d u/d theta; shape (m, p, p) for array x."""

    @abstractmethod
    def density_sup(self, theta) -> float:
        """Supremum of the density over x (guards exp(alpha*f) magnitudes)."""

    @abstractmethod
    def support(self, theta) -> IntegrandDomain:
        ...

    @abstractmethod
    def integration_window(self, theta) -> IntegrandDomain:
        """Finite interval carrying all numerically relevant mass."""

    @abstractmethod
    def to_unconstrained(self, theta) -> np.ndarray:
        ...

    @abstractmethod
    def from_unconstrained(self, z) -> np.ndarray:
        ...

    @abstractmethod
    def robust_init(self, x) -> np.ndarray:
        """Outlier-resistant starting value (median / MAD style)."""

    def closed_form_mle(self, x):
        """Exact MLE when available, else None."""
        return None


def _as_points(x):
    x = np.asarray(x, dtype=float)
    return x.reshape(-1), x.ndim == 0


class NormalLocationScale(Model):
    """N(mu, sigma^2) with theta = (mu, sigma2)."""

    name = "normal"
    param_dim = 2
    param_names = ("mu", "sigma2")

    def check_params(self, theta):
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (2,) or not np.all(np.isfinite(theta)):
            raise ParameterError(f"normal model needs finite (mu, sigma2), got {theta!r}")
        if theta[1] <= 0.0:
            raise ParameterError(f"sigma2 must be > 0, got {theta[1]}")
        return theta

    def density(self, theta, x):
        mu, s2 = self.check_params(theta)
        pts, scalar = _as_points(x)
        z2 = (pts - mu) ** 2 / s2
        out = np.exp(-0.5 * z2) / (_SQRT_2PI * math.sqrt(s2))
        return float(out[0]) if scalar else out

    def log_density(self, theta, x):
        mu, s2 = self.check_params(theta)
        pts, scalar = _as_points(x)
        out = -0.5 * (pts - mu) ** 2 / s2 - 0.5 * math.log(2.0 * math.pi * s2)
        return float(out[0]) if scalar else out

    def score(self, theta, x):
        mu, s2 = self.check_params(theta)
        pts, scalar = _as_points(x)
        d = pts - mu
        u = np.stack([d / s2, (d * d - s2) / (2.0 * s2 * s2)], axis=-1)
        return u[0] if scalar else u

    def information(self, theta, x):
        mu, s2 = self.check_params(theta)
        pts, scalar = _as_points(x)
        d = pts - mu
        i11 = np.full_like(pts, 1.0 / s2)
        i12 = d / (s2 * s2)
        i22 = d * d / s2**3 - 1.0 / (2.0 * s2 * s2)
        out = np.stack(
            [np.stack([i11, i12], axis=-1), np.stack([i12, i22], axis=-1)], axis=-2
        )
        return out[0] if scalar else out

    def density_sup(self, theta):
        _, s2 = self.check_params(theta)
        return 1.0 / (_SQRT_2PI * math.sqrt(s2))

    def support(self, theta):
        return IntegrandDomain(-np.inf, np.inf)

    def integration_window(self, theta):
        mu, s2 = self.check_params(theta)
        half = 32.0 * math.sqrt(s2)
        return IntegrandDomain(mu - half, mu + half)

    def to_unconstrained(self, theta):
        mu, s2 = self.check_params(theta)
        return np.array([mu, math.log(s2)])

    def from_unconstrained(self, z):
        z = np.asarray(z, dtype=float)
        return np.array([z[0], math.exp(min(z[1], 700.0))])

    def robust_init(self, x):
        x = np.asarray(x, dtype=float)
        med = float(np.median(x))
        mad = float(np.median(np.abs(x - med)))
        scale = 1.4826 * mad
        if scale <= 0.0:
            scale = max(float(np.std(x)), 1e-8)
        return np.array([med, scale * scale])

    def closed_form_mle(self, x):
        x = np.asarray(x, dtype=float)
        return np.array([x.mean(), x.var(ddof=0)])


class ExponentialMean(Model):
    """Exponential on [0, inf) parameterized by its mean: f(x) = e^{-x/m}/m."""

    name = "exponential"
    param_dim = 1
    param_names = ("mean",)

    def check_params(self, theta):
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (1,) or not np.isfinite(theta[0]):
            raise ParameterError(f"exponential model needs a finite (mean,), got {theta!r}")
        if theta[0] <= 0.0:
            raise ParameterError(f"mean must be > 0, got {theta[0]}")
        return theta

    def density(self, theta, x):
        (m,) = self.check_params(theta)
        pts, scalar = _as_points(x)
        out = np.where(pts >= 0.0, np.exp(-np.maximum(pts, 0.0) / m) / m, 0.0)
        return float(out[0]) if scalar else out

    def log_density(self, theta, x):
        (m,) = self.check_params(theta)
        pts, scalar = _as_points(x)
        out = np.where(pts >= 0.0, -pts / m - math.log(m), -np.inf)
        return float(out[0]) if scalar else out

    def score(self, theta, x):
        (m,) = self.check_params(theta)
        pts, scalar = _as_points(x)
        u = ((pts - m) / (m * m))[:, None]
        return u[0] if scalar else u

    def information(self, theta, x):
        (m,) = self.check_params(theta)
        pts, scalar = _as_points(x)
        i = (2.0 * pts / m**3 - 1.0 / (m * m))[:, None, None]
        return i[0] if scalar else i

    def density_sup(self, theta):
        (m,) = self.check_params(theta)
        return 1.0 / m

    def support(self, theta):
        return IntegrandDomain(0.0, np.inf)

    def integration_window(self, theta):
        (m,) = self.check_params(theta)
        return IntegrandDomain(0.0, 150.0 * m)

    def to_unconstrained(self, theta):
        (m,) = self.check_params(theta)
        return np.array([math.log(m)])

    def from_unconstrained(self, z):
        z = np.asarray(z, dtype=float)
        return np.array([math.exp(min(z[0], 700.0))])

    def robust_init(self, x):
        x = np.asarray(x, dtype=float)
        med = float(np.median(x))
        # median of Exp(mean m) is m*log 2
        return np.array([max(med / math.log(2.0), 1e-8)])

    def closed_form_mle(self, x):
        x = np.asarray(x, dtype=float)
        return np.array([x.mean()])


NORMAL = NormalLocationScale()
EXPONENTIAL = ExponentialMean()

MODELS = {m.name: m for m in (NORMAL, EXPONENTIAL)}


def get_model(name: str) -> Model:
    try:
        return MODELS[name]
    except KeyError:
        raise ParameterError(f"unknown model {name!r}; available: {sorted(MODELS)}") from None
