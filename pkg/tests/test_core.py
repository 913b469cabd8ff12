"""Divergence generator, derivatives, weights, and limit branches."""

import numpy as np
import pytest

from epdfit.bregman import (
    DomainError, ParameterError, Triplet, b_prime, b_second, b_value,
    exp_clipped, weight,
)


def test_triplet_validation():
    with pytest.raises(ParameterError):
        Triplet(0.0, -0.1, 0.5)
    with pytest.raises(ParameterError):
        Triplet(0.0, 1.1, 0.5)
    with pytest.raises(ParameterError):
        Triplet(0.0, 0.5, -0.2)
    with pytest.raises(ParameterError):
        Triplet(np.nan, 0.5, 0.2)


def test_special_case_flags():
    assert Triplet(0.0, 0.0, 0.0).is_ml
    assert Triplet(0.0, 0.0, 0.3).is_dpd
    assert not Triplet(-1.0, 0.5, 0.3).is_ml


def test_polynomial_branch_closed_form():
    trip = Triplet(0.0, 0.0, 0.7)
    t = np.linspace(0.05, 3.0, 40)
    expected = (t ** 1.7 - t) / 0.7
    assert np.allclose(b_value(t, trip), expected, rtol=1e-12)


def test_exponential_branch_closed_form():
    trip = Triplet(-1.5, 1.0, 0.0)
    t = np.linspace(0.0, 3.0, 40)
    expected = (np.exp(-1.5 * t) - 1.0 + 1.5 * t) / 1.5 ** 2
    assert np.allclose(b_value(t, trip), expected, rtol=1e-12)


def test_gamma_limit_is_continuous():
    t = np.linspace(0.05, 3.0, 25)
    at_zero = b_value(t, Triplet(0.0, 0.0, 0.0))
    near_zero = b_value(t, Triplet(0.0, 0.0, 1e-5))
    assert np.allclose(at_zero, t * np.log(t), rtol=1e-10)
    assert np.allclose(at_zero, near_zero, rtol=1e-4)


def test_alpha_limit_is_continuous():
    t = np.linspace(0.0, 3.0, 25)
    at_zero = b_value(t, Triplet(0.0, 1.0, 0.3))
    near_zero = b_value(t, Triplet(1e-7, 1.0, 0.3))
    assert np.allclose(at_zero, t * t / 2.0, rtol=1e-12)
    assert np.allclose(at_zero, near_zero, rtol=1e-5)


@pytest.mark.parametrize("trip", [
    Triplet(-2.0, 0.4, 0.3),
    Triplet(1.0, 1.0, 0.0),
    Triplet(0.0, 0.0, 0.5),
    Triplet(-0.5, 0.7, 1.0),
])
def test_derivatives_match_finite_differences(trip):
    t = np.linspace(0.1, 2.5, 15)
    h = 1e-6
    fd1 = (b_value(t + h, trip) - b_value(t - h, trip)) / (2 * h)
    fd2 = (b_prime(t + h, trip) - b_prime(t - h, trip)) / (2 * h)
    assert np.allclose(b_prime(t, trip), fd1, rtol=1e-6, atol=1e-8)
    assert np.allclose(b_second(t, trip), fd2, rtol=1e-5, atol=1e-7)


def test_convexity_on_positive_axis():
    for trip in [Triplet(-3.0, 0.5, 0.2), Triplet(0.5, 1.0, 0.0),
                 Triplet(0.0, 0.0, 0.8)]:
        t = np.linspace(0.01, 4.0, 200)
        assert np.all(b_second(t, trip) > 0.0)


def test_weight_is_t_times_second_derivative():
    trip = Triplet(-1.0, 0.3, 0.4)
    t = np.linspace(0.1, 2.0, 30)
    assert np.allclose(weight(t, trip), t * b_second(t, trip), rtol=1e-12)


def test_weight_closed_forms():
    t = np.linspace(0.0, 2.0, 30)
    # polynomial family: (gamma + 1) t^gamma
    assert np.allclose(weight(t, Triplet(0.0, 0.0, 0.5)),
                       1.5 * t ** 0.5, rtol=1e-12)
    # exponential family: t e^{alpha t}
    assert np.allclose(weight(t, Triplet(-2.0, 1.0, 0.0)),
                       t * np.exp(-2.0 * t), rtol=1e-12)
    # likelihood limit: constant 1
    assert np.allclose(weight(t[1:], Triplet(0.0, 0.0, 0.0)), 1.0)


def test_weight_redescends_for_negative_alpha():
    trip = Triplet(-5.0, 1.0, 0.0)
    t = np.linspace(0.0, 3.0, 400)
    w = weight(t, trip)
    peak = np.argmax(w)
    assert 0 < peak < len(t) - 1
    assert w[-1] < w[peak] * 0.01


def test_negative_density_argument_rejected():
    with pytest.raises(DomainError):
        b_value(np.array([-0.1, 0.5]), Triplet(0.0, 0.0, 0.5))
    with pytest.raises(DomainError):
        weight(-1.0, Triplet(0.0, 1.0, 0.0))


def test_exp_clipping_prevents_overflow():
    vals = exp_clipped(np.array([-1e4, 0.0, 1e4]))
    assert np.all(np.isfinite(vals))
    assert vals[1] == 1.0
