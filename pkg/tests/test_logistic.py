"""Tests for the four-parameter logistic mapping."""
import numpy as np
import pytest

from src.errors import DegenerateInput, LengthMismatch
from src.evaluation.logistic import LogisticParams, fit_logistic, initial_params, logistic


def test_shape_of_the_curve():
    """tau1 and tau2 are the two asymptotes; tau3 is the midpoint."""
    f = LogisticParams(5.0, 0.0, 0.5, -0.1)

    assert f(0.5) == pytest.approx(2.5)
    assert f(-10.0) == pytest.approx(0.0, abs=1e-9)
    assert f(10.0) == pytest.approx(5.0, abs=1e-9)
    with pytest.raises(ValueError):
        LogisticParams(5.0, 0.0, 0.5, 0.0)


def test_recovers_planted_parameters():
    """Noise-free samples of a known curve are fitted back."""
    x = np.linspace(0.0, 1.0, 40)
    y = logistic(x, 5.0, 0.0, 0.5, -0.1)
    fit = fit_logistic(x, y)

    assert fit.sse < 1e-10
    assert np.allclose(fit.params.as_array(), [5.0, 0.0, 0.5, -0.1], atol=1e-4)


def test_noisy_fit_improves_on_the_start():
    """SSE never exceeds the initial guess and the curve tracks the data."""
    rng = np.random.default_rng(41)
    x = rng.uniform(0.0, 1.0, 200)
    y = logistic(x, 5.0, 0.0, 0.5, -0.1) + 0.1 * rng.standard_normal(200)
    fit = fit_logistic(x, y)

    assert fit.sse <= fit.initial_sse
    assert fit.sse / 200 == pytest.approx(0.01, rel=0.3)
    assert np.corrcoef(fit.params(x), y)[0, 1] > 0.98


def test_decreasing_relationship():
    """Descending data is fitted too, whichever sign tau4 starts with."""
    x = np.linspace(-2.0, 2.0, 30)
    y = logistic(x, 0.0, 9.0, 0.3, -0.4)
    fit = fit_logistic(x, y)

    assert fit.sse <= 1e-8
    assert np.allclose(fit.params(x), y, atol=1e-4)


def test_initial_guess():
    """Start at the score extremes, the median and a quarter standard deviation."""
    x = np.array([1.0, 2.0, 3.0, 4.0, 5.0])
    y = np.array([10.0, 20.0, 15.0, 40.0, 30.0])

    assert np.allclose(initial_params(x, y), [40.0, 10.0, 3.0, -np.sqrt(2) / 4])


def test_constant_subjective_scores():
    """A constant target is matched exactly by a flat curve."""
    fit = fit_logistic([0.0, 1.0, 2.0, 3.0, 4.0], [3.0] * 5)

    assert fit.sse == pytest.approx(0.0, abs=1e-12)
    assert np.allclose(fit.params([0.0, 4.0]), 3.0)


def test_degenerate_inputs():
    """Too few points, constant objective scores and mismatched lengths."""
    with pytest.raises(DegenerateInput):
        fit_logistic([1, 2, 3, 4], [1, 2, 3, 4])
    with pytest.raises(DegenerateInput):
        fit_logistic([2, 2, 2, 2, 2], [1, 2, 3, 4, 5])
    with pytest.raises(LengthMismatch):
        fit_logistic([1, 2, 3, 4, 5], [1, 2, 3])


def planted_instances(noise, count=100):
    """Random four-parameter curves sampled at 50 points, optionally with Gaussian noise."""
    rng = np.random.default_rng(2024 if noise else 2023)
    for _ in range(count):
        tau = (rng.uniform(4.0, 6.0), rng.uniform(0.0, 1.0), rng.uniform(0.35, 0.65),
               rng.choice([-1.0, 1.0]) * rng.uniform(0.05, 0.15))
        x = np.sort(rng.uniform(0.0, 1.0, 50))
        y = logistic(x, *tau) + noise * rng.standard_normal(50)
        yield x, y


@pytest.mark.parametrize("noise", [0.0, 0.05])
def test_planted_curves(noise):
    """Noise-free curves fit to SSE 1e-8; noisy ones to an RMSE within twice the noise."""
    for x, y in planted_instances(noise):
        fit = fit_logistic(x, y)
        residual_rmse = np.sqrt(fit.sse / x.size)

        assert fit.sse <= fit.initial_sse
        if noise == 0.0:
            assert fit.sse <= 1e-8
        else:
            assert residual_rmse <= 2 * noise
