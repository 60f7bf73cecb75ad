import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mcsched.predict import (ForecastRecord, Predictor, PredictorState, forecast,
                             kalman_step, mse, rmse)
from oracles import textbook_kalman


def run(series, q=1e-4, r=1e-2):
    s = PredictorState(q=q, r=r)
    out = []
    for y in series:
        s = kalman_step(s, y)
        out.append(s)
    return out


def test_matches_textbook_recursion():
    rng = np.random.default_rng(11)
    for _ in range(100):
        n = int(rng.integers(3, 60))
        series = np.cumsum(rng.normal(0, 0.05, n)) + rng.normal(0, 0.1, n)
        q, r = float(rng.uniform(1e-5, 1e-2)), float(rng.uniform(1e-3, 1e-1))
        ours = run(series, q, r)
        ref = textbook_kalman(series, q, r)
        for s, (x, P) in zip(ours, ref):
            assert s.level == pytest.approx(x[0], abs=1e-9)
            assert s.trend == pytest.approx(x[1], abs=1e-9)
            assert np.allclose(s.covariance, P, atol=1e-9, rtol=0)


@pytest.mark.parametrize("c", [-0.3, 0.0, 0.42, 1.0])
def test_constant_series_converges(c):
    s = run([c] * 200)[-1]
    for n in (1, 3, 5):
        assert forecast(s, n) == pytest.approx(c, abs=1e-6)


def test_linear_series_is_followed():
    s = run([0.01 * k for k in range(100)])[-1]
    assert forecast(s, 5, clamp=False) == pytest.approx(0.99 + 0.05, abs=1e-6)


def test_initialisation_rule():
    s1 = kalman_step(PredictorState(), 0.5)
    assert (s1.level, s1.trend, s1.count) == (0.5, 0.0, 1)
    s2 = kalman_step(s1, 0.7)
    assert s2.trend == pytest.approx(0.2) and s2.level == 0.7


def test_forecast_errors_and_clamping():
    with pytest.raises(ValueError):
        forecast(PredictorState(), 1)
    s = run([0.9, 1.0])[-1]
    with pytest.raises(ValueError):
        forecast(s, -1)
    assert forecast(s, 5) == 1.0
    assert forecast(s, 5, clamp=False) == pytest.approx(1.5)


def test_nan_observation_is_ignored():
    s = run([0.1, 0.2, 0.3])[-1]
    assert kalman_step(s, float("nan")) == s


def test_bad_noise_rejected():
    with pytest.raises(ValueError):
        PredictorState(q=0.0)


def test_rmse_definition():
    recs = [ForecastRecord(1, 1, 0.5, 0.2), ForecastRecord(2, 1, 0.1, 0.1),
            ForecastRecord(3, 1, 0.0, None)]
    assert mse(recs) == pytest.approx(0.09 / 2)
    assert rmse(recs) == pytest.approx(math.sqrt(0.045))
    assert rmse([]) is None


def test_predictor_pairs_forecasts_with_later_observations():
    p = Predictor(horizons=(1, 3))
    series = [0.1 * k for k in range(10)]
    for y in series:
        p.observe(y)
    for rec in p.records:
        assert rec.observed == series[rec.tick]
    ones = p.by_horizon(1)
    assert [r.tick for r in ones] == list(range(1, 10))
    # a perfect line is forecast exactly once the trend is known
    assert all(abs(r.predicted - r.observed) < 1e-9 for r in ones if r.tick >= 2)
    assert [r.tick for r in p.by_horizon(3)] == list(range(3, 10))


@given(st.lists(st.floats(-1, 1), min_size=3, max_size=40))
def test_covariance_stays_symmetric_positive(series):
    for s in run(series):
        assert s.p00 > 0 and s.p11 > 0
        assert s.p00 * s.p11 - s.p01 ** 2 > -1e-12
