"""Local-linear-trend Kalman filter for the worst-laxity series.

State is ``(level, trend)`` with transition ``[[1, 1], [0, 1]]``, process
noise ``q * I`` and a scalar observation of the level with noise ``r``. The
2x2 algebra is written out by hand; it runs once per prediction tick.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional


@dataclass(frozen=True)
class PredictorState:
    level: float = 0.0
    trend: float = 0.0
    # covariance entries (P00, P01, P11); P10 == P01
    p00: float = 1.0
    p01: float = 0.0
    p11: float = 1.0
    q: float = 1e-4
    r: float = 1e-2
    count: int = 0

    def __post_init__(self):
        if self.q <= 0 or self.r <= 0:
            raise ValueError("noise scales q and r must be positive")

    @property
    def covariance(self):
        return [[self.p00, self.p01], [self.p01, self.p11]]


def kalman_step(state: PredictorState, observation: float) -> PredictorState:
    """Fold one observation into the state.

    The first observation sets the level (trend 0); the second sets the trend
    to the observed difference. From the third on, the usual predict/update.
    A non-finite observation leaves the state untouched.
    """
    y = float(observation)
    if not math.isfinite(y):
        return state
    q, r = state.q, state.r
    if state.count == 0:
        return replace(state, level=y, trend=0.0, p00=r, p01=0.0, p11=r, count=1)
    if state.count == 1:
        # trend = y1 - y0 with both observations carrying variance r
        return replace(state, level=y, trend=y - state.level, p00=r, p01=r,
                       p11=2.0 * r, count=2)

    # predict: x <- F x, P <- F P F' + qI
    level = state.level + state.trend
    trend = state.trend
    a = state.p00 + 2.0 * state.p01 + state.p11 + q
    b = state.p01 + state.p11
    d = state.p11 + q

    # update with H = [1, 0]
    s = a + r
    k0, k1 = a / s, b / s
    innov = y - level
    return PredictorState(level + k0 * innov, trend + k1 * innov,
                          a - k0 * a, b - k0 * b, d - k1 * b, q, r, state.count + 1)


def forecast(state: PredictorState, n: int, clamp: bool = True) -> float:
    """``level + n * trend``, optionally clamped to [-1, 1]."""
    if n < 0:
        raise ValueError("forecast horizon must be non-negative")
    if state.count == 0:
        raise ValueError("no observations yet")
    value = state.level + n * state.trend
    return min(1.0, max(-1.0, value)) if clamp else value


@dataclass(frozen=True)
class ForecastRecord:
    tick: int  # tick index the forecast targets
    horizon: int
    predicted: float
    observed: Optional[float] = None

    @property
    def squared_error(self) -> Optional[float]:
        if self.observed is None:
            return None
        return (self.predicted - self.observed) ** 2


def mse(records: Iterable[ForecastRecord]) -> Optional[float]:
    errs = [r.squared_error for r in records if r.observed is not None]
    return sum(errs) / len(errs) if errs else None


def rmse(records: Iterable[ForecastRecord]) -> Optional[float]:
    m = mse(records)
    return None if m is None else math.sqrt(m)


@dataclass
class Predictor:
    """Runs the filter tick by tick and pairs each n-step forecast with its outcome.

    Forecasts are scored unclamped against the raw observation.
    """

    q: float = 1e-4
    r: float = 1e-2
    horizons: tuple = (1, 3, 5)
    state: PredictorState = None
    records: list = field(default_factory=list)
    _pending: dict = field(default_factory=dict)
    _tick: int = 0

    def __post_init__(self):
        if self.state is None:
            self.state = PredictorState(q=self.q, r=self.r)

    def observe(self, value: float) -> None:
        k = self._tick
        for horizon, predicted in self._pending.pop(k, ()):
            self.records.append(ForecastRecord(k, horizon, predicted, value))
        self.state = kalman_step(self.state, value)
        for n in self.horizons:
            self._pending.setdefault(k + n, []).append(
                (n, forecast(self.state, n, clamp=False)))
        self._tick += 1

    def forecast(self, n: int, clamp: bool = True) -> float:
        return forecast(self.state, n, clamp)

    def by_horizon(self, n: int) -> list:
        return [r for r in self.records if r.horizon == n]
