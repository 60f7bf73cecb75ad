"""Track a noisy drifting series with the local linear trend filter."""

import math

import numpy as np

from mcsched.predict import Predictor, rmse

rng = np.random.default_rng(7)
n = 400
truth = 0.6 - 0.002 * np.arange(n) + 0.1 * np.sin(np.arange(n) / 25)
series = truth + rng.normal(0, 0.03, n)

p = Predictor()
for y in series:
    p.observe(float(y))

for h in p.horizons:
    print(f"{h}-step RMSE: {rmse(p.by_horizon(h)):.4f}")

s = p.state
print(f"final level {s.level:.3f}, trend {s.trend:+.5f}, "
      f"level std {math.sqrt(s.p00):.4f}")
