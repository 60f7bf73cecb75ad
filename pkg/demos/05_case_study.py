"""Compare the four switching triggers on the mixed-criticality task set.

A short horizon and three seeds keep this under a minute; the acceptance
suite runs the full matrix.
"""

from mcsched import metrics, sim
from mcsched.config import bundled

cfg = bundled("table2")
horizon = 60_000
seeds = [cfg.seed + k for k in range(3)]

runs = []
for policy in ("EDF", "FP"):
    for trigger in ("mono", "reactive", "fuzzy", "fuzzy+predictor"):
        for seed in seeds:
            runs.append(sim.run(cfg.with_policy(policy), seed, trigger, horizon=horizon))

report = metrics.aggregate(runs)
print(metrics.table(report))
