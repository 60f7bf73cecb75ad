"""Print the risk surface of the fuzzy controller on a coarse grid."""

import numpy as np

from mcsched.fuzzy import FuzzyConfig, explain, infer

cfg = FuzzyConfig()
grid = np.linspace(-1, 1, 9)

print("rows: laxity acceleration, columns: predicted laxity")
print("       " + " ".join(f"{p:6.2f}" for p in grid))
for a in grid:
    row = " ".join(f"{infer(a, p, cfg):6.3f}" for p in grid)
    print(f"{a:6.2f} {row}")

# One point in detail, to show which rules fired.
inf = explain(-0.3, 0.1, cfg)
print("\nacceleration -0.3, prediction 0.1")
for rule, s in sorted(inf.firing.items(), key=lambda kv: -kv[1]):
    if s > 0:
        print(f"  {rule[0]:>8} & {rule[1]:<6} -> {cfg.rules[rule]:<4} strength {s:.3f}")
print(f"  risk {inf.risk:.4f}")
