"""Steady-state and mode-change response times for the two-mode task set.

Run:  python3 demos/01_transition_analysis.py
"""

from mcsched import rta
from mcsched.config import bundled

cfg = bundled("table1")
m1, m2 = cfg.modes

# Steady state first: plain fixed-priority response times per mode.
for mode in cfg.modes:
    rs = [rta.steady_state_wcrt(mode, t).R for t in mode.ids]
    print(f"{mode.name} steady-state R: {rs}")

# Then each direction of the change. Old-mode jobs caught by the request and
# the first jobs of the new mode get their own recurrences.
for old, new in ((m1, m2), (m2, m1)):
    a = rta.analyze_transition(old, new)
    print(f"\n{old.name} -> {new.name}")
    for tid, cls in sorted(a.classes.items()):
        o = a.old_results.get(tid)
        n = a.new_results.get(tid)
        parts = [f"task {tid} [{cls.value}]"]
        if o is not None:
            parts.append(f"old-side R={o.R}")
        if n is not None:
            parts.append(f"new-side R={n.R} (done {n.completion} after the request)")
        print("  " + ", ".join(parts))
    print(f"  latency {a.latency}, set by task {a.critical_task}")
