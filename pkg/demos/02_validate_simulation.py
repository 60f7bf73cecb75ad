"""Check the analysis against the simulator.

The steady-state run covers one hyperperiod per mode; the mode-change run
fires random requests and records how long each transition took.
"""

from mcsched import rta, sim
from mcsched.config import bundled
from mcsched.core import base_period_stats

cfg = bundled("table1")

for mode in cfg.modes:
    h = base_period_stats(mode).hyperperiod
    r = sim.run(cfg, scenario="steady", mode=mode.name, horizon=h)
    simulated = [r.max_response[t] for t in mode.ids]
    analytic = [rta.steady_state_wcrt(mode, t).R for t in mode.ids]
    print(f"{mode.name}: simulated {simulated}, analytic {analytic}")

horizon = 1_000_000
r = sim.run(cfg, scenario="mode-change", horizon=horizon)
worst = {}
for tr in r.transitions:
    if tr.latency is not None:
        k = (tr.old, tr.new)
        worst[k] = max(worst.get(k, 0), tr.latency)

m1, m2 = cfg.modes
for old, new in ((m1, m2), (m2, m1)):
    bound = rta.mode_change_latency(old, new)
    seen = worst.get((old.name, new.name))
    print(f"{old.name}->{new.name}: worst simulated {seen}, bound {bound}")
print(f"{len(r.transitions)} transitions in {horizon} time units")
