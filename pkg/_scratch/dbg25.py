import sys, time
sys.path.insert(0, 'src')
import numpy as np
from flexhull import *
from flexhull.validate import ScenarioConfig, solve_scenario, monte_carlo_validate

cfg = ScenarioConfig(feeder="src/flexhull/data/ring6_t2.json", mode="fixed",
                     delta=0.05, time_cap=90.0)
for mode in ("fixed", "reconfig"):
    for delta in (0.0, 0.05, 0.10, 0.15, 0.20):
        t0 = time.time()
        res, sysm = solve_scenario(cfg, delta=delta, mode=mode)
        print(f"{mode} d={delta:.2f}: vol={res.volume_index:.6f} iters={res.iterations} "
              f"cert={res.certified} cert_bound={res.certificate_bound:.2e} "
              f"topo={None if res.topology is None else res.topology.s} {time.time()-t0:.1f}s", flush=True)
