import sys, time
sys.path.insert(0, 'src')
import numpy as np
from flexhull import *
from flexhull.validate import (ScenarioConfig, solve_scenario, monte_carlo_validate,
                               sweep, emit_report, ellipsoid_volume)

cfg = ScenarioConfig(feeder="src/flexhull/data/ring6_t2.json", mode="fixed",
                     delta=0.05, time_cap=240.0, samples=200, seed=11)
res, sysm = solve_scenario(cfg)
t0 = time.time()
rep = monte_carlo_validate(res, sysm, 200, seed=11)
print(f"MC 200: infeasible={rep.infeasible} max_slack={rep.max_slack:.2e} "
      f"v range [{rep.v_min:.4f},{rep.v_max:.4f}] hist_sum={rep.bin_counts.sum()} "
      f"expect {200 * 6 * 2} ({time.time()-t0:.1f}s)", flush=True)
# negative control
import dataclasses
bad = Ellipsoid(Q=res.ellipsoid.Q * 1.5, c=res.ellipsoid.c)
bad_res = dataclasses.replace(res, ellipsoid=bad)
rep2 = monte_carlo_validate(bad_res, sysm, 200, seed=11)
print(f"inflated Q: infeasible={rep2.infeasible} max_slack={rep2.max_slack:.2e}", flush=True)
# report determinism
tbl = sweep(ScenarioConfig(feeder="src/flexhull/data/es_single.json", mode="fixed",
                           delta=0.0, time_cap=60.0), [0.0, 0.05])
emit_report(tbl, "_scratch/repA", config=cfg)
tbl2 = sweep(ScenarioConfig(feeder="src/flexhull/data/es_single.json", mode="fixed",
                            delta=0.0, time_cap=60.0), [0.0, 0.05])
emit_report(tbl2, "_scratch/repB", config=cfg)
import filecmp, os
same = all(open(f"_scratch/repA/{f}","rb").read() == open(f"_scratch/repB/{f}","rb").read()
           for f in os.listdir("_scratch/repA") if f.endswith(".csv"))
print("CSV determinism:", same, "files:", sorted(os.listdir("_scratch/repA")))
