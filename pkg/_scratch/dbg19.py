import sys, time
sys.path.insert(0, 'src')
import numpy as np
from flexhull import *
from flexhull.validate import ScenarioConfig, solve_scenario

for name, tw in [("ring8_t3", None), ("ring8_t4", None)]:
    cfg = ScenarioConfig(feeder=f"src/flexhull/data/{name}.json", mode="fixed", delta=0.05)
    t0 = time.time()
    res, sysm = solve_scenario(cfg)
    print(f"{name} fixed d=5%: vol={res.volume_index:.6f} iters={res.iterations} "
          f"cert={res.certified} rows={sysm.n_rows} {time.time()-t0:.1f}s", flush=True)
