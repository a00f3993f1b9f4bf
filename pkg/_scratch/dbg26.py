import sys, time, json, copy
sys.path.insert(0, 'src')
import numpy as np
from flexhull import *
from flexhull.validate import ScenarioConfig, solve_scenario

base = json.load(open("src/flexhull/data/ring6_t2.json"))
for scale in (1.0, 1.6, 2.0, 2.4):
    case = copy.deepcopy(base)
    for ln in case["lines"]:
        ln["r"] = round(ln["r"] * scale, 5)
        ln["x"] = round(ln["x"] * scale, 5)
    p = f"_scratch/ring6_s{int(scale*10)}.json"
    json.dump(case, open(p, "w"))
    cfg = ScenarioConfig(feeder=p, mode="fixed", delta=0.0, time_cap=60.0)
    try:
        rf, _ = solve_scenario(cfg, mode="fixed")
        rr, _ = solve_scenario(cfg, mode="reconfig")
        print(f"scale {scale}: fixed(ref)={rf.volume_index:.6f} cert={rf.certified} | "
              f"reconfig={rr.volume_index:.6f} cert={rr.certified} topo={rr.topology.s} "
              f"ratio={rr.volume_index/max(rf.volume_index,1e-12):.3f}", flush=True)
    except Exception as ex:
        print(f"scale {scale}: {type(ex).__name__}: {ex}", flush=True)
