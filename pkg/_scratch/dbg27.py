import sys, time
sys.path.insert(0, 'src')
from flexhull.validate import ScenarioConfig, solve_scenario
cfg = ScenarioConfig(feeder="src/flexhull/data/ring6_t2.json", mode="fixed", time_cap=240.0)
for mode, delta in (("fixed", 0.2), ("reconfig", 0.2), ("fixed", 0.05)):
    t0 = time.time()
    res, _ = solve_scenario(cfg, delta=delta, mode=mode)
    print(f"{mode} d={delta}: vol={res.volume_index:.6f} iters={res.iterations} cert={res.certified} "
          f"bound={res.certificate_bound:.2e} topo={res.topology.s} {time.time()-t0:.0f}s", flush=True)
