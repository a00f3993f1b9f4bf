import sys, time
sys.path.insert(0, 'src')
import numpy as np
from flexhull import *
from flexhull.feeder import load_feeder, validate_radial, enumerate_spanning_trees
from flexhull.ders import load_fleet, UncertaintyModel
from flexhull.compact import assemble

f = load_feeder('_scratch/smoke4.json')
fleet = load_fleet('_scratch/smoke4.json', f)
u = UncertaintyModel(delta=0.05)
tops = enumerate_spanning_trees(f)
print("topologies:", [t.s for t in tops])
vols = {}
for top in tops:
    s = assemble(f, fleet, u, "fixed", topology=top)
    t0 = time.time()
    res = run(s, BendersConfig())
    vols[top.s] = res.volume_index
    print(f"fixed {top.s}: vol={res.volume_index:.6f} iters={res.iterations} cert={res.certified} {time.time()-t0:.1f}s", flush=True)
sR = assemble(f, fleet, u, "reconfig")
t0 = time.time()
resR = run(sR, BendersConfig())
print(f"reconfig: topo={resR.topology.s} vol={resR.volume_index:.6f} iters={resR.iterations} cert={resR.certified} {time.time()-t0:.1f}s")
best_fixed = max(vols.values())
print("best fixed:", best_fixed, "reconfig >= best fixed - 1e-6:", resR.volume_index >= best_fixed - 1e-6)
print("argmax fixed:", max(vols, key=vols.get), "== reconfig topo:", max(vols, key=vols.get) == tuple(resR.topology.s))
