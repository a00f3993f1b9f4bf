import sys, time
sys.path.insert(0, 'src')
import numpy as np
from flexhull import *
from flexhull.feeder import load_feeder
from flexhull.ders import load_fleet, UncertaintyModel
from flexhull.compact import assemble
from flexhull.validate import reference_topology

path = "src/flexhull/data/ring8_t3.json"
f = load_feeder(path)
fleet = load_fleet(path, f)
topo = reference_topology(f)
s = assemble(f, fleet, UncertaintyModel(0.05), "fixed", topology=topo)
print("rows", s.n_rows, "cols", s.n_cols, flush=True)
t0 = time.time()
res = run(s, BendersConfig(verbose=True))
print(f"vol={res.volume_index:.6f} iters={res.iterations} cert={res.certified} {time.time()-t0:.1f}s")
