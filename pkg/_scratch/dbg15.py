import sys, time
sys.path.insert(0, 'src')
import numpy as np
from flexhull import *
from flexhull.feeder import load_feeder, enumerate_spanning_trees
from flexhull.ders import load_fleet, UncertaintyModel
from flexhull.compact import assemble

f = load_feeder('_scratch/smoke4.json')
fleet = load_fleet('_scratch/smoke4.json', f)
u = UncertaintyModel(delta=0.05)
tops = enumerate_spanning_trees(f)
s = assemble(f, fleet, u, "fixed", topology=tops[0])
t0=time.time()
res = run(s, BendersConfig(verbose=True, max_iter=60))
print("DONE vol=%.6f iters=%d cert=%s %.1fs" % (res.volume_index, res.iterations, res.certified, time.time()-t0))
