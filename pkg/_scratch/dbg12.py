import sys, json, time
sys.path.insert(0, 'src')
import numpy as np
from flexhull import *
from flexhull.feeder import load_feeder, validate_radial, enumerate_spanning_trees
from flexhull.ders import load_fleet, UncertaintyModel
from flexhull.compact import assemble, recourse_check

f = load_feeder('_scratch/es1.json')
fleet = load_fleet('_scratch/es1.json', f)
top = validate_radial(f, ())
s = assemble(f, fleet, UncertaintyModel(delta=0.0), "fixed", topology=top)
t0=time.time()
res = run(s, BendersConfig())
print("1-ES: Q=%.8f c=%.2e iters=%d certified=%s %.2fs" % (res.ellipsoid.Q[0,0], res.ellipsoid.c[0], res.iterations, res.certified, time.time()-t0))
assert abs(res.ellipsoid.Q[0,0] - 0.01) < 1e-6 and abs(res.ellipsoid.c[0]) < 1e-6
print("analytic OK")

# 4-bus ring, delta=5%, fixed vs reconfig
f2 = load_feeder('/tmp/__nonexist__') if False else None
case = json.load(open('_scratch/smoke4.json')) if False else None
