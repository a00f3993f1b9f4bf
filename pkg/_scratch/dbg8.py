import sys, faulthandler
sys.path.insert(0, 'src')
faulthandler.dump_traceback_later(20, exit=True)
import numpy as np
from flexhull import *
from flexhull.feeder import load_feeder, validate_radial
from flexhull.ders import load_fleet, UncertaintyModel
from flexhull.compact import assemble

f = load_feeder('_scratch/es1.json')
fleet = load_fleet('_scratch/es1.json', f)
u = UncertaintyModel(delta=0.0)
top = validate_radial(f, ())
s = assemble(f, fleet, u, "fixed", topology=top)
res = run(s, BendersConfig(verbose=True))
print("1-ES: Q=%.8f c=%.2e iters=%d certified=%s" % (res.ellipsoid.Q[0,0], res.ellipsoid.c[0], res.iterations, res.certified))
