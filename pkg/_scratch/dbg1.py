import sys, time
sys.path.insert(0, 'src'); sys.path.insert(0, '_scratch')
import numpy as np
from gen import random_system, random_ellipsoid
from flexhull.subproblem import build_instance, solve_subproblem, brute_force_subproblem

seed = 0; T = 1
sysr = random_system(seed, n_op=6, n_x=3, T=T)
Q, c = random_ellipsoid(seed, T)
t0=time.time()
inst = build_instance(sysr, Q, c, bounds_mode="tight")
print("build %.2f s; lo" % (time.time()-t0), np.round(inst.lo,3), "hi", np.round(inst.hi,3), flush=True)
yb, vb = brute_force_subproblem(inst)
print("brute", vb, flush=True)
trace = []
t0=time.time()
y, v, rep = solve_subproblem(inst, gap_tol=1e-4, time_cap=15, trace=trace)
print("bnb", v, "bound", rep.objbound, "gap %.2e"%rep.gap, "nodes", rep.n_nodes, "certified", rep.certified, "%.2f s"%(time.time()-t0))
for row in trace[:6]: print("  ", [round(float(x),6) for x in row])
for row in trace[-6:]: print("  ", [round(float(x),6) for x in row])
