import sys, collections
sys.path.insert(0, 'src'); sys.path.insert(0, '_scratch')
import numpy as np, cvxpy as cp
from gen import random_system, random_ellipsoid
import flexhull.subproblem as sp

stats = collections.Counter()
orig = cp.Problem.solve
def patched(self, *a, **kw):
    try:
        out = orig(self, *a, **kw)
        stats[(kw.get('solver'), self.status)] += 1
        return out
    except Exception as ex:
        stats[(kw.get('solver'), 'RAISE:'+type(ex).__name__)] += 1
        raise
cp.Problem.solve = patched

seed = 6; T = 1
sysr = random_system(seed, n_op=6, n_x=3, T=T)
Q, c = random_ellipsoid(seed, T)
inst = sp.build_instance(sysr, Q, c, bounds_mode="tight")
y, v, rep = sp.solve_subproblem(inst, gap_tol=1e-6, time_cap=10)
print("nodes", rep.n_nodes, "gap %.1e" % rep.gap, "cert", rep.certified)
for k, n in stats.items(): print(k, n)
