import sys, cProfile, pstats
sys.path.insert(0, 'src'); sys.path.insert(0, '_scratch')
import numpy as np
from gen import random_system, random_ellipsoid
from flexhull.subproblem import build_instance, solve_subproblem

seed = 6; T = 1
sysr = random_system(seed, n_op=6, n_x=3, T=T)
Q, c = random_ellipsoid(seed, T)
inst = build_instance(sysr, Q, c, bounds_mode="tight")
pr = cProfile.Profile()
pr.enable()
y, v, rep = solve_subproblem(inst, gap_tol=1e-6, time_cap=12)
pr.disable()
print("nodes", rep.n_nodes, "gap %.2e" % rep.gap, "certified", rep.certified)
st = pstats.Stats(pr); st.sort_stats("cumulative").print_stats(18)
