import sys, time
sys.path.insert(0, 'src'); sys.path.insert(0, '_scratch')
import numpy as np
from gen import random_system, random_ellipsoid
from flexhull.subproblem import build_instance, solve_subproblem, brute_force_subproblem

for seed in range(12):
    T = 1 + seed % 2
    sysr = random_system(seed, n_op=6, n_x=3, T=T)
    Q, c = random_ellipsoid(seed, T)
    inst = build_instance(sysr, Q, c, bounds_mode="tight")
    yb, vb = brute_force_subproblem(inst)
    t0=time.time()
    y, v, rep = solve_subproblem(inst, gap_tol=1e-6, time_cap=8)
    rel = abs(v - vb)/max(abs(vb),1e-9)
    print(f"seed {seed} T={T}: brute {vb:.8f} bnb {v:.8f} rel {rel:.1e} nodes {rep.n_nodes} gap {rep.gap:.1e} cert {rep.certified} {time.time()-t0:.2f}s", flush=True)
