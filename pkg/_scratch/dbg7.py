import sys, json
sys.path.insert(0, 'src')
import numpy as np
from flexhull.feeder import load_feeder, validate_radial
from flexhull.ders import load_fleet, UncertaintyModel
from flexhull.compact import assemble
from flexhull.benders import (BendersConfig, CutPool, DualExtremePoint, _MasterProblem,
                              evaluate_cut, _slack_vertex)
from flexhull.compact import nominal_substation_trajectory
from flexhull.subproblem import build_instance, solve_subproblem, brute_force_subproblem

f = load_feeder('_scratch/es1.json')
fleet = load_fleet('_scratch/es1.json', f)
u = UncertaintyModel(delta=0.0)
top = validate_radial(f, ())
s = assemble(f, fleet, u, "fixed", topology=top)
print("n_rows", s.n_rows, "n_op", s.n_op, "cols", s.n_cols)
cfg = BendersConfig()
guess = nominal_substation_trajectory(s)
master = _MasterProblem(s, cfg, guess, 1.0)
pool = CutPool()
for k in range(1, 6):
    ell, logdet = master.solve(pool)
    print(f"k={k} Q={ell.Q[0,0]:.6f} c={ell.c[0]:.6f} logdet={logdet:.4f}")
    for i, ext in enumerate(pool):
        print(f"   cut {i}: value at iterate = {evaluate_cut(ext, ell.Q, ell.c, sqrt_q=ell.sqrt):.6e}")
    inst = build_instance(s, ell.Q, ell.c, sqrt_q=ell.sqrt,
                          seed_vertices=[p.y for p in pool] + [_slack_vertex(s)])
    vb = float("nan")
    y, v, rep = solve_subproblem(inst, bound_target=cfg.eps)
    print(f"   subproblem v={v:.6e} bound={rep.objbound:.3e}")
    if rep.objbound <= cfg.eps:
        print("   certified"); break
    ext = DualExtremePoint.from_vertex(s, y, k)
    if pool.contains(ext.y):
        print("   DUPLICATE; y nonzeros:", {i: round(float(w),4) for i, w in enumerate(y) if w > 1e-9})
        print("   r = d - Bc:", np.round(s.d - s.B @ ell.c, 4))
        print("   row tags:", [str(t) for t in s.row_tags])
        break
    pool.add(ext)
