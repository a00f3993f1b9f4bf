import sys, time
sys.path.insert(0, 'src')
import numpy as np
from flexhull import *
from flexhull.feeder import load_feeder, enumerate_spanning_trees
from flexhull.ders import load_fleet, UncertaintyModel
from flexhull.compact import assemble, nominal_substation_trajectory
from flexhull.benders import BendersConfig, CutPool, DualExtremePoint, _MasterProblem, _slack_vertex, _box_radius
from flexhull.subproblem import build_instance, solve_subproblem

f = load_feeder('_scratch/smoke4.json')
fleet = load_fleet('_scratch/smoke4.json', f)
u = UncertaintyModel(delta=0.05)
tops = enumerate_spanning_trees(f)
s = assemble(f, fleet, u, "fixed", topology=tops[0])
print("rows", s.n_rows, "cols", s.n_cols, flush=True)
cfg = BendersConfig()
master = _MasterProblem(s, cfg, nominal_substation_trajectory(s), _box_radius(s, cfg))
pool = CutPool()
for k in range(1, 40):
    t0=time.time(); ell, logdet = master.solve(pool); t_m=time.time()-t0
    t0=time.time()
    inst = build_instance(s, ell.Q, ell.c, sqrt_q=ell.sqrt,
                          seed_vertices=[p.y for p in pool] + [_slack_vertex(s)])
    t_b=time.time()-t0
    t0=time.time()
    y, v, rep = solve_subproblem(inst, bound_target=cfg.eps)
    t_s=time.time()-t0
    print(f"k={k} logdetQ={logdet:+.4f} v={v:.3e} bound={rep.objbound:.3e} nodes={rep.n_nodes} | m {t_m:.2f}s b {t_b:.2f}s s {t_s:.2f}s", flush=True)
    if rep.objbound <= cfg.eps:
        print("CERTIFIED vol:", ell.volume_index()); break
    pool.add(DualExtremePoint.from_vertex(s, y, k))
