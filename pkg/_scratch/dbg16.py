import sys, time
sys.path.insert(0, 'src')
import numpy as np
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
cfg = BendersConfig()
master = _MasterProblem(s, cfg, nominal_substation_trajectory(s), _box_radius(s, cfg))
pool = CutPool()
k = 0
while k < 10:
    k += 1
    ell, logdet = master.solve(pool)
    inst = build_instance(s, ell.Q, ell.c, sqrt_q=ell.sqrt,
                          seed_vertices=[p.y for p in pool] + [_slack_vertex(s)])
    y, v, rep = solve_subproblem(inst, bound_target=cfg.eps, stop_above=cfg.eps)
    print(f"k={k} v={v:.3e} bound={rep.objbound:.3e} nodes={rep.n_nodes}", flush=True)
    if rep.objbound <= cfg.eps: break
    pool.add(DualExtremePoint.from_vertex(s, y, k))
print("== next master ==", flush=True)
t0=time.time(); ell, logdet = master.solve(pool); print("master %.2fs logdet %.4f" % (time.time()-t0, logdet), flush=True)
t0=time.time()
inst = build_instance(s, ell.Q, ell.c, sqrt_q=ell.sqrt,
                      seed_vertices=[p.y for p in pool] + [_slack_vertex(s)])
print("build %.2fs" % (time.time()-t0), flush=True)
trace=[]
t0=time.time()
y, v, rep = solve_subproblem(inst, bound_target=cfg.eps, stop_above=cfg.eps, time_cap=30, trace=trace)
print("sub %.1fs v=%.3e bound=%.3e nodes=%d cert=%s" % (time.time()-t0, v, rep.objbound, rep.n_nodes, rep.certified), flush=True)
for row in trace[:6]: print("  ", [round(float(x),8) for x in row])
for row in trace[-6:]: print("  ", [round(float(x),8) for x in row])
