import sys, time
sys.path.insert(0, 'src')
import numpy as np
from flexhull.feeder import load_feeder, validate_radial
from flexhull.ders import load_fleet, UncertaintyModel
from flexhull.compact import assemble, nominal_substation_trajectory
from flexhull.benders import BendersConfig, CutPool, DualExtremePoint, _MasterProblem, _slack_vertex
from flexhull.subproblem import build_instance, solve_subproblem

f = load_feeder('_scratch/es1.json')
fleet = load_fleet('_scratch/es1.json', f)
u = UncertaintyModel(delta=0.0)
top = validate_radial(f, ())
s = assemble(f, fleet, u, "fixed", topology=top)
cfg = BendersConfig()
master = _MasterProblem(s, cfg, nominal_substation_trajectory(s), 1.0)
pool = CutPool()
for k in (1, 2):
    ell, logdet = master.solve(pool)
    inst = build_instance(s, ell.Q, ell.c, sqrt_q=ell.sqrt,
                          seed_vertices=[p.y for p in pool] + [_slack_vertex(s)])
    y, v, rep = solve_subproblem(inst, bound_target=cfg.eps)
    pool.add(DualExtremePoint.from_vertex(s, y, k))
ell, logdet = master.solve(pool)
inst = build_instance(s, ell.Q, ell.c, sqrt_q=ell.sqrt,
                      seed_vertices=[p.y for p in pool] + [_slack_vertex(s)])
trace = []
t0 = time.time()
y, v, rep = solve_subproblem(inst, bound_target=cfg.eps, time_cap=20, trace=trace)
print("k=3 sub: v=%.3e bound=%.3e nodes=%d cert=%s %.1fs" % (v, rep.objbound, rep.n_nodes, rep.certified, time.time()-t0))
for row in trace[:10]: print("  ", [round(float(x),8) for x in row])
print("   ...")
for row in trace[-10:]: print("  ", [round(float(x),8) for x in row])
