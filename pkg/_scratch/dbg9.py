import sys, time, faulthandler
sys.path.insert(0, 'src'); faulthandler.dump_traceback_later(30, exit=True)
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
for k in range(1, 12):
    t0=time.time(); ell, logdet = master.solve(pool); t_m = time.time()-t0
    t0=time.time()
    inst = build_instance(s, ell.Q, ell.c, sqrt_q=ell.sqrt,
                          seed_vertices=[p.y for p in pool] + [_slack_vertex(s)])
    t_b = time.time()-t0
    t0=time.time()
    y, v, rep = solve_subproblem(inst, bound_target=cfg.eps)
    t_s = time.time()-t0
    print(f"k={k} Q={ell.Q[0,0]:.6f} c={ell.c[0]:+.4f} | master {t_m:.2f}s build {t_b:.2f}s sub {t_s:.2f}s nodes {rep.n_nodes} v={v:.3e} bound={rep.objbound:.3e}", flush=True)
    if rep.objbound <= cfg.eps:
        print("certified; Q error vs 0.01:", abs(ell.Q[0,0]-0.01)); break
    pool.add(DualExtremePoint.from_vertex(s, y, k))
