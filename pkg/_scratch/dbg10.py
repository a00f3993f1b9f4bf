import sys
sys.path.insert(0, 'src')
import numpy as np
from flexhull.feeder import load_feeder, validate_radial
from flexhull.ders import load_fleet, UncertaintyModel
from flexhull.compact import assemble, nominal_substation_trajectory
from flexhull.benders import BendersConfig, CutPool, DualExtremePoint, _MasterProblem, _slack_vertex
from flexhull.subproblem import build_instance, _ReformulatedRelaxation

f = load_feeder('_scratch/es1.json')
fleet = load_fleet('_scratch/es1.json', f)
u = UncertaintyModel(delta=0.0)
top = validate_radial(f, ())
s = assemble(f, fleet, u, "fixed", topology=top)
cfg = BendersConfig()
master = _MasterProblem(s, cfg, nominal_substation_trajectory(s), 1.0)
pool = CutPool()
from flexhull.subproblem import solve_subproblem
for k in (1, 2):
    ell, logdet = master.solve(pool)
    inst = build_instance(s, ell.Q, ell.c, sqrt_q=ell.sqrt,
                          seed_vertices=[p.y for p in pool] + [_slack_vertex(s)])
    y, v, rep = solve_subproblem(inst, bound_target=cfg.eps)
    pool.add(DualExtremePoint.from_vertex(s, y, k))
ell, logdet = master.solve(pool)
print("k=3 iterate: Q=%r c=%r" % (ell.Q, ell.c))
inst = build_instance(s, ell.Q, ell.c, sqrt_q=ell.sqrt,
                      seed_vertices=[p.y for p in pool] + [_slack_vertex(s)])
print("E finite:", np.all(np.isfinite(inst.E)), "r finite:", np.all(np.isfinite(inst.r)))
print("lo", inst.lo, "hi", inst.hi)
rel = _ReformulatedRelaxation(inst)
out = rel.solve(inst.lo, inst.hi)
print("root solve:", None if out is None else (out[0], out[1], np.all(np.isfinite(out[3]))))
if out is not None:
    u_pt = inst.E.T @ out[3]
    print("u_pt", u_pt, "grad finite:", np.all(np.isfinite(inst.subgradient(u_pt))), "grad:", inst.subgradient(u_pt)[:8])
