import sys, time
sys.path.insert(0, 'src')
import numpy as np
from flexhull.feeder import load_feeder, enumerate_spanning_trees
from flexhull.ders import load_fleet, UncertaintyModel
from flexhull.compact import assemble, nominal_substation_trajectory
from flexhull.benders import BendersConfig, CutPool, DualExtremePoint, _MasterProblem, _slack_vertex, _box_radius
from flexhull.subproblem import build_instance, solve_subproblem, _ReformulatedRelaxation

f = load_feeder('_scratch/smoke4.json')
fleet = load_fleet('_scratch/smoke4.json', f)
u = UncertaintyModel(delta=0.05)
tops = enumerate_spanning_trees(f)
s = assemble(f, fleet, u, "fixed", topology=tops[0])
cfg = BendersConfig()
master = _MasterProblem(s, cfg, nominal_substation_trajectory(s), _box_radius(s, cfg))
pool = CutPool()
for k in range(1, 10):
    ell, logdet = master.solve(pool)
    inst = build_instance(s, ell.Q, ell.c, sqrt_q=ell.sqrt,
                          seed_vertices=[p.y for p in pool] + [_slack_vertex(s)])
    y, v, rep = solve_subproblem(inst, bound_target=cfg.eps, stop_above=cfg.eps)
    if rep.objbound <= cfg.eps: break
    pool.add(DualExtremePoint.from_vertex(s, y, k))
ell, logdet = master.solve(pool)
inst = build_instance(s, ell.Q, ell.c, sqrt_q=ell.sqrt,
                      seed_vertices=[p.y for p in pool] + [_slack_vertex(s)])
rel = _ReformulatedRelaxation(inst)
lo, hi = inst.lo.copy(), inst.hi.copy()
print("groups:", [list(g) for g in inst.groups])
for it in range(6):
    out = rel.solve(lo, hi)
    bound, uvals, viol, ypt = out
    print(f"--- iter {it}: bound {bound:.6e}")
    ups = np.asarray(rel._ups.value)
    for gi, gidx in enumerate(inst.groups):
        nrm = np.linalg.norm(uvals[gidx])
        print(f"  grp{gi} ups={ups[gi]:.6f} |u|={nrm:.6f} gap={ups[gi]-nrm:.2e} width={[round(float(hi[i]-lo[i]),5) for i in gidx]}")
    exact = inst.exact_value(ypt)
    print("  exact phi(y_hat) =", round(exact, 8), " viol max:", float(viol.max()), " argmax:", int(viol.argmax()))
    j = int(viol.argmax()); w = hi[j]-lo[j]
    split = float(np.clip(uvals[j], lo[j]+0.2*w, hi[j]-0.2*w))
    # follow the child that keeps the relaxation point
    if uvals[j] <= split: hi[j] = split
    else: lo[j] = split
