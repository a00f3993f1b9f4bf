import sys, heapq, time
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
k = 0
while k < 10:
    k += 1
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
# run a mini best-bound loop manually to reach the plateau, then dump state
heap = []; cnt = 0
out = rel.solve(inst.lo.copy(), inst.hi.copy())
heapq.heappush(heap, (-out[0], cnt, inst.lo.copy(), inst.hi.copy(), out)); cnt += 1
best = None
for it in range(400):
    nb, _, lo, hi, out = heapq.heappop(heap)
    bound, uvals, viol, ypt = out
    j = int(np.argmax(viol)); w = hi[j]-lo[j]
    if w <= 1e-12 or viol[j] <= 1e-13:
        best = (bound, lo, hi, out); break
    split = float(np.clip(uvals[j], lo[j]+0.2*w, hi[j]-0.2*w))
    for side in (0,1):
        l2, h2 = lo.copy(), hi.copy()
        if side == 0: h2[j] = split
        else: l2[j] = split
        o2 = rel.solve(l2, h2)
        if o2 is not None:
            heapq.heappush(heap, (-o2[0], cnt, l2, h2, o2)); cnt += 1
    best = (bound, lo, hi, out)
bound, lo, hi, out = best
_, uvals, viol, ypt = out
print("stuck bound:", bound)
print("box lo:", np.round(lo, 5)); print("box hi:", np.round(hi, 5))
print("u at relax:", np.round(uvals, 6))
print("exact phi(y_hat):", inst.exact_value(ypt))
ups = np.asarray(rel._ups.value)
for gi, gidx in enumerate(inst.groups):
    Eg = inst.E[:, gidx]
    row_norms = np.linalg.norm(Eg, axis=1)
    tri = float(row_norms @ ypt)
    print(f"grp{gi}: ups={ups[gi]:.6f} |u|={np.linalg.norm(uvals[gidx]):.6f} triangle_rhs={tri:.6f}")
ysup = [(i, round(float(w),4), str(s.row_tags[i])) for i, w in enumerate(ypt) if w > 1e-4 and i < s.n_op]
print("y op-support:", ysup[:14])
print("r@y:", float(inst.r @ ypt))
