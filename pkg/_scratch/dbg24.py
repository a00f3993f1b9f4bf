import sys, time, heapq
sys.path.insert(0, 'src')
import numpy as np
from flexhull import *
from flexhull.feeder import load_feeder
from flexhull.ders import load_fleet, UncertaintyModel
from flexhull.compact import assemble, nominal_substation_trajectory
from flexhull.validate import reference_topology
from flexhull.benders import BendersConfig, CutPool, DualExtremePoint, _MasterProblem, _slack_vertex, _box_radius
from flexhull.subproblem import build_instance, solve_subproblem, _SectorCertifier

path = "src/flexhull/data/ring8_t3.json"
f = load_feeder(path)
fleet = load_fleet(path, f)
topo = reference_topology(f)
s = assemble(f, fleet, UncertaintyModel(0.05), "fixed", topology=topo)
cfg = BendersConfig()
master = _MasterProblem(s, cfg, nominal_substation_trajectory(s), _box_radius(s, cfg))
pool = CutPool()
k = 0
while True:
    k += 1
    ell, logdet = master.solve(pool)
    inst = build_instance(s, ell.Q, ell.c, sqrt_q=ell.sqrt,
                          seed_vertices=[p.y for p in pool] + [_slack_vertex(s)])
    y, v, rep = solve_subproblem(inst, bound_target=cfg.eps, stop_above=cfg.eps, time_cap=20)
    print(f"k={k} v={v:.3e} bound={rep.objbound:.3e}", flush=True)
    if v <= cfg.eps:
        break
    pool.add(DualExtremePoint.from_vertex(s, y, k))
print("== final certification probe ==", flush=True)
cert = _SectorCertifier(inst)
t0 = time.time()
out = cert.solve_node({})
print("root bound:", out[0], "over:", np.round(out[2], 5), "%.3f s" % (time.time()-t0), flush=True)
# instrumented best-bound loop
heap = []; cnt = 0
def push(sectors):
    global cnt
    o = cert.solve_node(sectors)
    if o is None: return
    b, yy, over = o
    if b <= cfg.eps: return
    heapq.heappush(heap, (-b, cnt, sectors, over)); cnt += 1
push({})
t0 = time.time(); it = 0
while heap and it < 3000:
    it += 1
    negb, _, sectors, over = heapq.heappop(heap)
    if it % 300 == 0 or it < 5:
        depth = {g: (sec.t_hi - sec.t_lo).max() for g, sec in sectors.items()}
        print(f"  it={it} bound={-negb:.5e} sectored={sorted(sectors)} maxw={ {g: round(w,4) for g,w in depth.items()} } {time.time()-t0:.1f}s", flush=True)
    g = int(np.argmax(over))
    sec = sectors.get(g)
    from flexhull.subproblem import _axis_sectors, _Sector
    if sec is None:
        for ns in _axis_sectors(len(inst.groups[g])):
            child = dict(sectors); child[g] = ns; push(child)
        continue
    widths = sec.t_hi - sec.t_lo
    i = int(np.argmax(widths))
    mid = 0.5 * (sec.t_lo[i] + sec.t_hi[i])
    for side in (0, 1):
        tl, th = sec.t_lo.copy(), sec.t_hi.copy()
        if side == 0: th[i] = mid
        else: tl[i] = mid
        child = dict(sectors); child[g] = _Sector(sec.zhat, sec.tangent, tl, th)
        push(child)
print("after", it, "pops: heap", len(heap), "top bound", -heap[0][0] if heap else None, "%.1f s" % (time.time()-t0))
