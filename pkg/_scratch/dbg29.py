import sys, time
sys.path.insert(0, 'src')
import numpy as np
from flexhull.feeder import load_feeder
from flexhull.ders import load_fleet, UncertaintyModel
from flexhull.compact import assemble, nominal_substation_trajectory, recourse_check
from flexhull.validate import reference_topology
from flexhull.benders import BendersConfig, CutPool, _MasterProblem, _box_radius, _slack_vertex
from flexhull.subproblem import build_instance, solve_subproblem

path = "src/flexhull/data/medium16.json"
f = load_feeder(path)
fleet = load_fleet(path, f)
topo = reference_topology(f)
s = assemble(f, fleet, UncertaintyModel(0.05), "fixed", topology=topo)
print("rows", s.n_rows, "cols", s.n_cols, flush=True)
rc = recourse_check(s, nominal_substation_trajectory(s))
print("static slack at nominal:", rc.value, flush=True)
cfg = BendersConfig()
master = _MasterProblem(s, cfg, nominal_substation_trajectory(s), _box_radius(s, cfg))
ell, logdet = master.solve(CutPool())
t0 = time.time()
inst = build_instance(s, ell.Q, ell.c, sqrt_q=ell.sqrt, seed_vertices=[_slack_vertex(s)])
t_build = time.time() - t0
t0 = time.time()
y, v, rep = solve_subproblem(inst, gap_tol=1e-3, time_cap=300)
t_ref = time.time() - t0
print(f"reformulated: v={v:.4f} gap={rep.gap:.2e} cert={rep.certified} nodes={rep.n_nodes} build={t_build:.2f}s solve={t_ref:.2f}s", flush=True)
t0 = time.time()
y2, v2, rep2 = solve_subproblem(inst, gap_tol=1e-3, time_cap=max(60.0, 30*t_ref), monolithic=True)
t_mono = time.time() - t0
print(f"monolithic: v={v2:.4f} gap={rep2.gap:.2e} cert={rep2.certified} nodes={rep2.n_nodes} solve={t_mono:.2f}s ratio={t_mono/max(t_ref,1e-9):.0f}x", flush=True)
