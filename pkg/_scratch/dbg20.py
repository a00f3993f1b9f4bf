import sys
sys.path.insert(0, 'src')
import numpy as np, cvxpy as cp
from flexhull.feeder import load_feeder
from flexhull.ders import load_fleet, UncertaintyModel
from flexhull.compact import assemble, nominal_substation_trajectory
from flexhull.validate import reference_topology
from flexhull.benders import BendersConfig, _box_radius

f = load_feeder("src/flexhull/data/ring8_t3.json")
fleet = load_fleet("src/flexhull/data/ring8_t3.json", f)
topo = reference_topology(f)
print("topology:", topo.s)
s = assemble(f, fleet, UncertaintyModel(0.05), "fixed", topology=topo)
cfg = BendersConfig()
guess = nominal_substation_trajectory(s)
box = _box_radius(s, cfg)
print("guess:", guess, "box:", box)
T = s.T
F = cp.Variable((T, T), symmetric=True)
c = cp.Variable(T)
cons = [F >> np.sqrt(cfg.eps_q) * np.eye(T)]
for t in range(T):
    e = np.zeros(T); e[t] = 1.0
    cons.append(c[t] - guess[t] + cp.norm(F @ e) <= box)
    cons.append(guess[t] - c[t] + cp.norm(F @ e) <= box)
prob = cp.Problem(cp.Maximize(cp.log_det(F)), cons)
for solver in ("CLARABEL", "SCS"):
    try:
        prob.solve(solver=solver)
        print(solver, prob.status, prob.value)
    except Exception as ex:
        print(solver, "RAISE", type(ex).__name__, str(ex)[:150])
