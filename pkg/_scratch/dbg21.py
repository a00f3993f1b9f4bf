import sys
sys.path.insert(0, 'src')
import numpy as np, cvxpy as cp
from flexhull.feeder import load_feeder
from flexhull.ders import load_fleet, UncertaintyModel
from flexhull.compact import assemble, nominal_substation_trajectory
from flexhull.validate import reference_topology
from flexhull.benders import BendersConfig, CutPool, _MasterProblem, _box_radius

f = load_feeder("src/flexhull/data/ring8_t3.json")
fleet = load_fleet("src/flexhull/data/ring8_t3.json", f)
topo = reference_topology(f)
s = assemble(f, fleet, UncertaintyModel(0.05), "fixed", topology=topo)
cfg = BendersConfig()
master = _MasterProblem(s, cfg, nominal_substation_trajectory(s), _box_radius(s, cfg))
import flexhull.subproblem as sp
orig = cp.Problem.solve
def patched(self, *a, **kw):
    try:
        out = orig(self, *a, **kw)
        print("   solve:", kw.get("solver"), self.status, flush=True)
        return out
    except Exception as ex:
        print("   solve RAISE:", kw.get("solver"), type(ex).__name__, str(ex)[:200], flush=True)
        raise
cp.Problem.solve = patched
try:
    ell, logdet = master.solve(CutPool())
    print("master ok", logdet)
except Exception as ex:
    print("master fail:", type(ex).__name__, ex)
