import sys, json, time
sys.path.insert(0, 'src')
import numpy as np
from flexhull import *
from flexhull.feeder import load_feeder, validate_radial
from flexhull.ders import load_fleet, UncertaintyModel
from flexhull.compact import assemble

# --- 1-ES analytic case ---
case = {
  "name": "es-single", "base_mva": 1.0, "base_kv": 4.16, "T": 1, "tau_hours": 1.0,
  "buses": [
    {"id": 0, "category": "res", "pf": 0.95, "v_min": 1.0, "v_max": 1.0, "p_nominal": [0.0]},
    {"id": 1, "category": "res", "pf": 0.95, "v_min": 0.8, "v_max": 1.2, "p_nominal": [0.0]}
  ],
  "lines": [{"from": 0, "to": 1, "r": 0.001, "x": 0.002}],
  "ders": [{"kind": "es", "bus": 1, "pf": 1.0, "params": {"p_min": -0.1, "p_max": 0.1,
            "e_min": 0.0, "e_max": 10.0, "e_init": 5.0, "eta": 1.0}}]
}
with open('_scratch/es1.json','w') as fh: json.dump(case, fh)
f = load_feeder('_scratch/es1.json')
fleet = load_fleet('_scratch/es1.json', f)
u = UncertaintyModel(delta=0.0)
top = validate_radial(f, ())
s = assemble(f, fleet, u, "fixed", topology=top)
t0=time.time()
res = run(s, BendersConfig(verbose=True))
print("1-ES: Q=%.8f c=%.2e iters=%d certified=%s %.1fs" % (res.ellipsoid.Q[0,0], res.ellipsoid.c[0], res.iterations, res.certified, time.time()-t0))
assert abs(res.ellipsoid.Q[0,0] - 0.01) < 1e-6, "Q mismatch"
assert abs(res.ellipsoid.c[0]) < 1e-6, "c mismatch"
print("analytic case OK")
