import sys
sys.path.insert(0, 'src')
import numpy as np
from flexhull.feeder import load_feeder
from flexhull.ders import load_fleet, UncertaintyModel, sample_uncertainty
from flexhull.compact import assemble, nominal_substation_trajectory, recourse_check
from flexhull.validate import reference_topology

for name in ("ring8_t3", "ring8_t4"):
    path = f"src/flexhull/data/{name}.json"
    f = load_feeder(path)
    fleet = load_fleet(path, f)
    topo = reference_topology(f)
    for delta in (0.0, 0.05, 0.2):
        s = assemble(f, fleet, UncertaintyModel(delta), "fixed", topology=topo)
        p0 = nominal_substation_trajectory(s)
        worst = 0.0; worst_tag = None
        rng = np.random.default_rng(7)
        for i in range(40):
            z = sample_uncertainty(UncertaintyModel(delta), f.T, rng, "boundary")
            rc = recourse_check(s, p0, z)
            if rc.value > worst:
                worst = rc.value; worst_tag = rc.violations[0][0] if rc.violations else None
        print(f"{name} d={delta}: worst sampled slack {worst:.5f} at {worst_tag}")
