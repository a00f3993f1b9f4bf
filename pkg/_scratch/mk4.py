import json
case = {
  "name": "ring4", "base_mva": 1.0, "base_kv": 4.16, "T": 2, "tau_hours": 1.0,
  "buses": [
    {"id": 0, "category": "res", "pf": 0.95, "v_min": 1.0, "v_max": 1.0, "p_nominal": [0,0]},
    {"id": 1, "category": "res", "pf": 0.95, "p_nominal": [0.3, 0.2]},
    {"id": 2, "category": "com", "pf": 0.95, "p_nominal": [0.1, 0.15]},
    {"id": 3, "category": "ind", "pf": 0.95, "p_nominal": [0.2, 0.2]}
  ],
  "lines": [
    {"from": 0, "to": 1, "r": 0.02, "x": 0.04},
    {"from": 1, "to": 2, "r": 0.04, "x": 0.06, "switchable": True},
    {"from": 2, "to": 3, "r": 0.04, "x": 0.04, "switchable": True},
    {"from": 1, "to": 3, "r": 0.06, "x": 0.06, "switchable": True}
  ],
  "ders": [
    {"kind": "es", "bus": 2, "pf": 0.95, "params": {"p_min": -0.2, "p_max": 0.2, "e_min": 0.0, "e_max": 0.4, "e_init": 0.2, "eta": 0.95}},
    {"kind": "pv", "bus": 3, "pf": 0.95, "params": {"p_avail": [0.15, 0.1]}},
    {"kind": "load", "bus": 1, "pf": 0.95, "params": {"p_min": 0.0, "p_max": 0.1}}
  ]
}
json.dump(case, open('_scratch/smoke4.json','w'))
