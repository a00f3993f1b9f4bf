import json

import numpy as np
import pytest

from conftest import data_path
from flexhull.compact import assemble, recourse_check
from flexhull.ders import DerFleet, UncertaintyModel
from flexhull.feeder import (FeederError, RadialityError, enumerate_spanning_trees,
                             lindistflow_rows, load_feeder, validate_radial)


def write_case(tmp_path, case):
    p = tmp_path / "case.json"
    p.write_text(json.dumps(case))
    return str(p)


def minimal_case(**overrides):
    case = {
        "base_mva": 1.0, "base_kv": 4.16, "T": 1, "tau_hours": 1.0,
        "buses": [
            {"id": 0, "category": "res", "pf": 0.95, "v_min": 1.0, "v_max": 1.0,
             "p_nominal": [0.0]},
            {"id": 1, "category": "res", "pf": 0.95, "p_nominal": [0.2]},
        ],
        "lines": [{"from": 0, "to": 1, "r": 0.01, "x": 0.02}],
    }
    case.update(overrides)
    return case


def test_load_two_bus_file():
    feeder = load_feeder(data_path("two_bus.json"))
    assert feeder.n_load == 1
    assert feeder.lines[0].r == 0.01 and feeder.lines[0].x == 0.02
    assert feeder.T == 4


def test_load_123_like_has_six_switches():
    feeder = load_feeder(data_path("ieee123_like.json"))
    assert len(feeder.switchable_lines) == 6
    assert len(feeder.buses) == 130


def test_disconnected_rejected(tmp_path):
    case = minimal_case()
    case["buses"].append({"id": 2, "category": "res", "pf": 0.95, "p_nominal": [0.1]})
    with pytest.raises(FeederError, match="disconnected"):
        load_feeder(write_case(tmp_path, case))


def test_duplicate_line_rejected(tmp_path):
    case = minimal_case()
    case["lines"].append({"from": 1, "to": 0, "r": 0.01, "x": 0.01})
    with pytest.raises(FeederError, match="duplicate"):
        load_feeder(write_case(tmp_path, case))


def test_missing_substation_rejected(tmp_path):
    case = minimal_case()
    case["buses"] = case["buses"][1:]
    with pytest.raises(FeederError):
        load_feeder(write_case(tmp_path, case))


def test_substation_voltage_must_be_fixed(tmp_path):
    case = minimal_case()
    case["buses"][0]["v_min"] = 0.95
    case["buses"][0]["v_max"] = 1.05
    with pytest.raises(FeederError, match="fixed"):
        load_feeder(write_case(tmp_path, case))


def test_validate_radial_accepts_tree(tmp_path):
    # 4-bus ring with one switch open is a spanning tree by construction.
    case = minimal_case(T=1)
    case["buses"] = [case["buses"][0]] + [
        {"id": i, "category": "res", "pf": 0.95, "p_nominal": [0.1]}
        for i in (1, 2, 3)]
    case["lines"] = [
        {"from": 0, "to": 1, "r": 0.01, "x": 0.02},
        {"from": 1, "to": 2, "r": 0.01, "x": 0.02, "switchable": True},
        {"from": 2, "to": 3, "r": 0.01, "x": 0.02, "switchable": True},
        {"from": 3, "to": 1, "r": 0.01, "x": 0.02, "switchable": True},
    ]
    feeder = load_feeder(write_case(tmp_path, case))
    topo = validate_radial(feeder, (1, 1, 0))
    assert topo.s == (1, 1, 0)
    # Fictitious balance: substation sources N units, each load bus sinks one.
    assert topo.ell_node[0] == feeder.n_load
    assert all(v == -1.0 for v in topo.ell_node[1:])

    with pytest.raises(RadialityError, match="cardinality"):
        validate_radial(feeder, (1, 1, 1))


def test_validate_radial_disconnection_witness(tmp_path):
    # Correct switch count but an isolated bus: the flow balance is the
    # constraint family that fails, reported with the cut-off buses.
    case = minimal_case(T=1)
    case["buses"] = [case["buses"][0]] + [
        {"id": i, "category": "res", "pf": 0.95, "p_nominal": [0.1]}
        for i in (1, 2, 3, 4)]
    case["lines"] = [
        {"from": 0, "to": 1, "r": 0.01, "x": 0.02},
        {"from": 1, "to": 2, "r": 0.01, "x": 0.02, "switchable": True},
        {"from": 2, "to": 3, "r": 0.01, "x": 0.02, "switchable": True},
        {"from": 3, "to": 1, "r": 0.01, "x": 0.02, "switchable": True},
        {"from": 0, "to": 4, "r": 0.01, "x": 0.02, "switchable": True},
        {"from": 1, "to": 4, "r": 0.01, "x": 0.02, "switchable": True},
    ]
    feeder = load_feeder(write_case(tmp_path, case))
    with pytest.raises(RadialityError, match=r"cut off.*|\[4\]"):
        validate_radial(feeder, (1, 1, 1, 0, 0))


def test_validate_radial_reference_topology_123():
    feeder = load_feeder(data_path("ieee123_like.json"))
    open_set = {frozenset({13, 118}), frozenset({54, 94})}
    s = tuple(0 if frozenset(feeder.lines[i].key) in open_set else 1
              for i in feeder.switchable_lines)
    topo = validate_radial(feeder, s)
    assert sum(topo.s) == len(s) - 2


def test_enumerate_complete_graph_cayley(tmp_path):
    # Complete graph on 4 nodes, all lines switchable: 4^(4-2) = 16 trees.
    case = minimal_case(T=1)
    case["buses"] = [case["buses"][0]] + [
        {"id": i, "category": "res", "pf": 0.95, "p_nominal": [0.1]}
        for i in (1, 2, 3)]
    case["lines"] = [{"from": a, "to": b, "r": 0.01, "x": 0.02, "switchable": True}
                     for a in range(4) for b in range(a + 1, 4)]
    feeder = load_feeder(write_case(tmp_path, case))
    assert len(enumerate_spanning_trees(feeder)) == 16


def test_enumerate_radial_feeder_is_unique(tmp_path):
    feeder = load_feeder(write_case(tmp_path, minimal_case()))
    topos = enumerate_spanning_trees(feeder)
    assert len(topos) == 1 and topos[0].s == ()


def test_enumerate_123_contains_reference_and_alternative():
    feeder = load_feeder(data_path("ieee123_like.json"))
    topos = enumerate_spanning_trees(feeder)
    sw = feeder.switchable_lines
    open_sets = {frozenset(frozenset(feeder.lines[sw[i]].key)
                           for i, v in enumerate(t.s) if v == 0)
                 for t in topos}
    assert frozenset({frozenset({13, 118}), frozenset({54, 94})}) in open_sets
    assert frozenset({frozenset({13, 118}), frozenset({60, 119})}) in open_sets


def test_enumeration_cap(tmp_path):
    case = minimal_case(T=1)
    case["buses"] = [case["buses"][0]] + [
        {"id": i, "category": "res", "pf": 0.95, "p_nominal": [0.1]}
        for i in range(1, 8)]
    case["lines"] = [{"from": a, "to": b, "r": 0.01, "x": 0.02, "switchable": True}
                     for a in range(8) for b in range(a + 1, 8)]
    feeder = load_feeder(write_case(tmp_path, case))
    with pytest.raises(FeederError, match="cap"):
        enumerate_spanning_trees(feeder, cap=20)


def test_scf_matches_tree_enumeration_small(tmp_path):
    rng = np.random.default_rng(3)
    case = minimal_case(T=1)
    n = 5
    case["buses"] = [case["buses"][0]] + [
        {"id": i, "category": "res", "pf": 0.95, "p_nominal": [0.1]}
        for i in range(1, n)]
    edges = [(i - 1, i) for i in range(1, n)] + [(0, n - 1), (1, 3)]
    case["lines"] = [{"from": a, "to": b, "r": 0.01, "x": 0.02, "switchable": True}
                     for a, b in edges]
    feeder = load_feeder(write_case(tmp_path, case))
    by_graph = {t.s for t in enumerate_spanning_trees(feeder)}
    by_flow = set()
    import itertools
    for s in itertools.product((0, 1), repeat=len(edges)):
        try:
            validate_radial(feeder, s)
            by_flow.add(s)
        except RadialityError:
            pass
    assert by_graph == by_flow and len(by_graph) > 1


def test_lindistflow_two_bus_voltage():
    # v1 = v0 - 2 (r p + x q): with p=0.5, q=0.2, r=0.01, x=0.02 drop is 0.018.
    feeder = load_feeder(data_path("two_bus.json"))
    blk = lindistflow_rows(feeder, "fixed", topology=validate_radial(feeder, ()))
    rows = {str(r.tag): r for r in blk.rows}
    drop = rows["volt_drop[line:0-1,t=0,+]"]
    coeffs = {str(c): v for c, v in drop.coeffs.items()}
    v1 = 1.0 - 2.0 * (0.01 * 0.5 + 0.02 * 0.2)
    assert abs(v1 - 0.982) < 1e-12
    assert coeffs["voltage[bus:1,t=0]"] == 1.0
    assert coeffs["flow_p[line:0-1,t=0]"] == 2.0 * 0.01
    assert coeffs["flow_q[line:0-1,t=0]"] == 2.0 * 0.02
    assert drop.rhs == 1.0  # fixed substation voltage lands on the RHS


def test_zero_load_flat_voltage(tmp_path):
    # No loads, no devices: the only solution has every voltage at the
    # substation value and all flows at zero.
    case = minimal_case(T=1)
    case["buses"] = [case["buses"][0]] + [
        {"id": i, "category": "res", "pf": 0.95, "p_nominal": [0.0],
         "v_min": 0.9, "v_max": 1.1}
        for i in (1, 2, 3)]
    case["lines"] = [
        {"from": 0, "to": 1, "r": 0.01, "x": 0.02},
        {"from": 1, "to": 2, "r": 0.03, "x": 0.02},
        {"from": 2, "to": 3, "r": 0.02, "x": 0.04},
    ]
    feeder = load_feeder(write_case(tmp_path, case))
    sys = assemble(feeder, DerFleet(()), UncertaintyModel(0.0), "fixed",
                   topology=validate_radial(feeder, ()))
    rc = recourse_check(sys, np.zeros(1))
    assert rc.value < 1e-9
    for i in (1, 2, 3):
        v = rc.x[sys.column_index("voltage", f"bus:{i}", 0)]
        assert abs(v - 1.0) < 1e-7
    for ln in feeder.lines:
        fp = rc.x[sys.column_index("flow_p", f"line:{ln.from_bus}-{ln.to_bus}", 0)]
        assert abs(fp) < 1e-7


def test_path_feeder_voltage_telescopes(tmp_path):
    # The voltage at the end of a path equals the hand-telescoped drops.
    case = minimal_case(T=1)
    loads = [0.1, 0.15, 0.05]
    case["buses"] = [case["buses"][0]] + [
        {"id": i + 1, "category": "res", "pf": 0.95, "p_nominal": [loads[i]],
         "v_min": 0.8, "v_max": 1.1}
        for i in range(3)]
    rx = [(0.01, 0.02), (0.03, 0.02), (0.02, 0.04)]
    case["lines"] = [{"from": i, "to": i + 1, "r": rx[i][0], "x": rx[i][1]}
                     for i in range(3)]
    feeder = load_feeder(write_case(tmp_path, case))
    sys = assemble(feeder, DerFleet(()), UncertaintyModel(0.0), "fixed",
                   topology=validate_radial(feeder, ()))
    p0 = feeder.total_nominal_load()
    rc = recourse_check(sys, p0)
    assert rc.value < 1e-9
    tan_phi = feeder.buses[1].tan_phi
    v = 1.0
    down_p = [sum(loads[i:]) for i in range(3)]
    for i in range(3):
        v -= 2.0 * (rx[i][0] * down_p[i] + rx[i][1] * down_p[i] * tan_phi)
        got = rc.x[sys.column_index("voltage", f"bus:{i + 1}", 0)]
        assert abs(got - v) < 1e-7


def test_reconfig_big_m_deactivates_flows():
    feeder = load_feeder(data_path("ring6_t2.json"))
    sys = assemble(feeder, DerFleet(()), UncertaintyModel(0.0), "reconfig")
    p0 = feeder.total_nominal_load()
    rc = recourse_check(sys, p0, s=np.array([1.0, 1.0, 0.0]))
    assert rc.value < 1e-7
    # Open switch 1-5: its flow must be forced to zero.
    fp = rc.x[sys.column_index("flow_p", "line:1-5", 0)]
    fq = rc.x[sys.column_index("flow_q", "line:1-5", 0)]
    assert abs(fp) < 1e-7 and abs(fq) < 1e-7
