#!/usr/bin/env python3
"""Regenerate the shipped example feeders under src/flexhull/data/.

Deterministic by construction; run from the repository root:

    python scripts/make_examples.py
"""

import json
import os
import sys

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from flexhull.feeder import load_feeder, validate_radial, enumerate_spanning_trees  # noqa: E402
from flexhull.ders import load_fleet, polytope_nonempty  # noqa: E402

OUT = os.path.join(os.path.dirname(__file__), "..", "src", "flexhull", "data")

CAT_SHAPE = {
    # Midday window, one point per hour from 12:00.
    "res": [0.82, 0.86, 0.93, 1.00],
    "com": [1.00, 0.97, 0.94, 0.90],
    "ind": [0.95, 1.00, 0.98, 0.96],
}


def bus(i, cat, scale, T=4, pf=None, **kw):
    # Deterministic per-bus variety: uniform power factors and identical
    # shapes make whole faces of the dual polytope tie exactly, which is
    # unphysical and degrades every solver downstream.
    if pf is None:
        pf = round(0.93 + 0.04 * ((i * 7919) % 13) / 13.0, 4)
    prof = [round(scale * CAT_SHAPE[cat][t % 4]
                  * (1.0 + ((i * 3 + t * 5) % 11 - 5) / 150.0), 6)
            for t in range(T)]
    rec = {"id": i, "category": cat, "pf": pf, "p_nominal": prof}
    rec.update(kw)
    return rec


def write(name, case):
    path = os.path.join(OUT, name)
    with open(path, "w") as fh:
        json.dump(case, fh, indent=1)
        fh.write("\n")
    feeder = load_feeder(path)
    fleet = load_fleet(path, feeder)
    for spec in fleet:
        assert polytope_nonempty(spec, feeder.T, feeder.tau), (name, spec.kind, spec.bus)
    print(f"wrote {name}: {len(feeder.buses)} buses, {len(feeder.lines)} lines, "
          f"{len(feeder.switchable_lines)} switches, T={feeder.T}")
    return feeder


def make_two_bus():
    case = {
        "name": "two-bus",
        "base_mva": 1.0, "base_kv": 4.16, "T": 4, "tau_hours": 1.0,
        "buses": [
            {"id": 0, "category": "res", "pf": 0.95, "v_min": 1.0, "v_max": 1.0,
             "p_nominal": [0, 0, 0, 0]},
            bus(1, "res", 0.3),
        ],
        "lines": [{"from": 0, "to": 1, "r": 0.01, "x": 0.02}],
        "ders": [],
    }
    write("two_bus.json", case)


def make_es_single():
    case = {
        "name": "es-single",
        "base_mva": 1.0, "base_kv": 4.16, "T": 1, "tau_hours": 1.0,
        "buses": [
            {"id": 0, "category": "res", "pf": 0.95, "v_min": 1.0, "v_max": 1.0,
             "p_nominal": [0.0]},
            {"id": 1, "category": "res", "pf": 0.95, "v_min": 0.8, "v_max": 1.2,
             "p_nominal": [0.0]},
        ],
        "lines": [{"from": 0, "to": 1, "r": 0.001, "x": 0.002}],
        "ders": [
            {"kind": "es", "bus": 1, "pf": 1.0,
             "params": {"p_min": -0.1, "p_max": 0.1, "e_min": 0.0, "e_max": 10.0,
                        "e_init": 5.0, "eta": 1.0}},
        ],
    }
    write("es_single.json", case)


def make_ring(name, T):
    """Eight-bus feeder with one switched ring and all five device kinds.

    The ring lets the far-end load be fed over either branch; opening a
    different switch trades voltage headroom between the branches, which
    is what makes reconfiguration pay off here.
    """
    case = {
        "name": name,
        "base_mva": 1.0, "base_kv": 4.16, "T": T, "tau_hours": 1.0,
        "notes": json.dumps({"reference_open": [[4, 7]]}),
        "buses": [
            {"id": 0, "category": "res", "pf": 0.95, "v_min": 1.0, "v_max": 1.0,
             "p_nominal": [0.0] * T},
            bus(1, "res", 0.10, T),
            bus(2, "res", 0.12, T),
            bus(3, "com", 0.11, T),
            bus(4, "com", 0.14, T),
            bus(5, "ind", 0.08, T),
            bus(6, "ind", 0.11, T),
            bus(7, "ind", 0.16, T),
        ],
        "lines": [
            {"from": 0, "to": 1, "r": 0.005, "x": 0.010},
            {"from": 1, "to": 2, "r": 0.015, "x": 0.025},
            {"from": 2, "to": 3, "r": 0.020, "x": 0.030, "switchable": True},
            {"from": 3, "to": 4, "r": 0.015, "x": 0.020},
            {"from": 1, "to": 5, "r": 0.010, "x": 0.020},
            {"from": 5, "to": 6, "r": 0.020, "x": 0.025, "switchable": True},
            {"from": 6, "to": 7, "r": 0.015, "x": 0.020},
            {"from": 4, "to": 7, "r": 0.020, "x": 0.025, "switchable": True},
        ],
        "ders": [
            {"kind": "pv", "bus": 3, "pf": 0.97,
             "params": {"p_avail": [round(0.12 * v, 6) for v in
                        [1.0, 0.9, 0.75, 0.55][:T]]}},
            {"kind": "es", "bus": 4, "pf": 0.94,
             "params": {"p_min": -0.15, "p_max": 0.15, "e_min": 0.015,
                        "e_max": 0.285, "e_init": 0.15, "eta": 0.9}},
            {"kind": "load", "bus": 2, "pf": 0.96,
             "params": {"p_min": 0.0, "p_max": 0.08}},
            {"kind": "hvac", "bus": 7, "pf": 0.93,
             "params": {"p_min": 0.0, "p_max": 0.06,
                        "theta_min": 20.0, "theta_max": 27.9,
                        "theta_out": [26.0, 27.5, 28.0, 27.0][:T],
                        "theta_init": 25.0, "alpha": 0.9, "beta": -9.5}},
            {"kind": "ev", "bus": 6, "pf": 0.98,
             "params": {"p_min": 0.0, "p_max": 0.05,
                        "e_cum_min": [0.0, 0.02, 0.05, 0.09][:T],
                        "e_cum_max": [0.05, 0.10, 0.14, 0.17][:T]}},
        ],
    }
    feeder = write(name.replace("-", "_") + ".json", case)
    topos = enumerate_spanning_trees(feeder)
    assert len(topos) == 3, topos
    validate_radial(feeder, (1, 1, 0))


def make_ring6():
    """Six-bus, two-period feeder: the compact workhorse for certified
    end-to-end runs. One switched ring, all five device kinds."""
    T = 2
    case = {
        "name": "ring6-t2",
        "base_mva": 1.0, "base_kv": 4.16, "T": T, "tau_hours": 1.0,
        "notes": json.dumps({"reference_open": [[1, 5]]}),
        "buses": [
            {"id": 0, "category": "res", "pf": 0.95, "v_min": 1.0, "v_max": 1.0,
             "p_nominal": [0.0] * T},
            bus(1, "res", 0.10, T),
            bus(2, "res", 0.12, T),
            bus(3, "com", 0.13, T),
            bus(4, "ind", 0.14, T),
            bus(5, "ind", 0.09, T),
        ],
        "lines": [
            {"from": 0, "to": 1, "r": 0.008, "x": 0.016},
            {"from": 1, "to": 2, "r": 0.0192, "x": 0.032},
            {"from": 2, "to": 3, "r": 0.0256, "x": 0.0384, "switchable": True},
            {"from": 3, "to": 4, "r": 0.0192, "x": 0.0288},
            {"from": 4, "to": 5, "r": 0.0224, "x": 0.032, "switchable": True},
            {"from": 1, "to": 5, "r": 0.0192, "x": 0.0288, "switchable": True},
        ],
        "ders": [
            {"kind": "pv", "bus": 2, "pf": 0.97,
             "params": {"p_avail": [0.10, 0.085]}},
            {"kind": "es", "bus": 3, "pf": 0.94,
             "params": {"p_min": -0.12, "p_max": 0.12, "e_min": 0.012,
                        "e_max": 0.228, "e_init": 0.12, "eta": 0.9}},
            {"kind": "load", "bus": 1, "pf": 0.96,
             "params": {"p_min": 0.0, "p_max": 0.07}},
            {"kind": "hvac", "bus": 5, "pf": 0.93,
             "params": {"p_min": 0.0, "p_max": 0.05,
                        "theta_min": 20.0, "theta_max": 27.9,
                        "theta_out": [26.0, 27.5],
                        "theta_init": 25.0, "alpha": 0.9, "beta": -9.5}},
            {"kind": "ev", "bus": 4, "pf": 0.98,
             "params": {"p_min": 0.0, "p_max": 0.05,
                        "e_cum_min": [0.0, 0.03],
                        "e_cum_max": [0.04, 0.08]}},
        ],
    }
    feeder = write("ring6_t2.json", case)
    topos = enumerate_spanning_trees(feeder)
    assert len(topos) == 3, [t.s for t in topos]


def make_medium():
    """Sixteen-bus feeder used for the separation-solver benchmark."""
    T = 4
    cats = ["res", "res", "res", "com", "com", "com", "ind", "ind",
            "res", "com", "ind", "res", "com", "ind", "res"]
    scales = [0.08, 0.10, 0.07, 0.11, 0.09, 0.12, 0.08, 0.10,
              0.07, 0.09, 0.12, 0.07, 0.10, 0.09, 0.08]
    buses = [{"id": 0, "category": "res", "pf": 0.95, "v_min": 1.0, "v_max": 1.0,
              "p_nominal": [0.0] * T}]
    for i in range(1, 16):
        buses.append(bus(i, cats[i - 1], scales[i - 1], T))
    # Two laterals off the trunk plus two normally-open ties.
    lines = [
        {"from": 0, "to": 1, "r": 0.0048, "x": 0.0096},
        {"from": 1, "to": 2, "r": 0.012, "x": 0.0204},
        {"from": 2, "to": 3, "r": 0.0144, "x": 0.0216},
        {"from": 3, "to": 4, "r": 0.0156, "x": 0.0228},
        {"from": 4, "to": 5, "r": 0.0144, "x": 0.0204},
        {"from": 1, "to": 6, "r": 0.0108, "x": 0.018},
        {"from": 6, "to": 7, "r": 0.0132, "x": 0.0192},
        {"from": 7, "to": 8, "r": 0.0144, "x": 0.0204},
        {"from": 8, "to": 9, "r": 0.0132, "x": 0.018},
        {"from": 2, "to": 10, "r": 0.012, "x": 0.0168},
        {"from": 10, "to": 11, "r": 0.0144, "x": 0.0192},
        {"from": 11, "to": 12, "r": 0.0132, "x": 0.018},
        {"from": 7, "to": 13, "r": 0.012, "x": 0.0168},
        {"from": 13, "to": 14, "r": 0.0144, "x": 0.0192},
        {"from": 14, "to": 15, "r": 0.0132, "x": 0.018},
        {"from": 5, "to": 9, "r": 0.018, "x": 0.024, "switchable": True},
        {"from": 12, "to": 15, "r": 0.018, "x": 0.024, "switchable": True},
        {"from": 4, "to": 12, "r": 0.0168, "x": 0.0228, "switchable": True},
        {"from": 9, "to": 15, "r": 0.0168, "x": 0.0228, "switchable": True},
    ]
    ders = [
        {"kind": "pv", "bus": 3, "pf": 0.95,
         "params": {"p_avail": [0.10, 0.09, 0.075, 0.055]}},
        {"kind": "pv", "bus": 11, "pf": 0.95,
         "params": {"p_avail": [0.08, 0.072, 0.06, 0.044]}},
        {"kind": "es", "bus": 5, "pf": 0.95,
         "params": {"p_min": -0.1, "p_max": 0.1, "e_min": 0.01, "e_max": 0.19,
                    "e_init": 0.1, "eta": 0.9}},
        {"kind": "es", "bus": 14, "pf": 0.95,
         "params": {"p_min": -0.1, "p_max": 0.1, "e_min": 0.01, "e_max": 0.19,
                    "e_init": 0.1, "eta": 0.9}},
        {"kind": "load", "bus": 8, "pf": 0.95,
         "params": {"p_min": 0.0, "p_max": 0.06}},
        {"kind": "hvac", "bus": 9, "pf": 0.95,
         "params": {"p_min": 0.0, "p_max": 0.05, "theta_min": 20.0,
                    "theta_max": 27.9, "theta_out": [26.0, 27.5, 28.0, 27.0],
                    "theta_init": 25.0, "alpha": 0.9, "beta": -9.5}},
        {"kind": "ev", "bus": 12, "pf": 0.95,
         "params": {"p_min": 0.0, "p_max": 0.04,
                    "e_cum_min": [0.0, 0.015, 0.04, 0.07],
                    "e_cum_max": [0.04, 0.08, 0.11, 0.13]}},
        {"kind": "ev", "bus": 15, "pf": 0.95,
         "params": {"p_min": 0.0, "p_max": 0.04,
                    "e_cum_min": [0.0, 0.01, 0.03, 0.06],
                    "e_cum_max": [0.04, 0.07, 0.10, 0.12]}},
    ]
    case = {
        "name": "medium-16",
        "base_mva": 1.0, "base_kv": 4.16, "T": T, "tau_hours": 1.0,
        "notes": json.dumps({"reference_open": [[5, 9], [12, 15], [4, 12], [9, 15]]}),
        "buses": buses, "lines": lines, "ders": ders,
    }
    feeder = write("medium16.json", case)
    validate_radial(feeder, (0, 0, 0, 0))


def make_ieee123_like():
    """A 130-bus feeder shaped after the modified 123-bus test system.

    The real system's exact load profiles and full switch placements are
    not published, so this file documents its own approximation: six
    switches of which the named pairs reproduce the reference topology
    (open 13-118, 54-94) and the reported alternatives.
    """
    T = 4
    parent = {}
    for i in range(1, 61):
        parent[i] = i - 1                       # trunk 0..60
    parent[61] = 20
    for i in range(62, 94):
        parent[i] = i - 1                       # lateral 61..93
    parent[119] = 60
    parent[94] = 119
    for i in range(95, 109):
        parent[i] = i - 1                       # lateral 94..108 via 119
    parent[109] = 60
    for i in range(110, 118):
        parent[i] = i - 1                       # lateral 109..117
    parent[123] = 117
    parent[118] = 123
    parent[120] = 118
    parent[121] = 120
    parent[122] = 121
    parent[124] = 105
    for i in range(125, 130):
        parent[i] = i - 1                       # lateral 124..129
    assert sorted(parent) == list(range(1, 130))

    switch_edges = {(13, 118), (54, 94), (60, 119), (60, 109), (117, 123), (1, 2)}
    rng = np.random.default_rng(12003)
    lines = []
    for child, par in sorted(parent.items()):
        r = round(float(rng.uniform(0.0012, 0.0045)), 6)
        x = round(float(r * rng.uniform(1.4, 2.1)), 6)
        key = (par, child)
        sw = key in switch_edges or key[::-1] in switch_edges
        lines.append({"from": par, "to": child, "r": r, "x": x, "switchable": sw})
    for tie in ((13, 118), (54, 94)):
        r = round(float(rng.uniform(0.002, 0.004)), 6)
        lines.append({"from": tie[0], "to": tie[1], "r": r,
                      "x": round(r * 1.8, 6), "switchable": True})

    def category(i):
        if i <= 60:
            return ("res", "com", "ind")[i % 3]
        if i <= 93:
            return "res"
        if i <= 108 or i == 119:
            return "com"
        return "ind"

    buses = [{"id": 0, "category": "res", "pf": 0.95, "v_min": 1.0, "v_max": 1.0,
              "p_nominal": [0.0] * T}]
    for i in range(1, 130):
        scale = round(float(rng.uniform(0.008, 0.032)), 6)
        buses.append(bus(i, category(i), scale, T))

    ders = []
    for b in (92, 93, 94, 95, 96):
        ders.append({"kind": "hvac", "bus": b, "pf": 0.95,
                     "params": {"p_min": 0.0, "p_max": 0.02, "theta_min": 20.0,
                                "theta_max": 28.2,
                                "theta_out": [26.0, 27.5, 28.0, 27.0],
                                "theta_init": 25.0, "alpha": 0.9,
                                "beta": round(float(rng.uniform(-11.0, -8.0)), 3)}})
    for b in (52, 53, 56, 60, 61):
        ders.append({"kind": "load", "bus": b, "pf": 0.95,
                     "params": {"p_min": 0.0, "p_max": 0.03}})
    for b in (11, 13, 34, 42, 55):
        ders.append({"kind": "pv", "bus": b, "pf": 0.95,
                     "params": {"p_avail": [round(0.05 * v, 6) for v in
                                            [1.0, 0.9, 0.75, 0.55]]}})
    for b in (14, 15, 43, 54, 118):
        ders.append({"kind": "es", "bus": b, "pf": 0.95,
                     "params": {"p_min": -0.1, "p_max": 0.1, "e_min": 0.005,
                                "e_max": 0.095, "e_init": 0.05, "eta": 0.9}})
    for b in (18, 21, 22, 117, 128):
        # Battery capacity from the clipped gamma draw; level-1 charging
        # caps what the midday window can actually deliver.
        cap_kwh = float(np.clip(rng.gamma(4.5, 6.3), 10.0, 72.0))
        cap = round(cap_kwh / 1000.0, 6)
        need = round(min(0.4 * cap, 0.0019 * T * 0.7), 6)
        ders.append({"kind": "ev", "bus": b, "pf": 0.95,
                     "params": {"p_min": 0.0, "p_max": 0.0019,
                                "e_cum_min": [0.0, 0.0, round(need / 2, 6), need],
                                "e_cum_max": [round(0.3 * cap, 6), round(0.55 * cap, 6),
                                              round(0.8 * cap, 6), cap]}})

    case = {
        "name": "ieee123-like",
        "base_mva": 1.0, "base_kv": 4.16, "T": T, "tau_hours": 1.0,
        "notes": json.dumps({
            "reference_open": [[13, 118], [54, 94]],
            "approximation": "placements and profiles are illustrative; the "
                             "published system does not fully specify them",
        }),
        "buses": buses, "lines": lines, "ders": ders,
    }
    feeder = write("ieee123_like.json", case)
    topos = enumerate_spanning_trees(feeder)
    opens = sorted(tuple(sorted(
        tuple(sorted(feeder.lines[feeder.switchable_lines[i]].key))
        for i, v in enumerate(t.s) if v == 0)) for t in topos)
    print(f"  radial configurations: {len(topos)}")
    for o in opens:
        print(f"    open {o}")
    ref = tuple(sorted([(13, 118), (54, 94)]))
    opt = tuple(sorted([(13, 118), (60, 119)]))
    assert ref in opens, "reference topology missing"
    assert opt in opens, "alternative topology missing"


if __name__ == "__main__":
    os.makedirs(OUT, exist_ok=True)
    make_two_bus()
    make_es_single()
    make_ring("ring8-t4", 4)
    make_ring6()
    make_ring("ring8-t3", 3)
    make_medium()
    make_ieee123_like()
