import numpy as np
import pytest
from scipy.optimize import linprog

from conftest import data_path
from flexhull.ders import (DerError, DerSpec, EsParams, EvParams, HvacParams,
                           LoadParams, PvParams, UncertaintyModel,
                           der_polytope_rows, load_fleet, polytope_nonempty,
                           sample_uncertainty, uncertainty_columns)
from flexhull.feeder import load_feeder
from flexhull.rows import ColTag, RowTag


def hvac_spec(T=3, beta=-0.01, theta_out=35.0, theta_init=22.0, alpha=0.9):
    return DerSpec(kind="hvac", bus=1, params=HvacParams(
        p_min=(0.0,) * T, p_max=(8.0,) * T,
        theta_min=(-100.0,) * T, theta_max=(100.0,) * T,
        theta_out=(theta_out,) * T, theta_init=theta_init,
        alpha=alpha, beta=beta))


def solve_block(blk, fix=None):
    """Feasibility point of a row block with optional fixed columns."""
    cols = {c: j for j, c in enumerate(blk.columns)}
    n = len(cols)
    a = np.zeros((len(blk.rows), n))
    rhs = np.zeros(len(blk.rows))
    for r, row in enumerate(blk.rows):
        for col, v in row.coeffs.items():
            a[r, cols[col]] = v
        rhs[r] = row.rhs
    bounds = [(None, None)] * n
    if fix:
        for col, val in fix.items():
            bounds[cols[col]] = (val, val)
    res = linprog(np.zeros(n), A_ub=-a, b_ub=-rhs, bounds=bounds, method="highs")
    return res, cols


def test_hvac_dynamics_substitution():
    # theta = 0.9*35 + 0.1*22 - (-0.01)(-5) = 33.65
    spec = hvac_spec(T=1)
    blk = der_polytope_rows(spec, 0, 1, 1.0)
    res, cols = solve_block(blk, fix={ColTag("der_p", "der:0", 0): -5.0})
    assert res.status == 0
    theta = res.x[cols[ColTag("hvac_theta", "der:0", 0)]]
    assert abs(theta - 33.65) < 1e-9


def test_es_dynamics_substitution():
    # e = 0.9*0.5 - 1.0*0.1 = 0.35
    spec = DerSpec(kind="es", bus=1, params=EsParams(
        p_min=(-1.0,), p_max=(1.0,), e_min=(0.0,), e_max=(1.0,),
        e_init=0.5, eta=0.9))
    blk = der_polytope_rows(spec, 0, 1, 1.0)
    res, cols = solve_block(blk, fix={ColTag("der_p", "der:0", 0): 0.1})
    assert res.status == 0
    assert abs(res.x[cols[ColTag("es_soc", "der:0", 0)]] - 0.35) < 1e-9


def test_pv_zero_availability_pins_output():
    spec = DerSpec(kind="pv", bus=1, params=PvParams(p_avail=(0.0, 0.2)))
    blk = der_polytope_rows(spec, 0, 2, 1.0)
    res, cols = solve_block(blk, fix={ColTag("der_p", "der:0", 0): 0.01})
    assert res.status != 0  # x above availability is infeasible
    res, _ = solve_block(blk, fix={ColTag("der_p", "der:0", 0): 0.0})
    assert res.status == 0


@pytest.mark.parametrize("kind,rows_per_t", [
    ("pv", 2), ("load", 2), ("ev", 4), ("es", 6), ("hvac", 6),
])
def test_row_counts_per_kind(kind, rows_per_t):
    T = 3
    params = {
        "pv": PvParams(p_avail=(0.1,) * T),
        "load": LoadParams(p_min=(0.0,) * T, p_max=(0.1,) * T),
        "ev": EvParams(p_min=(0.0,) * T, p_max=(0.1,) * T,
                       e_cum_min=(0.0, 0.0, 0.1), e_cum_max=(0.1, 0.2, 0.3)),
        "es": EsParams(p_min=(-0.1,) * T, p_max=(0.1,) * T, e_min=(0.0,) * T,
                       e_max=(1.0,) * T, e_init=0.5, eta=0.9),
        "hvac": hvac_spec(T).params,
    }[kind]
    blk = der_polytope_rows(DerSpec(kind=kind, bus=1, params=params), 0, T, 1.0)
    assert len(blk.rows) == rows_per_t * T


def test_hvac_idle_follows_exponential_smoothing():
    # With x = 0 the indoor temperature is the smoothing recursion of the
    # (constant) ambient; closed form theta_t = out + (init-out)(1-a)^t.
    T, alpha, out, init = 5, 0.8, 30.0, 20.0
    spec = hvac_spec(T=T, beta=-0.01, theta_out=out, theta_init=init, alpha=alpha)
    blk = der_polytope_rows(spec, 0, T, 1.0)
    fix = {ColTag("der_p", "der:0", t): 0.0 for t in range(T)}
    res, cols = solve_block(blk, fix=fix)
    assert res.status == 0
    for t in range(T):
        expect = out + (init - out) * (1 - alpha) ** (t + 1)
        got = res.x[cols[ColTag("hvac_theta", "der:0", t)]]
        assert abs(got - expect) < 1e-8


def test_es_with_full_retention_matches_ev_band_rows():
    # eta = 1 makes the stored energy a pure cumulative sum: the energy
    # window rows must match an EV band built from the same telescoping.
    T, tau, e0 = 3, 1.0, 0.5
    e_lo, e_hi = 0.2, 0.8
    es = DerSpec(kind="es", bus=1, params=EsParams(
        p_min=(-0.1,) * T, p_max=(0.1,) * T, e_min=(e_lo,) * T,
        e_max=(e_hi,) * T, e_init=e0, eta=1.0))
    ev = DerSpec(kind="ev", bus=1, params=EvParams(
        p_min=(-0.1,) * T, p_max=(0.1,) * T,
        e_cum_min=(e_lo - e0,) * T, e_cum_max=(e_hi - e0,) * T))
    for x in ([0.1, -0.05, 0.02], [0.3, 0.0, 0.0], [-0.1, -0.1, -0.1]):
        def feasible(spec):
            blk = der_polytope_rows(spec, 0, T, tau)
            fix = {ColTag("der_p", "der:0", t): x[t] for t in range(T)}
            res, _ = solve_block(blk, fix=fix)
            return res.status == 0
        assert feasible(es) == feasible(ev)


def test_polytope_nonempty_on_shipped_fleets():
    for name in ("ring6_t2.json", "ring8_t4.json", "medium16.json",
                 "ieee123_like.json"):
        feeder = load_feeder(data_path(name))
        fleet = load_fleet(data_path(name), feeder)
        for spec in fleet:
            assert polytope_nonempty(spec, feeder.T, feeder.tau), (name, spec)


def test_fleet_rejects_substation_devices(tmp_path):
    import json

    case = json.load(open(data_path("es_single.json")))
    case["ders"][0]["bus"] = 0
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(case))
    feeder = load_feeder(str(p))
    with pytest.raises(DerError, match="load bus"):
        load_fleet(str(p), feeder)


def test_uncertainty_columns_zero_delta_empty():
    feeder = load_feeder(data_path("ring6_t2.json"))
    assert uncertainty_columns(feeder, UncertaintyModel(0.0)) == {}


def test_uncertainty_columns_amplitudes():
    # A 0.2 p.u. load at 5% uncertainty swings by 0.01; the reactive row
    # scales by the bus power-factor tangent. Column layout is one triple
    # of categories per period.
    feeder = load_feeder(data_path("two_bus.json"))
    u = UncertaintyModel(0.05)
    cols = uncertainty_columns(feeder, u)
    b = feeder.buses[1]
    tag = RowTag("p_balance", "bus:1", 0, +1)
    j = u.col(b.category, 0)
    assert abs(cols[tag][j] + 0.05 * b.nominal_p[0]) < 1e-12
    qtag = RowTag("q_balance", "bus:1", 0, -1)
    assert abs(cols[qtag][j] - 0.05 * b.nominal_p[0] * b.tan_phi) < 1e-12
    assert u.n_cols(feeder.T) == 3 * feeder.T
    assert u.col("com", 2) == 2 * 3 + 1


def test_sampler_boundary_norms():
    u = UncertaintyModel(0.1)
    z = sample_uncertainty(u, 4, 42, mode="boundary")
    for t in range(4):
        assert abs(np.linalg.norm(z[3 * t:3 * t + 3]) - 1.0) < 1e-12


def test_sampler_interior_norms_bounded():
    u = UncertaintyModel(0.1)
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(10_000):
        z = sample_uncertainty(u, 2, rng, mode="interior")
        for t in range(2):
            worst = max(worst, float(np.linalg.norm(z[3 * t:3 * t + 3])))
    assert worst <= 1.0 + 1e-12


def test_sampler_zero_deviation_means_nominal():
    feeder = load_feeder(data_path("two_bus.json"))
    u = UncertaintyModel(0.05)
    cols = uncertainty_columns(feeder, u)
    zeta = np.zeros(u.n_cols(feeder.T))
    for coldict in cols.values():
        assert sum(v * zeta[j] for j, v in coldict.items()) == 0.0
