import numpy as np
import pytest

from conftest import data_path
from flexhull.compact import (assemble, dual_value, dump_matrices,
                              maximize_over_dual, nominal_substation_trajectory,
                              recourse_check)
from flexhull.ders import DerFleet, UncertaintyModel, load_fleet, sample_uncertainty
from flexhull.feeder import load_feeder, validate_radial
from flexhull.validate import reference_topology


@pytest.fixture(scope="module")
def ring6():
    path = data_path("ring6_t2.json")
    feeder = load_feeder(path)
    fleet = load_fleet(path, feeder)
    topo = reference_topology(feeder)
    sys = assemble(feeder, fleet, UncertaintyModel(0.05), "fixed", topology=topo)
    return feeder, fleet, sys


def test_smallest_assembly_shapes():
    path = data_path("es_single.json")
    feeder = load_feeder(path)
    fleet = load_fleet(path, feeder)
    sys = assemble(feeder, fleet, UncertaintyModel(0.0), "fixed",
                   topology=validate_radial(feeder, ()))
    assert sys.C is None
    assert sys.D.shape == (sys.n_rows, 3)  # 3T columns even when empty
    assert sys.D.nnz == 0
    eqs = {t.eq for t in sys.row_tags}
    assert {"es_band", "es_energy", "es_dynamics", "volt_box",
            "volt_drop", "sub_power", "slack_nonneg"} <= eqs
    assert sys.n_rows == 2 * sys.n_op
    # One +1 slack per operational row, priced in the objective.
    slack_cols = sys.n_cols - sys.n_op
    for r in range(sys.n_op):
        assert sys.A[r, slack_cols + r] == 1.0
        assert sys.A[sys.n_op + r, slack_cols + r] == 1.0
        assert sys.g[slack_cols + r] == 1.0


def test_reconfig_assembly_has_switch_columns(ring6):
    feeder, fleet, _ = ring6
    sys = assemble(feeder, fleet, UncertaintyModel(0.05), "reconfig")
    assert sys.C is not None and sys.C.shape[1] == 3
    bigm = [t for t in sys.row_tags if t.eq.endswith("_bigm")]
    assert len(bigm) == 3 * 2 * 2 * feeder.T  # switch, p/q, both sides


def test_uncertainty_column_count(ring6):
    _, _, sys = ring6
    assert sys.D.shape[1] == 3 * sys.T
    per_period = np.zeros(sys.T, dtype=int)
    for j in sorted(set(sys.D.tocoo().col)):
        per_period[j // 3] += 1
    assert all(per_period > 0)


def test_recourse_zero_at_nominal(ring6):
    _, _, sys = ring6
    rc = recourse_check(sys, nominal_substation_trajectory(sys))
    assert rc.value < 1e-9 and not rc.violations


def test_recourse_flags_capacity_violation(ring6):
    _, _, sys = ring6
    rc = recourse_check(sys, nominal_substation_trajectory(sys) + 10.0)
    assert rc.value > 1.0
    eqs = {tag.eq for tag, _ in rc.violations}
    assert eqs & {"p_balance", "sub_power"}


def test_paper_point_infeasible_on_123_like():
    # The reported infeasible demand vector: the direction (positive
    # violation) is the reproducible part, the magnitude is data-bound.
    path = data_path("ieee123_like.json")
    feeder = load_feeder(path)
    fleet = load_fleet(path, feeder)
    sys = assemble(feeder, fleet, UncertaintyModel(0.05), "fixed",
                   topology=reference_topology(feeder))
    rc = recourse_check(sys, np.array([0.297, 1.000, 0.800, 0.416]))
    assert rc.value > 1e-3
    assert rc.violations


def test_strong_duality_sampled(ring6):
    _, _, sys = ring6
    rng = np.random.default_rng(5)
    guess = nominal_substation_trajectory(sys)
    for _ in range(20):
        p0 = guess + rng.normal(size=sys.T) * 0.3
        zeta = sample_uncertainty(sys.uncertainty, sys.T, rng, "interior")
        primal = recourse_check(sys, p0, zeta).value
        dual, y = dual_value(sys, p0, zeta)
        assert abs(primal - dual) <= 1e-8 * max(1.0, abs(primal))
        assert y.min() >= -1e-9 and y.max() <= 1.0 + 1e-9


def test_complete_recourse_never_infeasible(ring6):
    _, _, sys = ring6
    rng = np.random.default_rng(9)
    for _ in range(10):
        p0 = rng.normal(size=sys.T) * 5.0
        zeta = sample_uncertainty(sys.uncertainty, sys.T, rng, "boundary")
        rc = recourse_check(sys, p0, zeta)
        assert np.isfinite(rc.value) and rc.value >= -1e-9


def test_registry_roundtrip(ring6):
    _, _, sys = ring6
    assert len(set(sys.row_tags)) == sys.n_rows
    assert len(set(sys.col_tags)) == sys.n_cols
    coo = sys.A.tocoo()
    for r, c in zip(coo.row[:500], coo.col[:500]):
        assert sys.row_tags[r] is not None and sys.col_tags[c] is not None
    # Every coupling row of B and D is a tagged balance-side row.
    for r in sorted(set(sys.D.tocoo().row)):
        assert sys.row_tags[r].eq in ("p_balance", "q_balance")
    for r in np.nonzero(np.any(sys.B != 0.0, axis=1))[0]:
        assert sys.row_tags[r].eq == "sub_power"


def test_mirror_pairs_negate_exactly(ring6):
    _, _, sys = ring6
    A = sys.A.toarray()
    n_slack = sys.n_cols - sys.n_op
    assert sys.pair_rows
    for r_plus, r_minus in sys.pair_rows:
        assert np.allclose(A[r_plus, :n_slack], -A[r_minus, :n_slack])
        assert abs(sys.d[r_plus] + sys.d[r_minus]) < 1e-12
        assert np.allclose(sys.B[r_plus], -sys.B[r_minus])
        assert np.allclose(sys.D[r_plus].toarray(), -sys.D[r_minus].toarray())


def test_dual_box_bound_sampled(ring6):
    _, _, sys = ring6
    rng = np.random.default_rng(13)
    for r in rng.choice(sys.n_rows, size=12, replace=False):
        e = np.zeros(sys.n_rows)
        e[r] = 1.0
        hi, _ = maximize_over_dual(sys, e)
        assert hi <= 1.0 + 1e-9


def test_dump_matrices(tmp_path, ring6):
    _, _, sys = ring6
    files = dump_matrices(sys, tmp_path / "mats")
    names = {f.split("/")[-1] for f in files}
    assert {"A.mtx", "B.mtx", "D.mtx", "d.mtx", "g.mtx", "registry.csv"} <= names
    from scipy.io import mmread

    a2 = mmread(str(tmp_path / "mats" / "A.mtx"))
    assert a2.shape == sys.A.shape
    assert np.allclose(a2.toarray(), sys.A.toarray())
