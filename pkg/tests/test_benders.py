import numpy as np
import pytest

from conftest import data_path, random_compact_system, random_ellipsoid
from flexhull.benders import (BendersConfig, BendersError, CutPool, DualExtremePoint,
                              Ellipsoid, evaluate_cut, run, solve_master,
                              support_ellipsoid, support_uncertainty)
from flexhull.compact import assemble
from flexhull.ders import DerFleet, UncertaintyModel, load_fleet
from flexhull.feeder import load_feeder, validate_radial
from flexhull.subproblem import build_instance, solve_subproblem


def test_support_ellipsoid_examples():
    assert support_ellipsoid(np.eye(2), np.zeros(2), [3.0, 4.0]) == pytest.approx(5.0)
    assert support_ellipsoid(np.diag([2.0, 5.0]), [1.0, -2.0], np.zeros(2)) == 0.0
    # axis-aligned: z^T c + sqrt(z^T Q z) = 1 + 2
    assert support_ellipsoid(np.diag([4.0, 1.0]), [1.0, 0.0], [1.0, 0.0]) \
        == pytest.approx(3.0)


def test_support_ellipsoid_rejects_asymmetric():
    with pytest.raises(BendersError, match="symmetric"):
        support_ellipsoid(np.array([[1.0, 0.5], [0.0, 1.0]]), np.zeros(2), np.ones(2))


def test_support_uncertainty_examples():
    z = np.array([3.0, 4.0, 0.0, 0.0, 0.0, 0.0])
    assert support_uncertainty(z) == pytest.approx(5.0)
    assert support_uncertainty(np.zeros(9)) == 0.0
    with pytest.raises(BendersError, match="divisible"):
        support_uncertainty(np.ones(7))


def test_support_uncertainty_dominates_sampled_inner_products():
    rng = np.random.default_rng(0)
    z = rng.normal(size=3)
    support = support_uncertainty(z)
    samples = rng.normal(size=(100_000, 3))
    samples /= np.linalg.norm(samples, axis=1, keepdims=True)
    best = float(np.max(samples @ z))
    assert support >= best > support - 1e-3


def _unit(rng, k):
    v = rng.normal(size=k)
    return v / np.linalg.norm(v)


def test_evaluate_cut_zero_data():
    sys = random_compact_system(0, n_op=4, n_x=2, T=1, b_scale=0.0, d_scale=0.0)
    sys.d[:] = 0.0
    y = np.zeros(sys.n_rows)
    y[sys.n_op:] = 1.0
    ext = DualExtremePoint.from_vertex(sys, y, 1)
    assert evaluate_cut(ext, np.eye(1), np.zeros(1)) == pytest.approx(0.0)


def test_evaluate_cut_matches_subproblem_value():
    sys = random_compact_system(3, n_op=6, n_x=3, T=2)
    Q, c = random_ellipsoid(3, 2)
    inst = build_instance(sys, Q, c)
    y, v, _ = solve_subproblem(inst, gap_tol=1e-6, time_cap=60)
    ext = DualExtremePoint.from_vertex(sys, y, 1)
    assert evaluate_cut(ext, Q, c) == pytest.approx(v, abs=1e-9)


def test_cut_pool_rejects_duplicates():
    sys = random_compact_system(1, n_op=4, n_x=2, T=1)
    y = np.zeros(sys.n_rows)
    y[sys.n_op:] = 1.0
    pool = CutPool()
    pool.add(DualExtremePoint.from_vertex(sys, y, 1))
    with pytest.raises(BendersError, match="duplicate"):
        pool.add(DualExtremePoint.from_vertex(sys, y, 2))


def test_vertex_quality_enforced():
    sys = random_compact_system(2, n_op=4, n_x=2, T=1)
    with pytest.raises(BendersError, match="vertex-quality"):
        DualExtremePoint.from_vertex(sys, np.ones(sys.n_rows), 1)


def test_ellipsoid_type():
    ell = Ellipsoid(Q=np.diag([4.0, 1.0]), c=np.array([1.0, 0.0]))
    assert ell.membership([1.0, 0.0]) == pytest.approx(0.0)
    assert ell.membership([3.0, 0.0]) == pytest.approx(1.0)
    assert ell.volume_index() == pytest.approx(2.0)
    with pytest.raises(BendersError, match="symmetric"):
        Ellipsoid(Q=np.array([[1.0, 0.3], [0.0, 1.0]]), c=np.zeros(2))


def test_empty_pool_master_returns_box_ellipsoid():
    path = data_path("es_single.json")
    feeder = load_feeder(path)
    fleet = load_fleet(path, feeder)
    sys = assemble(feeder, fleet, UncertaintyModel(0.0), "fixed",
                   topology=validate_radial(feeder, ()))
    config = BendersConfig(box_radius=0.7)
    ell, topo, logdet, _ = solve_master(sys, CutPool(), config)
    assert topo is None
    assert ell.Q[0, 0] == pytest.approx(0.49, rel=1e-4)


def test_one_storage_analytic_region(es_single_result):
    result, _ = es_single_result
    assert result.certified
    assert result.iterations <= 3
    assert result.ellipsoid.Q[0, 0] == pytest.approx(0.01, abs=1e-6)
    assert abs(result.ellipsoid.c[0]) < 1e-6


def test_monotone_logdet_and_new_vertices(ring6_fixed_d5):
    result, sys = ring6_fixed_d5
    lds = result.logdet_trace
    assert all(a >= b - 1e-7 for a, b in zip(lds, lds[1:]))
    assert result.v_trace[-1] <= 1e-6
    assert result.certified


def test_pool_cuts_satisfied_after_termination(ring6_fixed_d5):
    result, sys = ring6_fixed_d5
    # Rebuild the final iterate's cut values from scratch: every retained
    # certificate must be satisfied at the returned ellipsoid.
    from flexhull.benders import _slack_vertex
    from flexhull.subproblem import build_instance as bi

    inst = bi(sys, result.ellipsoid.Q, result.ellipsoid.c,
              sqrt_q=result.ellipsoid.sqrt,
              seed_vertices=[_slack_vertex(sys)])
    y, v, rep = solve_subproblem(inst, bound_target=1e-6, stop_above=1e-6,
                                 time_cap=300.0)
    assert rep.objbound <= 1.1e-6


def test_branch_mode_matches_enumeration():
    # Force the switch branch-and-bound by setting the enumeration cap to
    # zero; the returned topology and volume must match enumeration mode.
    path = data_path("ring6_t2.json")
    feeder = load_feeder(path)
    fleet = load_fleet(path, feeder)
    sys = assemble(feeder, fleet, UncertaintyModel(0.0), "reconfig")
    res_enum = run(sys, BendersConfig(time_cap=120.0))
    res_branch = run(sys, BendersConfig(time_cap=120.0, topology_cap=0))
    assert res_branch.topology.s == res_enum.topology.s
    assert res_branch.volume_index == pytest.approx(res_enum.volume_index, rel=1e-4)
