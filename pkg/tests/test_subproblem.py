import numpy as np
import pytest
from scipy import sparse
from scipy.optimize import linprog

from conftest import random_compact_system, random_ellipsoid
from flexhull.subproblem import (GapReport, SubproblemError, brute_force_subproblem,
                                 build_instance, compute_bounds, solve_subproblem)


def test_compute_bounds_interval_arithmetic():
    sys = random_compact_system(0, n_op=2, n_x=1, T=1)
    E = np.zeros((sys.n_rows, 1))
    E[0, 0] = 0.3
    E[1, 0] = -0.1
    lo, hi = compute_bounds(sys, E, mode="fast")
    assert lo[0] == pytest.approx(-0.1) and hi[0] == pytest.approx(0.3)


def test_compute_bounds_zero_columns():
    sys = random_compact_system(1, n_op=3, n_x=2, T=1)
    E = np.zeros((sys.n_rows, 4))
    for mode in ("fast", "tight"):
        lo, hi = compute_bounds(sys, E, mode=mode)
        assert np.all(lo == 0.0) and np.all(hi == 0.0)


def test_tight_bounds_within_fast():
    for seed in range(20):
        sys = random_compact_system(seed, n_op=5, n_x=2, T=1)
        Q, c = random_ellipsoid(seed, 1)
        inst_fast = build_instance(sys, Q, c, bounds_mode="fast")
        inst_tight = build_instance(sys, Q, c, bounds_mode="tight")
        assert np.all(inst_tight.lo >= inst_fast.lo - 1e-9)
        assert np.all(inst_tight.hi <= inst_fast.hi + 1e-9)


def test_brute_force_two_vertex_polytope():
    # Dual polytope {y in [0,1]^2 : y1 - y2 = 0} plus its slack duals: the
    # only extreme points project to (0, 0) and (1, 1).
    from flexhull.compact import CompactAffineSystem
    from flexhull.rows import ColTag, RowTag

    A = np.array([[1.0, 1.0, 0.0],
                  [-1.0, 0.0, 1.0],
                  [0.0, 1.0, 0.0],
                  [0.0, 0.0, 1.0]])
    g = np.array([0.0, 1.0, 1.0])
    d = np.array([0.7, -0.2, 0.0, 0.0])
    sys = CompactAffineSystem(
        A=sparse.csr_matrix(A), B=np.zeros((4, 1)), C=None,
        D=sparse.csr_matrix(np.zeros((4, 3))), d=d, g=g,
        row_tags=tuple(RowTag("op", f"r:{i}", 0, 1) for i in range(2))
        + tuple(RowTag("slack_nonneg", f"row:{i}", 0, 1) for i in range(2)),
        col_tags=tuple(ColTag("x", "c:0", 0) for _ in range(1))
        + tuple(ColTag("slack", f"row:{i}", 0) for i in range(2)),
        T=1, n_op=2, mode="fixed")
    inst = build_instance(sys, np.array([[1e-8]]), np.zeros(1))
    y, v = brute_force_subproblem(inst)
    assert y[0] == pytest.approx(y[1], abs=1e-9)
    assert min(abs(y[0]), abs(y[0] - 1.0)) < 1e-9
    # objective picks the better of the two evaluations
    assert v == pytest.approx(max(0.0, 0.7 - 0.2), abs=1e-9)


def test_brute_force_zero_data():
    sys = random_compact_system(3, n_op=4, n_x=2, T=1, b_scale=0.0, d_scale=0.0)
    sys.d[:] = 0.0
    inst = build_instance(sys, np.eye(1) * 1e-8, np.zeros(1))
    _, v = brute_force_subproblem(inst)
    assert abs(v) < 1e-9


def test_brute_force_cap():
    sys = random_compact_system(4, n_op=8, n_x=2, T=1)
    inst = build_instance(sys, np.eye(1) * 0.01, np.zeros(1))
    with pytest.raises(SubproblemError, match="cap"):
        brute_force_subproblem(inst, cap=14)


def test_linear_degenerate_case_matches_lp():
    # With B = 0 and D = 0 the separation is a plain LP over the dual
    # polytope; the branch-and-bound must reproduce the LP exactly.
    sys = random_compact_system(5, n_op=6, n_x=3, T=1, b_scale=0.0, d_scale=0.0)
    inst = build_instance(sys, np.eye(1) * 1e-8, np.zeros(1))
    res = linprog(-inst.r, A_eq=sys.A.T.tocsc(), b_eq=sys.g,
                  bounds=[(0, None)] * sys.n_rows, method="highs")
    y, v, rep = solve_subproblem(inst, gap_tol=1e-9)
    assert abs(v - (-res.fun)) < 1e-9
    assert rep.objbound <= v + 1e-7


@pytest.mark.parametrize("seed", range(8))
def test_oracle_equivalence_quick(seed):
    T = 1 + seed % 2
    sys = random_compact_system(seed, n_op=6, n_x=3, T=T)
    Q, c = random_ellipsoid(seed, T)
    inst = build_instance(sys, Q, c)
    _, v_exact = brute_force_subproblem(inst)
    y, v, rep = solve_subproblem(inst, gap_tol=1e-6, time_cap=60)
    assert abs(v - v_exact) <= 1e-6 * max(1.0, abs(v_exact))
    assert np.max(np.abs(sys.A.T @ y - sys.g)) <= 1e-7


def test_pair_caps_do_not_change_the_optimum():
    # The pair restriction is a bound tightening justified by an
    # invariance argument; the enumerated optimum must be unaffected.
    for seed in (11, 12, 13):
        sys = random_compact_system(seed, n_op=6, n_x=2, T=1, mirrored_pairs=2)
        Q, c = random_ellipsoid(seed, 1)
        inst = build_instance(sys, Q, c)
        _, v_exact = brute_force_subproblem(inst)
        _, v, rep = solve_subproblem(inst, gap_tol=1e-6, time_cap=60)
        assert abs(v - v_exact) <= 1e-6 * max(1.0, abs(v_exact))
        assert rep.objbound >= v_exact - 1e-7


def test_structural_bilinear_count():
    for T in (1, 2, 4):
        sys = random_compact_system(6, n_op=5, n_x=2, T=T)
        Q, c = random_ellipsoid(6, T)
        inst = build_instance(sys, Q, c)
        assert inst.n_bilinear == 3 * T + T
        assert len(inst.groups) == T + 1


def test_secant_exact_at_endpoints():
    lo, hi = -0.3, 0.7
    for u in (lo, hi):
        assert (lo + hi) * u - lo * hi == pytest.approx(u * u)


def test_relaxation_upper_bounds_feasible_points():
    from flexhull.subproblem import _ReformulatedRelaxation

    sys = random_compact_system(7, n_op=6, n_x=3, T=1)
    Q, c = random_ellipsoid(7, 1)
    inst = build_instance(sys, Q, c)
    relaxer = _ReformulatedRelaxation(inst)
    rng = np.random.default_rng(0)
    lo = inst.lo.copy()
    hi = inst.hi.copy()
    out = relaxer.solve(lo, hi)
    assert out is not None
    bound = out[0]
    # Sample feasible dual points whose image lies in the box.
    from flexhull.compact import maximize_over_dual

    for _ in range(15):
        _, y = maximize_over_dual(sys, rng.normal(size=sys.n_rows))
        u = inst.E.T @ y
        if np.all(u >= lo - 1e-9) and np.all(u <= hi + 1e-9):
            assert inst.exact_value(y) <= bound + 1e-7


def test_gap_report_fields():
    rep = GapReport.make(objval=2.0, objbound=2.0002)
    assert rep.gap == pytest.approx(1e-4, rel=1e-6)
    rep0 = GapReport.make(objval=0.0, objbound=1e-7)
    assert rep0.objbound >= rep0.objval - 1e-12


def test_trace_bounds_monotone():
    sys = random_compact_system(8, n_op=7, n_x=3, T=2)
    Q, c = random_ellipsoid(8, 2)
    inst = build_instance(sys, Q, c)
    trace = []
    _, _, rep = solve_subproblem(inst, gap_tol=1e-6, time_cap=60, trace=trace)
    bounds = [row[2] for row in trace]
    incumbents = [row[3] for row in trace]
    assert all(b1 >= b2 - 1e-9 for b1, b2 in zip(bounds, bounds[1:]))
    assert all(i1 <= i2 + 1e-12 for i1, i2 in zip(incumbents, incumbents[1:]))


def test_monolithic_matches_on_small_instance():
    for seed in (0, 4):
        sys = random_compact_system(seed, n_op=5, n_x=2, T=1)
        Q, c = random_ellipsoid(seed, 1)
        inst = build_instance(sys, Q, c)
        _, v_exact = brute_force_subproblem(inst)
        _, v, rep = solve_subproblem(inst, gap_tol=1e-4, time_cap=120,
                                     monolithic=True)
        assert v <= v_exact + 1e-7
        assert rep.objbound >= v_exact - 1e-6
        if rep.certified:
            assert abs(v - v_exact) <= 1e-3 * max(1.0, abs(v_exact))


def test_stop_above_returns_early_violation():
    sys = random_compact_system(9, n_op=6, n_x=3, T=1)
    Q, c = random_ellipsoid(9, 1)
    inst = build_instance(sys, Q, c)
    _, v_exact = brute_force_subproblem(inst)
    assert v_exact > 0.01
    y, v, rep = solve_subproblem(inst, stop_above=0.01, time_cap=60)
    assert v > 0.01
    assert inst.exact_value(y) == pytest.approx(v)
