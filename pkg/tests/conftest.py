import sys
from pathlib import Path

import numpy as np
import pytest
from scipy import sparse

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from flexhull.compact import CompactAffineSystem  # noqa: E402
from flexhull.rows import ColTag, RowTag  # noqa: E402

DATA = ROOT / "src" / "flexhull" / "data"


def data_path(name: str) -> str:
    return str(DATA / name)


def random_compact_system(seed, n_op=6, n_x=3, T=1, b_scale=1.0, d_scale=0.3,
                          mirrored_pairs=0):
    """Small abstract system with the one-slack-per-row pattern.

    Used as ground truth for the separation solver: its dual polytope has
    at most 2*n_op dimensions, so vertex enumeration stays tractable.
    ``mirrored_pairs`` converts that many leading op-row pairs into exact
    mirror images (the shape equality rows take after assembly).
    """
    rng = np.random.default_rng(seed)
    a_op = rng.normal(size=(n_op, n_x)) * (rng.uniform(size=(n_op, n_x)) < 0.7)
    d = rng.normal(size=n_op) * 0.5
    B = rng.normal(size=(n_op, T)) * (rng.uniform(size=(n_op, T)) < 0.8) * b_scale
    D = rng.normal(size=(n_op, 3 * T)) * (rng.uniform(size=(n_op, 3 * T)) < 0.5) * d_scale
    pairs = []
    for p in range(mirrored_pairs):
        i, j = 2 * p, 2 * p + 1
        a_op[j] = -a_op[i]
        d[j] = -d[i]
        B[j] = -B[i]
        D[j] = -D[i]
        pairs.append((i, j))
    n_cols = n_x + n_op
    A = np.zeros((2 * n_op, n_cols))
    A[:n_op, :n_x] = a_op
    A[:n_op, n_x:] = np.eye(n_op)
    A[n_op:, n_x:] = np.eye(n_op)
    g = np.zeros(n_cols)
    g[n_x:] = 1.0
    row_tags = tuple(RowTag("op", f"r:{i}", 0, +1) for i in range(n_op)) + \
        tuple(RowTag("slack_nonneg", f"row:{i}", 0, +1) for i in range(n_op))
    col_tags = tuple(ColTag("x", f"c:{j}", 0) for j in range(n_x)) + \
        tuple(ColTag("slack", f"row:{i}", 0) for i in range(n_op))
    return CompactAffineSystem(
        A=sparse.csr_matrix(A), B=np.vstack([B, np.zeros((n_op, T))]), C=None,
        D=sparse.csr_matrix(np.vstack([D, np.zeros((n_op, 3 * T))])),
        d=np.concatenate([d, np.zeros(n_op)]), g=g,
        row_tags=row_tags, col_tags=col_tags, T=T, n_op=n_op, mode="fixed",
        pair_rows=tuple(pairs))


def random_ellipsoid(seed, T, scale=0.1):
    rng = np.random.default_rng(seed + 10_000)
    fh = rng.normal(size=(T, T))
    Q = fh @ fh.T * scale + 1e-4 * np.eye(T)
    c = rng.normal(size=T) * 0.3
    return Q, c


@pytest.fixture(scope="session")
def es_single_result():
    from flexhull.validate import ScenarioConfig, solve_scenario

    cfg = ScenarioConfig(feeder=data_path("es_single.json"), mode="fixed",
                         delta=0.0, time_cap=60.0)
    return solve_scenario(cfg)


@pytest.fixture(scope="session")
def ring6_fixed_d5():
    """Converged fixed-topology run at 5% uncertainty (shared, ~1 min)."""
    from flexhull.validate import ScenarioConfig, solve_scenario

    cfg = ScenarioConfig(feeder=data_path("ring6_t2.json"), mode="fixed",
                         delta=0.05, time_cap=300.0)
    return solve_scenario(cfg)
