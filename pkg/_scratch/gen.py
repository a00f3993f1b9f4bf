import numpy as np
from scipy import sparse
from flexhull.compact import CompactAffineSystem
from flexhull.rows import RowTag, ColTag

def random_system(seed, n_op=6, n_x=3, T=1):
    rng = np.random.default_rng(seed)
    a_op = rng.normal(size=(n_op, n_x)) * (rng.uniform(size=(n_op, n_x)) < 0.7)
    d = rng.normal(size=n_op) * 0.5
    B = rng.normal(size=(n_op, T)) * (rng.uniform(size=(n_op, T)) < 0.8)
    D = rng.normal(size=(n_op, 3*T)) * (rng.uniform(size=(n_op, 3*T)) < 0.5) * 0.3
    n_cols = n_x + n_op
    A = np.zeros((2*n_op, n_cols))
    A[:n_op, :n_x] = a_op
    A[:n_op, n_x:] = np.eye(n_op)
    A[n_op:, n_x:] = np.eye(n_op)
    g = np.zeros(n_cols); g[n_x:] = 1.0
    d_full = np.concatenate([d, np.zeros(n_op)])
    B_full = np.vstack([B, np.zeros((n_op, T))])
    D_full = np.vstack([D, np.zeros((n_op, 3*T))])
    row_tags = tuple(RowTag("op", f"r:{i}", 0, +1) for i in range(n_op)) + \
               tuple(RowTag("slack_nonneg", f"row:{i}", 0, +1) for i in range(n_op))
    col_tags = tuple(ColTag("x", f"c:{j}", 0) for j in range(n_x)) + \
               tuple(ColTag("slack", f"row:{i}", 0) for i in range(n_op))
    return CompactAffineSystem(A=sparse.csr_matrix(A), B=B_full, C=None,
        D=sparse.csr_matrix(D_full), d=d_full, g=g, row_tags=row_tags,
        col_tags=col_tags, T=T, n_op=n_op, mode="fixed")

def random_ellipsoid(seed, T):
    rng = np.random.default_rng(seed + 10_000)
    Fh = rng.normal(size=(T, T))
    Q = Fh @ Fh.T * 0.1 + 1e-4 * np.eye(T)
    c = rng.normal(size=T) * 0.3
    return Q, c
