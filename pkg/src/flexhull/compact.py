"""Assembly of the full operating-constraint system in compact form.

All network and device rows are stacked into one affine inequality over
the recourse vector x (device outputs, voltages, flows, device states,
violation slacks):

    A x >= d - B p0 - D zeta - C s

where p0 is the substation trajectory (length T, plain numpy array), zeta
the flattened load-deviation vector (3T), and s the switch vector (only
in reconfiguration mode; otherwise C is omitted). Every operational row
gets one dedicated slack column with coefficient +1 and its own
nonnegativity row; the cost vector prices exactly those slacks. Two
consequences carry the rest of the pipeline:

* complete recourse - the slack point is feasible for any right-hand
  side, so the violation LP below never reports infeasible;
* the dual feasible set {y >= 0 : A^T y = cost} is a product of paired
  simplices, hence contained in the unit box. That boundedness is what
  makes global search in the separation step well-posed.

Rows are normalised so that device-state rows (temperatures, energies)
and per-unit electrical rows weigh violations on a comparable scale.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.io import mmwrite
from scipy.optimize import linprog

from .ders import DerFleet, UncertaintyModel, der_polytope_rows, uncertainty_columns
from .feeder import FeederModel, Topology, default_big_m, lindistflow_rows
from .rows import ColTag, RowBlock, RowTag


class CompactError(RuntimeError):
    pass


@dataclass(frozen=True)
class CompactAffineSystem:
    """The assembled inequality  A x >= d - B p0 - D zeta - C s."""

    A: sparse.csr_matrix
    B: np.ndarray
    C: np.ndarray | None
    D: sparse.csr_matrix
    d: np.ndarray
    g: np.ndarray
    row_tags: tuple[RowTag, ...]
    col_tags: tuple[ColTag, ...]
    T: int
    n_op: int
    mode: str
    # Index pairs of opposing rows that encode one equality; the dual
    # objective is invariant to inflating both sides of a pair at once,
    # so y_plus + y_minus <= 1 loses no attainable value (used as a
    # bound-tightening restriction by the separation solver).
    pair_rows: tuple[tuple[int, int], ...] = ()
    feeder: FeederModel | None = None
    fleet: DerFleet | None = None
    uncertainty: UncertaintyModel | None = None
    topology: Topology | None = None

    @property
    def n_rows(self) -> int:
        return self.A.shape[0]

    @property
    def n_cols(self) -> int:
        return self.A.shape[1]

    @property
    def n_switch(self) -> int:
        return 0 if self.C is None else self.C.shape[1]

    def rhs(self, p0, zeta=None, s=None) -> np.ndarray:
        """Realised right-hand side d - B p0 - D zeta - C s."""
        p0 = np.asarray(p0, dtype=float)
        if p0.shape != (self.T,):
            raise CompactError(f"p0 must have shape ({self.T},)")
        out = self.d - self.B @ p0
        if zeta is not None:
            out = out - self.D @ np.asarray(zeta, dtype=float)
        if self.C is not None:
            if s is None:
                raise CompactError("reconfiguration system needs a switch vector")
            out = out - self.C @ np.asarray(s, dtype=float)
        return out

    def column_index(self, kind: str, entity: str, t: int) -> int:
        return self.col_tags.index(ColTag(kind, entity, t))


def assemble(feeder: FeederModel, fleet: DerFleet,
             uncertainty: UncertaintyModel, mode: str,
             topology: Topology | None = None) -> CompactAffineSystem:
    """Build the compact system for one operating mode.

    Concatenates the network rows, each device's polytope rows and the
    uncertainty columns, then appends one slack per operational row plus
    its nonnegativity row.
    """
    big_m = default_big_m(feeder, extra_apparent=fleet.total_apparent_capacity(feeder.T))
    blk = lindistflow_rows(feeder, mode, topology=topology, big_m=big_m)
    for i, spec in enumerate(fleet):
        blk.extend(der_polytope_rows(spec, i, feeder.T, feeder.tau))

    # Device outputs enter the balance rows of their bus.
    row_by_tag = {row.tag: row for row in blk.rows}
    if len(row_by_tag) != len(blk.rows):
        raise CompactError("duplicate row tags in assembly")
    for i, spec in enumerate(fleet):
        for t in range(feeder.T):
            xcol = ColTag("der_p", f"der:{i}", t)
            blk.add_column(xcol)
            for sense in (+1, -1):
                prow = row_by_tag[RowTag("p_balance", f"bus:{spec.bus}", t, sense)]
                prow.coeffs[xcol] = prow.coeffs.get(xcol, 0.0) + float(sense)
                qrow = row_by_tag[RowTag("q_balance", f"bus:{spec.bus}", t, sense)]
                qrow.coeffs[xcol] = qrow.coeffs.get(xcol, 0.0) + float(sense) * spec.tan_phi

    ucols = uncertainty_columns(feeder, uncertainty)
    for tag, cols in ucols.items():
        row_by_tag[tag].dcol.update(cols)

    n_op = len(blk.rows)
    col_index = {col: j for j, col in enumerate(blk.columns)}
    n_base = len(blk.columns)
    n_cols = n_base + n_op
    n_rows = 2 * n_op
    n_sw = len(feeder.switchable_lines) if mode == "reconfig" else 0
    n_unc = uncertainty.n_cols(feeder.T)

    a = sparse.lil_matrix((n_rows, n_cols))
    bmat = np.zeros((n_rows, feeder.T))
    dmat = sparse.lil_matrix((n_rows, n_unc))
    cmat = np.zeros((n_rows, n_sw)) if n_sw else None
    rhs = np.zeros(n_rows)
    row_tags: list[RowTag] = []
    col_tags: list[ColTag] = list(blk.columns)

    for r, row in enumerate(blk.rows):
        scale = 1.0 / max(1.0, max(abs(v) for v in row.coeffs.values()) if row.coeffs else 0.0,
                          abs(row.rhs))
        for col, v in row.coeffs.items():
            a[r, col_index[col]] = v * scale
        slack_col = n_base + r
        a[r, slack_col] = 1.0
        rhs[r] = row.rhs * scale
        for t, v in row.b.items():
            bmat[r, t] = v * scale
        for j, v in row.dcol.items():
            dmat[r, j] = v * scale
        for k, v in row.ccol.items():
            cmat[r, k] = v * scale
        row_tags.append(row.tag)
        col_tags.append(ColTag("slack", f"row:{r}", row.tag.t))
        # Slack nonnegativity lives in the second half of the row block.
        a[n_op + r, slack_col] = 1.0

    for r, row in enumerate(blk.rows):
        row_tags.append(RowTag("slack_nonneg", f"row:{r}", row.tag.t, +1))

    g = np.zeros(n_cols)
    g[n_base:] = 1.0

    # Mirror pairs: the two >= rows of one equality. Verified numerically,
    # because two-sided bounds (e.g. the voltage box) share tags but are
    # not negations and must not be capped.
    pairs = []
    a_csr = a.tocsr()
    for r in range(n_op - 1):
        a_tag, b_tag = blk.rows[r].tag, blk.rows[r + 1].tag
        if (a_tag.eq, a_tag.entity, a_tag.t) != (b_tag.eq, b_tag.entity, b_tag.t) \
                or a_tag.sense != 1 or b_tag.sense != -1:
            continue
        n_base_cols = n_base
        plus = a_csr[r, :n_base_cols].toarray().ravel()
        minus = a_csr[r + 1, :n_base_cols].toarray().ravel()
        if not np.allclose(plus, -minus, atol=1e-12):
            continue
        if abs(rhs[r] + rhs[r + 1]) > 1e-12:
            continue
        if not np.allclose(bmat[r], -bmat[r + 1], atol=1e-12):
            continue
        if cmat is not None and not np.allclose(cmat[r], -cmat[r + 1], atol=1e-12):
            continue
        if not np.allclose(dmat.getrow(r).toarray(), -dmat.getrow(r + 1).toarray(),
                           atol=1e-12):
            continue
        pairs.append((r, r + 1))

    sys = CompactAffineSystem(
        A=a.tocsr(), B=bmat, C=cmat, D=dmat.tocsr(), d=rhs, g=g,
        row_tags=tuple(row_tags), col_tags=tuple(col_tags),
        T=feeder.T, n_op=n_op, mode=mode, pair_rows=tuple(pairs),
        feeder=feeder, fleet=fleet, uncertainty=uncertainty, topology=topology)
    if sys.n_rows != len(sys.row_tags) or sys.n_cols != len(sys.col_tags):
        raise CompactError("registry out of sync with matrix shapes")
    return sys


@dataclass
class RecourseResult:
    value: float
    x: np.ndarray
    violations: list[tuple[RowTag, float]]


def recourse_check(sys: CompactAffineSystem, p0, zeta=None, s=None,
                   tol: float = 1e-7) -> RecourseResult:
    """Minimum total violation needed to realise a substation trajectory.

    Solves  min cost^T x  s.t.  A x >= rhs(p0, zeta, s).  A value of zero
    means the trajectory is realisable without violating any operating
    constraint; positive values come with the offending rows resolved
    through the registry.
    """
    rhs = sys.rhs(p0, zeta, s)
    res = linprog(sys.g, A_ub=(-sys.A).tocsc(), b_ub=-rhs,
                  bounds=[(None, None)] * sys.n_cols, method="highs")
    if res.status != 0:
        raise CompactError(f"recourse LP failed: {res.message}")
    x = np.asarray(res.x)
    slacks = x[sys.n_cols - sys.n_op:]
    violations = [(sys.row_tags[r], float(slacks[r]))
                  for r in range(sys.n_op) if slacks[r] > tol]
    violations.sort(key=lambda kv: -kv[1])
    return RecourseResult(value=float(res.fun), x=x, violations=violations)


def maximize_over_dual(sys: CompactAffineSystem, w) -> tuple[float, np.ndarray]:
    """max  w^T y  over the dual polytope {y >= 0 : A^T y = cost}.

    The optimiser is a basic feasible solution, i.e. a vertex.
    """
    w = np.asarray(w, dtype=float)
    res = linprog(-w, A_eq=sys.A.T.tocsc(), b_eq=sys.g,
                  bounds=[(0.0, None)] * sys.n_rows, method="highs")
    if res.status != 0:
        raise CompactError(f"dual LP failed: {res.message}")
    return -float(res.fun), np.asarray(res.x)


def dual_value(sys: CompactAffineSystem, p0, zeta=None, s=None) -> tuple[float, np.ndarray]:
    """Violation cost computed through the dual route (for cross-checks)."""
    return maximize_over_dual(sys, sys.rhs(p0, zeta, s))


def nominal_substation_trajectory(sys: CompactAffineSystem) -> np.ndarray:
    """Substation import with nominal loads and every device at midpoint."""
    feeder, fleet = sys.feeder, sys.fleet
    p0 = feeder.total_nominal_load().copy()
    for spec in fleet:
        lo, hi = spec.power_band(feeder.T)
        p0 -= 0.5 * (lo + hi)
    return p0


def dump_matrices(sys: CompactAffineSystem, out_dir) -> list[str]:
    """Write the system blocks as MatrixMarket files plus a registry CSV."""
    import os

    os.makedirs(out_dir, exist_ok=True)
    written = []

    def put(name, mat):
        path = os.path.join(out_dir, name + ".mtx")
        mmwrite(path, sparse.coo_matrix(mat))
        written.append(path)

    put("A", sys.A)
    put("B", sys.B)
    put("D", sys.D)
    if sys.C is not None:
        put("C", sys.C)
    put("d", sys.d.reshape(-1, 1))
    put("g", sys.g.reshape(-1, 1))
    reg = os.path.join(out_dir, "registry.csv")
    with open(reg, "w") as fh:
        fh.write("axis,index,tag\n")
        for r, tag in enumerate(sys.row_tags):
            fh.write(f"row,{r},{tag}\n")
        for c, tag in enumerate(sys.col_tags):
            fh.write(f"col,{c},{tag}\n")
    written.append(reg)
    return written
