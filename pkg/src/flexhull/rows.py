"""Constraint-row and variable-column bookkeeping.

Every emitted inequality row carries a tag identifying the physical
equation it came from (balance, voltage drop, device dynamics, ...), the
entity it applies to (bus, line, device) and the period. Columns are
keyed symbolically until final assembly, so row blocks produced by
different modules can be concatenated without coordinating indices.
"""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class RowTag:
    """Semantic origin of one inequality row (>= sense).

    ``sense`` is +1 for the natural direction of the source constraint and
    -1 for the mirrored row of an equality or two-sided bound.
    """

    eq: str
    entity: str
    t: int
    sense: int = 1

    def __str__(self) -> str:
        arrow = "+" if self.sense >= 0 else "-"
        return f"{self.eq}[{self.entity},t={self.t},{arrow}]"


@dataclass(frozen=True)
class ColTag:
    """Semantic identity of one decision-variable column."""

    kind: str
    entity: str
    t: int

    def __str__(self) -> str:
        return f"{self.kind}[{self.entity},t={self.t}]"


@dataclass
class Row:
    """One inequality  sum_j coeffs[j] * x_j  >=  rhs - <b, p0> - <dcol, zeta> - <ccol, s>.

    ``b`` maps period index -> coefficient multiplying p0[t]; ``dcol`` maps a
    flat uncertainty-column index -> coefficient; ``ccol`` maps a switchable
    line index -> coefficient. All three live on the right-hand side.
    """

    tag: RowTag
    coeffs: dict[ColTag, float]
    rhs: float = 0.0
    b: dict[int, float] = field(default_factory=dict)
    dcol: dict[int, float] = field(default_factory=dict)
    ccol: dict[int, float] = field(default_factory=dict)


@dataclass
class RowBlock:
    """An ordered collection of rows plus the columns they introduce."""

    rows: list[Row] = field(default_factory=list)
    columns: list[ColTag] = field(default_factory=list)
    _seen_cols: set[ColTag] = field(default_factory=set, repr=False)

    def add_column(self, col: ColTag) -> ColTag:
        if col not in self._seen_cols:
            self._seen_cols.add(col)
            self.columns.append(col)
        return col

    def add_row(self, row: Row) -> None:
        for col in row.coeffs:
            self.add_column(col)
        self.rows.append(row)

    def add_pair(self, tag_eq: str, entity: str, t: int,
                 coeffs: dict[ColTag, float], rhs: float = 0.0,
                 b: dict[int, float] | None = None,
                 dcol: dict[int, float] | None = None,
                 ccol: dict[int, float] | None = None) -> None:
        """Emit an equality as two opposing >= rows."""
        b = b or {}
        dcol = dcol or {}
        ccol = ccol or {}
        self.add_row(Row(RowTag(tag_eq, entity, t, +1), dict(coeffs), rhs,
                         dict(b), dict(dcol), dict(ccol)))
        neg = {k: -v for k, v in coeffs.items()}
        self.add_row(Row(RowTag(tag_eq, entity, t, -1), neg, -rhs,
                         {k: -v for k, v in b.items()},
                         {k: -v for k, v in dcol.items()},
                         {k: -v for k, v in ccol.items()}))

    def extend(self, other: "RowBlock") -> None:
        for col in other.columns:
            self.add_column(col)
        self.rows.extend(other.rows)

    def __len__(self) -> int:
        return len(self.rows)
