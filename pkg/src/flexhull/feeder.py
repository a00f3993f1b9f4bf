"""Radial distribution feeder model.

A feeder is a connected graph of buses and lines with the substation at
bus 0. Linearized power flow couples net bus injections, line flows and
squared voltage magnitudes:

    p_i = sum(out flows) - sum(in flows)          (nodal real balance)
    q_i = sum(out flows) - sum(in flows)          (nodal reactive balance)
    v_j = v_i - 2 (r_ij p_ij + x_ij q_ij)         (voltage drop along a line)

The model is lossless and valid on radial operating topologies. Radiality
of a switch configuration is encoded with a single-commodity fictitious
flow: the substation injects N units, every load bus consumes one, flow
is only allowed on closed lines, and exactly N lines are closed. A switch
vector admits such a flow exactly when the closed subgraph is a spanning
tree.

Line flows keep one fixed reference orientation (``from_bus`` ->
``to_bus``) regardless of the operating topology; flows are signed, so no
constraint has to be rebuilt when a different spanning tree is selected.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .rows import ColTag, Row, RowBlock, RowTag

CATEGORIES = ("res", "com", "ind")


class FeederError(ValueError):
    """Raised for malformed feeder files or invariant violations."""


@dataclass(frozen=True)
class Bus:
    """A bus with its uncontrollable load profile and voltage box.

    ``nominal_p`` is the per-period real load in p.u. (consumption
    positive); reactive load follows from the constant power factor.
    ``v_min``/``v_max`` bound the *squared* voltage magnitude.
    """

    id: int
    category: str
    nominal_p: tuple[float, ...]
    power_factor: float = 0.95
    v_min: float = 0.95**2
    v_max: float = 1.05**2

    def __post_init__(self):
        if self.category not in CATEGORIES:
            raise FeederError(f"bus {self.id}: unknown category {self.category!r}")
        if not 0.0 < self.power_factor <= 1.0:
            raise FeederError(f"bus {self.id}: power factor must be in (0, 1]")
        if self.v_min > self.v_max:
            raise FeederError(f"bus {self.id}: v_min > v_max")
        if self.id == 0 and self.v_min != self.v_max:
            raise FeederError("substation voltage must be fixed (v_min == v_max)")

    @property
    def tan_phi(self) -> float:
        return float(np.tan(np.arccos(self.power_factor)))


@dataclass(frozen=True)
class Line:
    """A distribution line with per-unit impedance.

    ``from_bus -> to_bus`` is the fixed reference orientation for the
    signed flow variables.
    """

    from_bus: int
    to_bus: int
    r: float
    x: float
    switchable: bool = False

    def __post_init__(self):
        if self.r < 0 or self.x < 0:
            raise FeederError(f"line {self.key}: negative impedance")
        if self.from_bus == self.to_bus:
            raise FeederError(f"line {self.key}: self loop")

    @property
    def key(self) -> tuple[int, int]:
        return (self.from_bus, self.to_bus)


@dataclass(frozen=True)
class Topology:
    """A radial switch configuration with its certifying fictitious flow.

    ``s`` holds one 0/1 entry per *switchable* line; non-switchable lines
    are implicitly closed. ``ell`` is the fictitious flow per line (all
    lines, reference orientation) and ``ell_node`` the nodal injections
    (N at the substation, -1 at load buses).
    """

    s: tuple[int, ...]
    ell: tuple[float, ...]
    ell_node: tuple[float, ...]

    @property
    def open_switches(self) -> tuple[int, ...]:
        return tuple(i for i, v in enumerate(self.s) if v == 0)


@dataclass(frozen=True)
class FeederModel:
    buses: tuple[Bus, ...]
    lines: tuple[Line, ...]
    base_mva: float
    base_kv: float
    T: int
    tau: float
    name: str = ""
    notes: str = ""

    @property
    def n_load(self) -> int:
        """Number of load buses (all buses except the substation)."""
        return len(self.buses) - 1

    @property
    def switchable_lines(self) -> tuple[int, ...]:
        return tuple(i for i, ln in enumerate(self.lines) if ln.switchable)

    def bus(self, bus_id: int) -> Bus:
        return self.buses[bus_id]

    def lines_at(self, bus_id: int) -> list[tuple[int, int]]:
        """Indices of incident lines with orientation sign (+1 leaving)."""
        out = []
        for idx, ln in enumerate(self.lines):
            if ln.from_bus == bus_id:
                out.append((idx, +1))
            elif ln.to_bus == bus_id:
                out.append((idx, -1))
        return out

    def full_switch_vector(self, s) -> np.ndarray:
        """Expand a switchable-line 0/1 vector to one entry per line."""
        sw = self.switchable_lines
        if len(s) != len(sw):
            raise FeederError(f"expected {len(sw)} switch states, got {len(s)}")
        full = np.ones(len(self.lines))
        for pos, idx in enumerate(sw):
            full[idx] = float(s[pos])
        return full

    def total_nominal_load(self) -> np.ndarray:
        """Total uncontrollable real load per period (p.u.)."""
        tot = np.zeros(self.T)
        for b in self.buses[1:]:
            tot += np.asarray(b.nominal_p)
        return tot


def load_feeder(path) -> FeederModel:
    """Parse and validate a feeder file (see README for the schema)."""
    with open(path) as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FeederError(f"cannot parse {path}: {exc}") from exc

    for key in ("buses", "lines", "base_mva", "base_kv", "T", "tau_hours"):
        if key not in raw:
            raise FeederError(f"{path}: missing top-level field {key!r}")
    T = int(raw["T"])
    if T < 1:
        raise FeederError("horizon T must be >= 1")

    buses = []
    for rec in raw["buses"]:
        prof = rec.get("p_nominal", [0.0] * T)
        if len(prof) != T:
            raise FeederError(f"bus {rec['id']}: p_nominal length {len(prof)} != T={T}")
        kwargs = dict(
            id=int(rec["id"]),
            category=rec.get("category", "res"),
            nominal_p=tuple(float(v) for v in prof),
            power_factor=float(rec.get("pf", 0.95)),
        )
        if "v_min" in rec:
            kwargs["v_min"] = float(rec["v_min"])
        if "v_max" in rec:
            kwargs["v_max"] = float(rec["v_max"])
        buses.append(Bus(**kwargs))
    buses.sort(key=lambda b: b.id)
    ids = [b.id for b in buses]
    if ids != list(range(len(buses))):
        raise FeederError("bus ids must be contiguous 0..N")
    if buses[0].id != 0:
        raise FeederError("missing substation (bus 0)")

    lines = []
    seen = set()
    for rec in raw["lines"]:
        ln = Line(int(rec["from"]), int(rec["to"]), float(rec["r"]),
                  float(rec["x"]), bool(rec.get("switchable", False)))
        und = frozenset(ln.key)
        if und in seen:
            raise FeederError(f"duplicate line {ln.key}")
        seen.add(und)
        if not (0 <= ln.from_bus < len(buses) and 0 <= ln.to_bus < len(buses)):
            raise FeederError(f"line {ln.key}: unknown bus")
        lines.append(ln)

    feeder = FeederModel(
        buses=tuple(buses), lines=tuple(lines),
        base_mva=float(raw["base_mva"]), base_kv=float(raw["base_kv"]),
        T=T, tau=float(raw["tau_hours"]),
        name=str(raw.get("name", "")), notes=str(raw.get("notes", "")),
    )

    reach = _reachable(feeder, np.ones(len(lines)))
    if len(reach) != len(buses):
        missing = sorted(set(ids) - reach)
        raise FeederError(f"disconnected: buses {missing} unreachable from the substation")
    return feeder


def _reachable(feeder: FeederModel, s_full) -> set[int]:
    """Buses reachable from the substation over closed lines (BFS)."""
    adj: dict[int, list[int]] = {b.id: [] for b in feeder.buses}
    for idx, ln in enumerate(feeder.lines):
        if s_full[idx] > 0.5:
            adj[ln.from_bus].append(ln.to_bus)
            adj[ln.to_bus].append(ln.from_bus)
    seen = {0}
    stack = [0]
    while stack:
        u = stack.pop()
        for w in adj[u]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return seen


def _is_spanning_tree(feeder: FeederModel, s_full) -> bool:
    n_closed = int(round(float(np.sum(s_full))))
    if n_closed != feeder.n_load:
        return False
    return len(_reachable(feeder, s_full)) == len(feeder.buses)


def validate_radial(feeder: FeederModel, s) -> Topology:
    """Check a switch vector against the fictitious-flow radiality system.

    Solves the flow feasibility problem: substation injects N, each load
    bus consumes 1, per-line flow bounded by +-s*N, and exactly N lines
    closed. Returns the certified :class:`Topology`; raises
    :class:`RadialityError` naming the violated constraint family
    otherwise.
    """
    n_bus = len(feeder.buses)
    n_line = len(feeder.lines)
    N = feeder.n_load
    s_full = feeder.full_switch_vector(s)

    n_closed = int(round(float(np.sum(s_full))))
    if n_closed != N:
        raise RadialityError(
            f"cardinality violated: {n_closed} closed lines, need exactly {N}", s)

    # Nodal balance  ell_i = sum(out) - sum(in), with ell_0 = N, ell_i = -1.
    a_eq = np.zeros((n_bus, n_line))
    for idx, ln in enumerate(feeder.lines):
        a_eq[ln.from_bus, idx] = 1.0
        a_eq[ln.to_bus, idx] = -1.0
    b_eq = np.full(n_bus, -1.0)
    b_eq[0] = float(N)
    bounds = [(-s_full[i] * N, s_full[i] * N) for i in range(n_line)]
    res = linprog(np.zeros(n_line), A_eq=a_eq, b_eq=b_eq, bounds=bounds,
                  method="highs")
    if res.status != 0:
        bad = sorted(set(range(n_bus)) - _reachable(feeder, s_full))
        raise RadialityError(
            f"flow balance infeasible: buses {bad} cut off from the substation", s)

    ell = tuple(float(v) for v in res.x)
    ell_node = (float(N),) + (-1.0,) * N
    return Topology(s=tuple(int(v) for v in s), ell=ell, ell_node=ell_node)


class RadialityError(FeederError):
    """A switch vector that admits no radial fictitious flow."""

    def __init__(self, msg: str, s):
        super().__init__(msg)
        self.s = tuple(int(v) for v in s)


def enumerate_spanning_trees(feeder: FeederModel, cap: int = 20) -> list[Topology]:
    """All switch vectors whose closed subgraph is a spanning tree.

    Brute force over the 2^k switch combinations with a graph-search
    check, independent of the flow-based :func:`validate_radial` route.
    The fictitious flows of each returned topology are filled in by a
    subtree count rather than an LP solve.
    """
    sw = feeder.switchable_lines
    if len(sw) > cap:
        raise FeederError(f"{len(sw)} switchable lines exceeds enumeration cap {cap}")
    out = []
    for combo in itertools.product((0, 1), repeat=len(sw)):
        s_full = feeder.full_switch_vector(combo)
        if _is_spanning_tree(feeder, s_full):
            out.append(_tree_topology(feeder, combo, s_full))
    return out


def _tree_topology(feeder: FeederModel, s, s_full) -> Topology:
    """Build Topology with flows computed from subtree sizes."""
    n_line = len(feeder.lines)
    children: dict[int, list[tuple[int, int]]] = {b.id: [] for b in feeder.buses}
    for idx, ln in enumerate(feeder.lines):
        if s_full[idx] > 0.5:
            children[ln.from_bus].append((ln.to_bus, idx))
            children[ln.to_bus].append((ln.from_bus, idx))
    ell = np.zeros(n_line)
    size = np.ones(len(feeder.buses))
    # Iterative post-order from the substation.
    order = []
    parent_edge: dict[int, tuple[int, int]] = {}
    seen = {0}
    stack = [0]
    while stack:
        u = stack.pop()
        order.append(u)
        for w, idx in children[u]:
            if w not in seen:
                seen.add(w)
                parent_edge[w] = (u, idx)
                stack.append(w)
    for u in reversed(order):
        if u == 0:
            continue
        p, idx = parent_edge[u]
        size[p] += size[u]
        ln = feeder.lines[idx]
        # Flow from parent into the subtree rooted at u.
        ell[idx] = size[u] if ln.from_bus == p else -size[u]
    ell_node = (float(feeder.n_load),) + (-1.0,) * feeder.n_load
    return Topology(s=tuple(int(v) for v in s), ell=tuple(ell), ell_node=ell_node)


def default_big_m(feeder: FeederModel, extra_apparent: float = 0.0) -> tuple[float, float]:
    """Big-M values for the reconfiguration rows.

    ``m_flow`` bounds any line's apparent flow by twice the system-wide
    apparent power (nominal load plus ``extra_apparent`` for device
    capacity); ``m_volt`` slackens a voltage-drop row by more than any
    achievable voltage difference.
    """
    s_tot = 0.0
    for t in range(feeder.T):
        tot = sum(b.nominal_p[t] / b.power_factor for b in feeder.buses[1:])
        s_tot = max(s_tot, tot)
    m_flow = 2.0 * (s_tot + extra_apparent)
    v_hi = max(b.v_max for b in feeder.buses)
    v_lo = min(b.v_min for b in feeder.buses)
    z_max = max((ln.r + ln.x for ln in feeder.lines), default=0.0)
    m_volt = (v_hi - v_lo) + 2.0 * m_flow * z_max
    return m_flow, m_volt


def lindistflow_rows(feeder: FeederModel, mode: str,
                     topology: Topology | None = None,
                     big_m: tuple[float, float] | None = None) -> RowBlock:
    """Emit the network constraint rows for one operating mode.

    ``fixed`` mode requires a topology; only closed lines get flow
    variables and exact voltage-drop rows. ``reconfig`` mode emits flow
    variables for every line, deactivation rows (flow forced to zero,
    drop relaxed by big-M) for switchable lines, and exact drop rows for
    the rest. Per period the block contains nodal real/reactive balance,
    drop rows, the substation-injection definition and the voltage box.
    """
    if mode not in ("fixed", "reconfig"):
        raise FeederError(f"unknown mode {mode!r}")
    if mode == "fixed" and topology is None:
        raise FeederError("fixed mode requires a topology")
    if big_m is None:
        big_m = default_big_m(feeder)
    m_flow, m_volt = big_m

    blk = RowBlock()
    T = feeder.T
    sw_pos = {idx: pos for pos, idx in enumerate(feeder.switchable_lines)}
    if mode == "fixed":
        s_full = feeder.full_switch_vector(topology.s)
        active = [i for i in range(len(feeder.lines)) if s_full[i] > 0.5]
    else:
        active = list(range(len(feeder.lines)))
    active_set = set(active)

    def fp(idx, t):
        return ColTag("flow_p", f"line:{feeder.lines[idx].from_bus}-{feeder.lines[idx].to_bus}", t)

    def fq(idx, t):
        return ColTag("flow_q", f"line:{feeder.lines[idx].from_bus}-{feeder.lines[idx].to_bus}", t)

    def vv(bus_id, t):
        return ColTag("voltage", f"bus:{bus_id}", t)

    v0 = feeder.buses[0].v_min  # fixed substation squared voltage

    for t in range(T):
        # Nodal balance. DER output columns are appended later by the
        # device module; here the network side and the load RHS are set.
        for b in feeder.buses[1:]:
            coeffs_p: dict[ColTag, float] = {}
            coeffs_q: dict[ColTag, float] = {}
            for idx, sign in feeder.lines_at(b.id):
                if idx not in active_set:
                    continue
                # injection = outflow - inflow, so flows move to the LHS
                # with the opposite sign.
                coeffs_p[fp(idx, t)] = coeffs_p.get(fp(idx, t), 0.0) - sign
                coeffs_q[fq(idx, t)] = coeffs_q.get(fq(idx, t), 0.0) - sign
            blk.add_pair("p_balance", f"bus:{b.id}", t, coeffs_p, rhs=b.nominal_p[t])
            blk.add_pair("q_balance", f"bus:{b.id}", t, coeffs_q,
                         rhs=b.nominal_p[t] * b.tan_phi)

        # Substation injection: p0_t equals the net flow leaving bus 0.
        coeffs_sub: dict[ColTag, float] = {}
        for idx, sign in feeder.lines_at(0):
            if idx in active_set:
                coeffs_sub[fp(idx, t)] = coeffs_sub.get(fp(idx, t), 0.0) + sign
        blk.add_pair("sub_power", "bus:0", t, coeffs_sub, rhs=0.0, b={t: -1.0})

        # Voltage drop.
        for idx in active:
            ln = feeder.lines[idx]
            coeffs = {fp(idx, t): 2.0 * ln.r, fq(idx, t): 2.0 * ln.x}
            rhs = 0.0
            if ln.from_bus == 0:
                rhs += v0
            else:
                coeffs[vv(ln.from_bus, t)] = -1.0
            if ln.to_bus == 0:
                rhs -= v0
            else:
                coeffs[vv(ln.to_bus, t)] = coeffs.get(vv(ln.to_bus, t), 0.0) + 1.0
            ent = f"line:{ln.from_bus}-{ln.to_bus}"
            if mode == "reconfig" and ln.switchable:
                # Relaxed two-sided drop: inactive when the switch opens.
                k = sw_pos[idx]
                blk.add_row(Row(RowTag("volt_drop", ent, t, +1), dict(coeffs),
                                rhs - m_volt, ccol={k: -m_volt}))
                blk.add_row(Row(RowTag("volt_drop", ent, t, -1),
                                {c: -v for c, v in coeffs.items()},
                                -rhs - m_volt, ccol={k: -m_volt}))
            else:
                blk.add_pair("volt_drop", ent, t, coeffs, rhs=rhs)

        # Flow deactivation for switchable lines under reconfiguration.
        if mode == "reconfig":
            for idx in feeder.switchable_lines:
                ln = feeder.lines[idx]
                ent = f"line:{ln.from_bus}-{ln.to_bus}"
                k = sw_pos[idx]
                for kind, col in (("flow_p", fp(idx, t)), ("flow_q", fq(idx, t))):
                    blk.add_row(Row(RowTag(f"{kind}_bigm", ent, t, +1),
                                    {col: 1.0}, 0.0, ccol={k: m_flow}))
                    blk.add_row(Row(RowTag(f"{kind}_bigm", ent, t, -1),
                                    {col: -1.0}, 0.0, ccol={k: m_flow}))

        # Voltage box on load buses.
        for b in feeder.buses[1:]:
            blk.add_row(Row(RowTag("volt_box", f"bus:{b.id}", t, +1),
                            {vv(b.id, t): 1.0}, b.v_min))
            blk.add_row(Row(RowTag("volt_box", f"bus:{b.id}", t, -1),
                            {vv(b.id, t): -1.0}, -b.v_max))
    return blk
