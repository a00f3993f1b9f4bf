"""Device models and the uncontrollable-load uncertainty set.

Each controllable device contributes a polytope over its horizon-long
real-power trajectory ``x_d`` (injection positive). Consumption devices
(HVAC, controllable load, EV charging) bound ``-x_d``; storage injects or
withdraws; PV is curtailable up to its availability. Stateful devices
carry auxiliary trajectories (indoor temperature, stored energy) whose
dynamics anchor at an explicit initial condition in the first period.

Uncontrollable loads deviate multiplicatively from their nominal profile:
``p = p0 * (1 + delta * zeta[cat, t])`` with one deviation driver per
load category (res/com/ind) per period, and each per-period driver triple
confined to the Euclidean unit ball.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .feeder import CATEGORIES, FeederModel
from .rows import ColTag, Row, RowBlock, RowTag

KINDS = ("pv", "hvac", "es", "load", "ev")


class DerError(ValueError):
    pass


def _vec(v, T, name) -> tuple[float, ...]:
    """Broadcast a scalar or validate a length-T sequence."""
    if np.isscalar(v):
        return (float(v),) * T
    v = tuple(float(x) for x in v)
    if len(v) != T:
        raise DerError(f"{name}: expected length {T}, got {len(v)}")
    return v


@dataclass(frozen=True)
class HvacParams:
    """Thermostatically controlled cooling/heating unit.

    ``alpha`` couples the indoor temperature to ambient, ``beta`` converts
    electric power to temperature change. The dynamics are applied
    literally with injection-signed power: consumption is ``-x``, so for a
    cooling unit ``beta < 0`` lowers the temperature as consumption rises.
    """

    p_min: tuple[float, ...]
    p_max: tuple[float, ...]
    theta_min: tuple[float, ...]
    theta_max: tuple[float, ...]
    theta_out: tuple[float, ...]
    theta_init: float
    alpha: float
    beta: float

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise DerError("hvac: alpha must be in (0, 1)")
        if any(lo > hi for lo, hi in zip(self.theta_min, self.theta_max)):
            raise DerError("hvac: theta_min > theta_max")


@dataclass(frozen=True)
class EsParams:
    """Battery storage: power band plus stored-energy band with retention."""

    p_min: tuple[float, ...]
    p_max: tuple[float, ...]
    e_min: tuple[float, ...]
    e_max: tuple[float, ...]
    e_init: float
    eta: float

    def __post_init__(self):
        if not 0.0 < self.eta <= 1.0:
            raise DerError("es: retention eta must be in (0, 1]")
        if not self.e_min[0] <= self.e_init <= self.e_max[0]:
            raise DerError("es: e_init outside the energy band")


@dataclass(frozen=True)
class EvParams:
    """EV charging: power band plus a cumulative-energy requirement band."""

    p_min: tuple[float, ...]
    p_max: tuple[float, ...]
    e_cum_min: tuple[float, ...]
    e_cum_max: tuple[float, ...]

    def __post_init__(self):
        if any(a > b for a, b in zip(self.e_cum_min, self.e_cum_max)):
            raise DerError("ev: e_cum_min > e_cum_max")
        if any(b < a for a, b in zip(self.e_cum_min, self.e_cum_min[1:])):
            raise DerError("ev: e_cum_min must be nondecreasing")


@dataclass(frozen=True)
class PvParams:
    p_avail: tuple[float, ...]

    def __post_init__(self):
        if any(v < 0 for v in self.p_avail):
            raise DerError("pv: negative availability")


@dataclass(frozen=True)
class LoadParams:
    p_min: tuple[float, ...]
    p_max: tuple[float, ...]

    def __post_init__(self):
        if any(a > b for a, b in zip(self.p_min, self.p_max)):
            raise DerError("load: p_min > p_max")


@dataclass(frozen=True)
class DerSpec:
    kind: str
    bus: int
    params: object
    power_factor: float = 0.95

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DerError(f"unknown DER kind {self.kind!r}")
        if not 0.0 < self.power_factor <= 1.0:
            raise DerError("DER power factor must be in (0, 1]")

    @property
    def tan_phi(self) -> float:
        return float(np.tan(np.arccos(self.power_factor)))

    def power_band(self, T: int) -> tuple[np.ndarray, np.ndarray]:
        """Lower/upper bounds on the injection x_d per period."""
        p = self.params
        if self.kind == "pv":
            return np.zeros(T), np.asarray(p.p_avail)
        if self.kind == "es":
            return np.asarray(p.p_min), np.asarray(p.p_max)
        # Consumption devices bound -x, so the injection band flips.
        return -np.asarray(p.p_max), -np.asarray(p.p_min)


@dataclass(frozen=True)
class DerFleet:
    ders: tuple[DerSpec, ...]

    def __iter__(self):
        return iter(self.ders)

    def __len__(self):
        return len(self.ders)

    def at_bus(self, bus_id: int) -> list[tuple[int, DerSpec]]:
        return [(i, d) for i, d in enumerate(self.ders) if d.bus == bus_id]

    def total_apparent_capacity(self, T: int) -> float:
        cap = 0.0
        for d in self.ders:
            lo, hi = d.power_band(T)
            cap += float(np.max(np.maximum(np.abs(lo), np.abs(hi)))) / d.power_factor
        return cap


def load_fleet(path, feeder: FeederModel) -> DerFleet:
    """Parse the ``ders`` array of a feeder file against its feeder."""
    with open(path) as fh:
        raw = json.load(fh)
    T = feeder.T
    specs = []
    for rec in raw.get("ders", []):
        kind = rec["kind"]
        bus = int(rec["bus"])
        if not 1 <= bus < len(feeder.buses):
            raise DerError(f"{kind} at bus {bus}: DERs must sit on a load bus")
        pr = rec["params"]
        if kind == "pv":
            params = PvParams(p_avail=_vec(pr["p_avail"], T, "p_avail"))
        elif kind == "hvac":
            params = HvacParams(
                p_min=_vec(pr.get("p_min", 0.0), T, "p_min"),
                p_max=_vec(pr["p_max"], T, "p_max"),
                theta_min=_vec(pr["theta_min"], T, "theta_min"),
                theta_max=_vec(pr["theta_max"], T, "theta_max"),
                theta_out=_vec(pr["theta_out"], T, "theta_out"),
                theta_init=float(pr["theta_init"]),
                alpha=float(pr["alpha"]), beta=float(pr["beta"]))
        elif kind == "es":
            params = EsParams(
                p_min=_vec(pr["p_min"], T, "p_min"),
                p_max=_vec(pr["p_max"], T, "p_max"),
                e_min=_vec(pr["e_min"], T, "e_min"),
                e_max=_vec(pr["e_max"], T, "e_max"),
                e_init=float(pr["e_init"]), eta=float(pr.get("eta", 1.0)))
        elif kind == "load":
            params = LoadParams(p_min=_vec(pr.get("p_min", 0.0), T, "p_min"),
                                p_max=_vec(pr["p_max"], T, "p_max"))
        elif kind == "ev":
            params = EvParams(
                p_min=_vec(pr.get("p_min", 0.0), T, "p_min"),
                p_max=_vec(pr["p_max"], T, "p_max"),
                e_cum_min=_vec(pr["e_cum_min"], T, "e_cum_min"),
                e_cum_max=_vec(pr["e_cum_max"], T, "e_cum_max"))
        else:
            raise DerError(f"unknown DER kind {kind!r}")
        specs.append(DerSpec(kind=kind, bus=bus, params=params,
                             power_factor=float(rec.get("pf", 0.95))))
    return DerFleet(ders=tuple(specs))


def der_polytope_rows(spec: DerSpec, der_idx: int, T: int, tau: float) -> RowBlock:
    """Inequality rows of one device's feasible set, in >= form.

    Equality dynamics become opposing row pairs; the first period anchors
    to the device's initial state through the same recursion.
    """
    blk = RowBlock()
    ent = f"der:{der_idx}"
    p = spec.params

    def x(t):
        return ColTag("der_p", ent, t)

    if spec.kind == "pv":
        for t in range(T):
            blk.add_row(Row(RowTag("pv_band", ent, t, +1), {x(t): 1.0}, 0.0))
            blk.add_row(Row(RowTag("pv_band", ent, t, -1), {x(t): -1.0}, -p.p_avail[t]))
    elif spec.kind == "load":
        for t in range(T):
            blk.add_row(Row(RowTag("load_band", ent, t, +1), {x(t): -1.0}, p.p_min[t]))
            blk.add_row(Row(RowTag("load_band", ent, t, -1), {x(t): 1.0}, -p.p_max[t]))
    elif spec.kind == "hvac":
        for t in range(T):
            blk.add_row(Row(RowTag("hvac_band", ent, t, +1), {x(t): -1.0}, p.p_min[t]))
            blk.add_row(Row(RowTag("hvac_band", ent, t, -1), {x(t): 1.0}, -p.p_max[t]))
        for t in range(T):
            th = ColTag("hvac_theta", ent, t)
            blk.add_row(Row(RowTag("hvac_comfort", ent, t, +1), {th: 1.0}, p.theta_min[t]))
            blk.add_row(Row(RowTag("hvac_comfort", ent, t, -1), {th: -1.0}, -p.theta_max[t]))
        for t in range(T):
            # theta_t = alpha*out_t + (1-alpha)*theta_{t-1} - beta*x_t
            th = ColTag("hvac_theta", ent, t)
            coeffs = {th: 1.0, x(t): p.beta}
            rhs = p.alpha * p.theta_out[t]
            if t == 0:
                rhs += (1.0 - p.alpha) * p.theta_init
            else:
                coeffs[ColTag("hvac_theta", ent, t - 1)] = -(1.0 - p.alpha)
            blk.add_pair("hvac_dynamics", ent, t, coeffs, rhs=rhs)
    elif spec.kind == "es":
        for t in range(T):
            blk.add_row(Row(RowTag("es_band", ent, t, +1), {x(t): 1.0}, p.p_min[t]))
            blk.add_row(Row(RowTag("es_band", ent, t, -1), {x(t): -1.0}, -p.p_max[t]))
        for t in range(T):
            e = ColTag("es_soc", ent, t)
            blk.add_row(Row(RowTag("es_energy", ent, t, +1), {e: 1.0}, p.e_min[t]))
            blk.add_row(Row(RowTag("es_energy", ent, t, -1), {e: -1.0}, -p.e_max[t]))
        for t in range(T):
            # e_t = eta*e_{t-1} - tau*x_t
            e = ColTag("es_soc", ent, t)
            coeffs = {e: 1.0, x(t): tau}
            rhs = 0.0
            if t == 0:
                rhs = p.eta * p.e_init
            else:
                coeffs[ColTag("es_soc", ent, t - 1)] = -p.eta
            blk.add_pair("es_dynamics", ent, t, coeffs, rhs=rhs)
    elif spec.kind == "ev":
        for t in range(T):
            blk.add_row(Row(RowTag("ev_band", ent, t, +1), {x(t): -1.0}, p.p_min[t]))
            blk.add_row(Row(RowTag("ev_band", ent, t, -1), {x(t): 1.0}, -p.p_max[t]))
        for t in range(T):
            # e_cum_min_t <= -tau * sum_{s<=t} x_s <= e_cum_max_t
            cum = {x(s): -tau for s in range(t + 1)}
            blk.add_row(Row(RowTag("ev_energy", ent, t, +1), dict(cum), p.e_cum_min[t]))
            blk.add_row(Row(RowTag("ev_energy", ent, t, -1),
                            {c: -v for c, v in cum.items()}, -p.e_cum_max[t]))
    else:  # pragma: no cover - guarded in DerSpec
        raise DerError(spec.kind)
    return blk


def polytope_nonempty(spec: DerSpec, T: int, tau: float) -> bool:
    """Feasibility solve of one device's operating polytope."""
    from scipy.optimize import linprog

    blk = der_polytope_rows(spec, 0, T, tau)
    cols = {c: j for j, c in enumerate(blk.columns)}
    a = np.zeros((len(blk.rows), len(cols)))
    rhs = np.zeros(len(blk.rows))
    for r, row in enumerate(blk.rows):
        for col, v in row.coeffs.items():
            a[r, cols[col]] = v
        rhs[r] = row.rhs
    res = linprog(np.zeros(len(cols)), A_ub=-a, b_ub=-rhs,
                  bounds=[(None, None)] * len(cols), method="highs")
    return res.status == 0


@dataclass(frozen=True)
class UncertaintyModel:
    """Category-coupled multiplicative load uncertainty of level delta.

    The deviation vector has one driver per (category, period); drivers of
    one period form a 3-vector inside the Euclidean unit ball. ``delta``
    scales the multiplicative amplitude.
    """

    delta: float
    categories: tuple[str, ...] = CATEGORIES

    def __post_init__(self):
        if self.delta < 0:
            raise DerError("uncertainty level delta must be >= 0")

    def n_cols(self, T: int) -> int:
        return len(self.categories) * T

    def col(self, category: str, t: int) -> int:
        return t * len(self.categories) + self.categories.index(category)


def uncertainty_columns(feeder: FeederModel, u: UncertaintyModel) -> dict[RowTag, dict[int, float]]:
    """Deviation-column coefficients keyed by the balance row they enter.

    A balance row with right-hand side ``p0 + delta*p0*zeta`` stores
    ``-delta*p0`` in the corresponding deviation column (the column block
    sits on the subtracted side of the assembled system). Reactive rows
    scale by the bus power-factor tangent. With ``delta = 0`` the block is
    empty.
    """
    cols: dict[RowTag, dict[int, float]] = {}
    if u.delta == 0.0:
        return cols
    for t in range(feeder.T):
        for b in feeder.buses[1:]:
            j = u.col(b.category, t)
            amp = u.delta * b.nominal_p[t]
            if amp == 0.0:
                continue
            cols[RowTag("p_balance", f"bus:{b.id}", t, +1)] = {j: -amp}
            cols[RowTag("p_balance", f"bus:{b.id}", t, -1)] = {j: amp}
            cols[RowTag("q_balance", f"bus:{b.id}", t, +1)] = {j: -amp * b.tan_phi}
            cols[RowTag("q_balance", f"bus:{b.id}", t, -1)] = {j: amp * b.tan_phi}
    return cols


def sample_uncertainty(u: UncertaintyModel, T: int, rng, mode: str = "interior") -> np.ndarray:
    """Draw one deviation vector, per-period triple in (or on) the unit ball."""
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(rng)
    k = len(u.categories)
    out = np.empty(k * T)
    for t in range(T):
        v = rng.normal(size=k)
        nrm = float(np.linalg.norm(v))
        if nrm == 0.0:
            v[0], nrm = 1.0, 1.0
        v /= nrm
        if mode == "interior":
            v *= rng.uniform() ** (1.0 / k)
        elif mode != "boundary":
            raise DerError(f"unknown sampling mode {mode!r}")
        out[t * k:(t + 1) * k] = v
    return out
