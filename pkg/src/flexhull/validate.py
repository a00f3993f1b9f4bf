"""Scenario driving, Monte-Carlo validation and report generation.

The validation loop closes the promise the solver makes: every trajectory
inside the returned ellipsoid must be realisable by some device dispatch
under every admissible load deviation. It samples trajectory/deviation
pairs (with a boundary quota, since boundary points are the binding
certificates), re-solves the disaggregation LP for each, and aggregates
voltages and violation statistics. All sampling is seed-deterministic and
reports are written so a re-run with the same manifest is byte-identical;
wall-clock timings therefore live in the manifest, never in the CSVs.
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__ as _pkg_version
from .benders import BendersConfig, Ellipsoid, FlexResult, MasterInfeasibleError, run
from .compact import CompactAffineSystem, RecourseResult, assemble, recourse_check
from .ders import DerFleet, DerSpec, UncertaintyModel, load_fleet, sample_uncertainty
from .feeder import FeederModel, Topology, load_feeder, validate_radial


class ValidationError(RuntimeError):
    pass


class MembershipError(ValidationError):
    """Trajectory outside the candidate region."""

    def __init__(self, value: float):
        super().__init__(f"trajectory outside the ellipsoid (membership {value:.6g})")
        self.membership = value


@dataclass
class ScenarioConfig:
    feeder: str
    mode: str = "fixed"
    delta: float = 0.05
    t_window: int | None = None
    eps: float = 1e-6
    gap_tol: float = 1e-4
    samples: int = 9000
    seed: int = 0
    out_dir: str | None = None
    open_lines: tuple[tuple[int, int], ...] | None = None
    time_cap: float = 600.0
    max_iter: int = 100

    def __post_init__(self):
        if self.delta < 0:
            raise ValidationError("delta must be >= 0")
        if self.samples < 1:
            raise ValidationError("sample count must be >= 1")


@dataclass
class ValidationReport:
    samples: int
    infeasible: int
    max_slack: float
    worst_sample: int
    bin_edges: np.ndarray
    bin_counts: np.ndarray
    v_min: float
    v_max: float
    slack_tol: float

    @property
    def all_feasible(self) -> bool:
        return self.infeasible == 0


@dataclass
class VolumeRow:
    delta: float
    mode: str
    volume_index: float
    true_volume: float
    iterations: int
    certified: bool
    open_lines: str
    error: str = ""
    wall: float = 0.0
    result: FlexResult | None = None


@dataclass
class VolumeTable:
    rows: list[VolumeRow] = field(default_factory=list)

    def column(self, mode: str, attr: str = "volume_index") -> list:
        return [getattr(r, attr) for r in self.rows if r.mode == mode and not r.error]


def unit_ball_volume(n: int) -> float:
    """Volume of the n-dimensional Euclidean unit ball."""
    return math.pi ** (n / 2.0) / math.gamma(n / 2.0 + 1.0)


def ellipsoid_volume(Q) -> tuple[float, float]:
    """(volume index det(Q)^1/2, true volume index * unit ball volume)."""
    Q = np.asarray(Q, dtype=float)
    svals = np.linalg.svd(Q, compute_uv=False)
    index = float(np.sqrt(np.prod(np.clip(svals, 0.0, None))))
    return index, index * unit_ball_volume(Q.shape[0])


def sample_trajectory(ell: Ellipsoid, rng, boundary: bool = False) -> np.ndarray:
    """Uniform draw from the ellipsoid (or its surface): push the ball
    sample through the ellipsoid square root."""
    T = ell.dim
    z = rng.normal(size=T)
    nrm = float(np.linalg.norm(z))
    if nrm == 0.0:
        z[0], nrm = 1.0, 1.0
    z /= nrm
    if not boundary:
        z *= rng.uniform() ** (1.0 / T)
    return ell.c + ell.sqrt @ z


def disaggregate(ell: Ellipsoid, sys: CompactAffineSystem, p0, zeta=None,
                 s=None, membership_tol: float = 1e-9,
                 slack_tol: float = 1e-7) -> RecourseResult:
    """Recover a device dispatch realising p0 under deviation zeta.

    Rejects trajectories outside the region before solving; violations in
    the returned result are registry-resolved (equation, entity, period).
    """
    m = ell.membership(p0)
    if m > 1.0 + membership_tol:
        raise MembershipError(m)
    return recourse_check(sys, p0, zeta, s=s, tol=slack_tol)


# Voltage histogram layout: 0.005 p.u. bins across the plotted range.
HIST_LO, HIST_HI, HIST_STEP = 0.75, 1.06, 0.005


def monte_carlo_validate(result: FlexResult, sys: CompactAffineSystem,
                         n: int, seed: int, boundary_frac: float = 0.25,
                         slack_tol: float = 1e-6) -> ValidationReport:
    """Disaggregation audit over n sampled (trajectory, deviation) pairs.

    The first ``boundary_frac`` of the trajectories sit on the region
    surface; deviations alternate between interior draws and per-period
    boundary draws. Deterministic for a fixed seed.
    """
    rng = np.random.default_rng(seed)
    ell = result.ellipsoid
    s = None if result.topology is None else np.asarray(result.topology.s, dtype=float)
    u = sys.uncertainty
    feeder = sys.feeder
    T = sys.T
    edges = np.arange(HIST_LO, HIST_HI + HIST_STEP / 2, HIST_STEP)
    counts = np.zeros(len(edges) - 1, dtype=np.int64)
    v_cols = [[sys.column_index("voltage", f"bus:{b.id}", t) for b in feeder.buses[1:]]
              for t in range(T)]
    v0 = feeder.buses[0].v_min

    n_boundary = int(round(boundary_frac * n))
    infeasible = 0
    max_slack = 0.0
    worst = -1
    v_min, v_max = np.inf, -np.inf
    for i in range(n):
        p0 = sample_trajectory(ell, rng, boundary=(i < n_boundary))
        zeta = sample_uncertainty(u, T, rng, mode="interior" if i % 2 == 0 else "boundary")
        rc = disaggregate(ell, sys, p0, zeta, s=s, slack_tol=slack_tol)
        if rc.value > slack_tol:
            infeasible += 1
        if rc.value > max_slack:
            max_slack = rc.value
            worst = i
        volts = [np.sqrt(max(v0, 0.0))] * T
        for t in range(T):
            vt = np.sqrt(np.clip(rc.x[v_cols[t]], 0.0, None))
            volts.extend(vt.tolist())
        volts = np.asarray(volts)
        v_min = min(v_min, float(volts.min()))
        v_max = max(v_max, float(volts.max()))
        counts += np.histogram(np.clip(volts, HIST_LO, HIST_HI - 1e-12), bins=edges)[0]
    return ValidationReport(samples=n, infeasible=infeasible, max_slack=max_slack,
                            worst_sample=worst, bin_edges=edges, bin_counts=counts,
                            v_min=v_min, v_max=v_max, slack_tol=slack_tol)


def with_horizon(feeder: FeederModel, fleet: DerFleet, T: int) -> tuple[FeederModel, DerFleet]:
    """Restrict feeder and fleet to the first T periods."""
    if T > feeder.T:
        raise ValidationError(f"t_window {T} exceeds feeder horizon {feeder.T}")
    if T == feeder.T:
        return feeder, fleet
    buses = tuple(dataclasses.replace(b, nominal_p=b.nominal_p[:T]) for b in feeder.buses)
    feeder2 = dataclasses.replace(feeder, buses=buses, T=T)
    specs = []
    for d in fleet:
        fields = {}
        for f in dataclasses.fields(d.params):
            v = getattr(d.params, f.name)
            fields[f.name] = v[:T] if isinstance(v, tuple) else v
        specs.append(DerSpec(kind=d.kind, bus=d.bus,
                             params=type(d.params)(**fields),
                             power_factor=d.power_factor))
    return feeder2, DerFleet(ders=tuple(specs))


def _load_scenario(config: ScenarioConfig):
    feeder = load_feeder(config.feeder)
    fleet = load_fleet(config.feeder, feeder)
    if config.t_window is not None:
        feeder, fleet = with_horizon(feeder, fleet, config.t_window)
    return feeder, fleet


def reference_topology(feeder: FeederModel,
                       open_lines: tuple[tuple[int, int], ...] | None = None) -> Topology:
    """Radial configuration with the given (or file-declared) open lines."""
    if open_lines is None:
        open_lines = _file_open_lines(feeder)
    open_set = {frozenset(p) for p in open_lines}
    s = []
    for idx in feeder.switchable_lines:
        ln = feeder.lines[idx]
        s.append(0 if frozenset(ln.key) in open_set else 1)
    return validate_radial(feeder, tuple(s))


def _file_open_lines(feeder: FeederModel) -> tuple[tuple[int, int], ...]:
    if not feeder.notes:
        return ()
    try:
        note = json.loads(feeder.notes)
    except json.JSONDecodeError:
        return ()
    return tuple((int(a), int(b)) for a, b in note.get("reference_open", []))


def solve_scenario(config: ScenarioConfig, delta: float | None = None,
                   mode: str | None = None) -> tuple[FlexResult, CompactAffineSystem]:
    """Assemble and run one scenario end to end."""
    feeder, fleet = _load_scenario(config)
    delta = config.delta if delta is None else delta
    mode = config.mode if mode is None else mode
    u = UncertaintyModel(delta=delta)
    if mode == "fixed":
        topo = reference_topology(feeder, config.open_lines)
        sys = assemble(feeder, fleet, u, "fixed", topology=topo)
    else:
        sys = assemble(feeder, fleet, u, "reconfig")
    bc = BendersConfig(eps=config.eps, gap_tol=config.gap_tol,
                       time_cap=config.time_cap, max_iter=config.max_iter)
    result = run(sys, bc)
    if mode == "fixed" and result.topology is None:
        result.topology = sys.topology
    return result, sys


def sweep(config: ScenarioConfig, deltas, modes=None) -> VolumeTable:
    """Solve the scenario for every uncertainty level (and mode)."""
    if modes is None:
        modes = ("fixed", "reconfig") if config.mode == "both" else (config.mode,)
    table = VolumeTable()
    for mode in modes:
        for delta in deltas:
            t0 = time.perf_counter()
            try:
                result, _ = solve_scenario(config, delta=delta, mode=mode)
            except (MasterInfeasibleError, Exception) as exc:
                table.rows.append(VolumeRow(
                    delta=float(delta), mode=mode, volume_index=float("nan"),
                    true_volume=float("nan"), iterations=0, certified=False,
                    open_lines="", error=f"{type(exc).__name__}: {exc}",
                    wall=time.perf_counter() - t0))
                continue
            index, true_vol = ellipsoid_volume(result.ellipsoid.Q)
            topo = result.topology
            open_str = ""
            if topo is not None:
                feeder, _ = _load_scenario(config)
                names = []
                for pos, idx in enumerate(feeder.switchable_lines):
                    if topo.s[pos] == 0:
                        ln = feeder.lines[idx]
                        names.append(f"{ln.from_bus}-{ln.to_bus}")
                open_str = ";".join(names)
            table.rows.append(VolumeRow(
                delta=float(delta), mode=mode, volume_index=index,
                true_volume=true_vol, iterations=result.iterations,
                certified=result.certified, open_lines=open_str,
                wall=time.perf_counter() - t0, result=result))
    return table


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def emit_report(table: VolumeTable, out_dir,
                config: ScenarioConfig | None = None,
                validations: dict | None = None) -> list[str]:
    """Write plot-ready CSVs plus the reproducibility manifest.

    Deterministic content goes to CSV; timings (not reproducible) go only
    to the manifest.
    """
    os.makedirs(out_dir, exist_ok=True)
    written = []

    path = os.path.join(out_dir, "volume_table.csv")
    with open(path, "w") as fh:
        fh.write("delta,mode,volume_index,true_volume,iterations,certified,open_lines,error\n")
        for r in table.rows:
            fh.write(f"{_fmt(r.delta)},{r.mode},{_fmt(r.volume_index)},"
                     f"{_fmt(r.true_volume)},{r.iterations},{int(r.certified)},"
                     f"{r.open_lines},{r.error}\n")
    written.append(path)

    for r in table.rows:
        if r.result is None:
            continue
        tag = f"{r.mode}_d{int(round(1000 * r.delta))}"
        path = os.path.join(out_dir, f"trace_{tag}.csv")
        with open(path, "w") as fh:
            fh.write("iteration,subproblem_value,logdet_q\n")
            for k, (v, ld) in enumerate(zip(r.result.v_trace, r.result.logdet_trace), 1):
                fh.write(f"{k},{_fmt(v)},{_fmt(ld)}\n")
        written.append(path)
        written.extend(_emit_slices(r.result.ellipsoid, out_dir, tag))

    if validations:
        for tag, rep in validations.items():
            path = os.path.join(out_dir, f"voltage_histogram_{tag}.csv")
            with open(path, "w") as fh:
                fh.write("bin_lo,bin_hi,count\n")
                for j in range(len(rep.bin_counts)):
                    fh.write(f"{_fmt(rep.bin_edges[j])},{_fmt(rep.bin_edges[j + 1])},"
                             f"{rep.bin_counts[j]}\n")
            written.append(path)

    manifest = {
        "package": "flexhull",
        "version": _pkg_version,
        "config": None if config is None else dataclasses.asdict(config),
        "rows": [{"delta": r.delta, "mode": r.mode, "certified": r.certified,
                  "iterations": r.iterations, "error": r.error} for r in table.rows],
        "timings_s": {f"{r.mode}_d{int(round(1000 * r.delta))}": round(r.wall, 3)
                      for r in table.rows},
    }
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    written.append(path)
    return written


def _emit_slices(ell: Ellipsoid, out_dir, tag: str, points: int = 128) -> list[str]:
    """Adjacent-period projections of the region as closed point loops."""
    written = []
    theta = np.linspace(0.0, 2.0 * np.pi, points, endpoint=False)
    circle = np.vstack([np.cos(theta), np.sin(theta)])
    for t in range(ell.dim - 1):
        pair = [t, t + 1]
        sub = ell.Q[np.ix_(pair, pair)]
        vals, vecs = np.linalg.eigh(sub)
        root = (vecs * np.sqrt(np.clip(vals, 0.0, None))) @ vecs.T
        pts = ell.c[pair][:, None] + root @ circle
        path = os.path.join(out_dir, f"slice_{tag}_t{t + 1}_t{t + 2}.csv")
        with open(path, "w") as fh:
            fh.write(f"p0_t{t + 1},p0_t{t + 2}\n")
            for j in range(points):
                fh.write(f"{_fmt(pts[0, j])},{_fmt(pts[1, j])}\n")
        written.append(path)
    return written
