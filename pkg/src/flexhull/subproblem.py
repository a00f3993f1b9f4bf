"""Global solver for the separation problem of the cutting-plane loop.

Given a candidate ellipsoid (Q, c) and switch vector s, the separation
problem maximises

    (d - B c - C s)^T y  +  ||B^T y||_Q  +  sum_t ||(D^T y)_[t]||_2

over the dual polytope Y = {y >= 0 : A^T y = g}. A positive optimum
certifies a worst-case (trajectory, deviation) pair that the candidate
region cannot serve; the maximiser is the new cut vector. Maximising a
sum of Euclidean norms over a polytope is NP-hard, so the solver runs a
spatial branch-and-bound over the low-dimensional images

    u  = D^T y            (3 per period)
    u' = (B F)^T y        (one block of T, F the ellipsoid square root)

rather than over y itself. Each norm block is rebuilt from squared
coordinates w_i = u_i^2; the convex side w_i >= u_i^2 is kept exactly
while w_i <= u_i^2 is replaced by its secant over the node box, and every
block norm upsilon satisfies the rotated-cone row upsilon^2 <= sum(w).
This leaves exactly dim(u) + dim(u') nonconvex terms independently of how
many rows couple into the norms.

A monolithic variant that keeps the quadratic forms in y (one product
envelope per coupled row pair) runs on the same node machinery and exists
purely as a performance baseline.
"""

from __future__ import annotations

import heapq
import time
from dataclasses import dataclass, field
from itertools import combinations

import cvxpy as cp
import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from .compact import CompactAffineSystem, CompactError, maximize_over_dual

_SOLVERS = ("CLARABEL", "SCS")


class SubproblemError(RuntimeError):
    pass


def _corner_signs(k: int):
    """All +-1 sign vectors of length k (box corner directions)."""
    for bits in range(2 ** k):
        yield [1.0 if bits >> i & 1 else -1.0 for i in range(k)]


def _pair_cap_rows(sys, y) -> list:
    """Cap opposing equality-row duals at a combined unit of mass.

    Inflating both sides of a mirrored pair (with the matching slack
    nonnegativity duals deflated) changes nothing in the objective or in
    A^T y = g, so restricting to y_plus + y_minus <= 1 preserves the
    attainable value set while removing the inflation that would
    otherwise feed the triangle rows for free.
    """
    pairs = getattr(sys, "pair_rows", ())
    if not pairs:
        return []
    rows = np.array(pairs, dtype=int)
    P = sparse.coo_matrix(
        (np.ones(2 * len(pairs)),
         (np.repeat(np.arange(len(pairs)), 2), rows.ravel())),
        shape=(len(pairs), sys.n_rows)).tocsr()
    return [P @ y <= 1.0]


@dataclass
class GapReport:
    """Certified enclosure of the separation optimum."""

    objval: float
    objbound: float
    gap: float
    certified: bool = True
    n_nodes: int = 0
    wall: float = 0.0

    EPS_DIV = 1e-9

    @classmethod
    def make(cls, objval: float, objbound: float, **kw) -> "GapReport":
        objbound = max(objbound, objval - 1e-12)
        gap = abs(objval - objbound) / max(abs(objval), cls.EPS_DIV)
        return cls(objval=objval, objbound=objbound, gap=gap, **kw)


@dataclass
class BnbNode:
    lo: np.ndarray
    hi: np.ndarray
    bound: float
    depth: int
    values: np.ndarray | None = None     # branching coordinates at the relaxation
    violation: np.ndarray | None = None  # secant violation per coordinate


@dataclass
class SubproblemInstance:
    """One separation problem, frozen at a master iterate."""

    sys: CompactAffineSystem
    Q: np.ndarray
    c: np.ndarray
    s: np.ndarray | None
    r: np.ndarray                    # linear objective term on y
    E: np.ndarray                    # m x n_u stacked norm columns [D | B F]
    groups: list[np.ndarray]         # u-index blocks, one per norm
    lo: np.ndarray
    hi: np.ndarray
    seed_vertices: tuple = ()

    @property
    def n_bilinear(self) -> int:
        """Nonconvex squared terms in the reformulated model."""
        return self.E.shape[1]

    def seed_directions(self, g: int, cap: int = 8) -> list[np.ndarray]:
        """Unit directions of the seed vertices' images in group g."""
        gidx = self.groups[g]
        out: list[np.ndarray] = []
        for y in self.seed_vertices:
            u = self.E[:, gidx].T @ np.asarray(y, dtype=float)
            nrm = float(np.linalg.norm(u))
            if nrm < 1e-10:
                continue
            zhat = u / nrm
            if any(float(np.linalg.norm(zhat - z)) < 1e-6 for z in out):
                continue
            out.append(zhat)
            if len(out) >= cap:
                break
        return out

    def exact_value(self, y: np.ndarray) -> float:
        u = self.E.T @ y
        val = float(self.r @ y)
        for gidx in self.groups:
            val += float(np.linalg.norm(u[gidx]))
        return val

    def subgradient(self, u: np.ndarray) -> np.ndarray:
        """A supergradient of the objective at image point u (in y space)."""
        grad = self.r.copy()
        for gidx in self.groups:
            nrm = float(np.linalg.norm(u[gidx]))
            if nrm > 1e-12:
                grad = grad + self.E[:, gidx] @ (u[gidx] / nrm)
        return grad


def compute_bounds(sys: CompactAffineSystem, E, mode: str = "tight") -> tuple[np.ndarray, np.ndarray]:
    """Interval enclosure of E^T y over the dual polytope.

    ``fast`` sums positive/negative parts per column using y in [0, 1]
    (valid by the slack-pairing structure); ``tight`` solves two LPs per
    column and is never wider.
    """
    E = sparse.csc_matrix(E)
    n = E.shape[1]
    lo = np.zeros(n)
    hi = np.zeros(n)
    if mode == "fast":
        for j in range(n):
            col = E.getcol(j).toarray().ravel()
            lo[j] = float(np.minimum(col, 0.0).sum())
            hi[j] = float(np.maximum(col, 0.0).sum())
    elif mode == "tight":
        for j in range(n):
            col = E.getcol(j).toarray().ravel()
            if not np.any(col):
                continue
            hi[j], _ = maximize_over_dual(sys, col)
            neg, _ = maximize_over_dual(sys, -col)
            lo[j] = -neg
    else:
        raise SubproblemError(f"unknown bounds mode {mode!r}")
    # Guard against LP round-off flipping a degenerate interval.
    lo = np.minimum(lo, hi)
    return lo, hi


def build_instance(sys: CompactAffineSystem, Q: np.ndarray, c: np.ndarray,
                   s=None, bounds_mode: str = "tight",
                   sqrt_q: np.ndarray | None = None,
                   seed_vertices: tuple = ()) -> SubproblemInstance:
    c = np.asarray(c, dtype=float)
    r = sys.d - sys.B @ c
    if sys.C is not None:
        if s is None:
            raise SubproblemError("reconfiguration system needs a switch vector")
        s = np.asarray(s, dtype=float)
        r = r - sys.C @ s
    f = sqrt_q if sqrt_q is not None else _psd_sqrt(Q)
    e_d = np.asarray(sys.D.todense())
    e_q = sys.B @ f
    E = np.hstack([e_d, e_q])
    n_cat = e_d.shape[1] // sys.T if sys.T else 0
    groups = [np.arange(t * n_cat, (t + 1) * n_cat) for t in range(sys.T)]
    groups.append(np.arange(e_d.shape[1], e_d.shape[1] + sys.T))
    lo, hi = compute_bounds(sys, E, mode=bounds_mode)
    return SubproblemInstance(sys=sys, Q=np.asarray(Q, dtype=float), c=c, s=s,
                              r=r, E=E, groups=groups, lo=lo, hi=hi,
                              seed_vertices=tuple(seed_vertices))


def _psd_sqrt(Q: np.ndarray) -> np.ndarray:
    """Principal square root with eigenvalues clamped at zero."""
    Q = 0.5 * (Q + Q.T)
    vals, vecs = np.linalg.eigh(Q)
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.T


class _ReformulatedRelaxation:
    """Parametrised convex node relaxation of the squared-coordinate model.

    Each node box [lo, hi] is mapped affinely onto [-1, 1]^n so the
    squared coordinates stay well scaled however deep the search goes; on
    that box the secant overestimator of the square is simply w <= 1. The
    affine map enters as solver parameters, so one compiled problem serves
    every node.
    """

    def __init__(self, inst: SubproblemInstance):
        sys = inst.sys
        n_u = inst.E.shape[1]
        m = sys.n_rows
        self.inst = inst
        self._y = cp.Variable(m, nonneg=True)
        self._uh = cp.Variable(n_u)
        self._wh = cp.Variable(n_u)
        self._cc = cp.Parameter(n_u)    # box centre
        self._rr = cp.Parameter(n_u)    # box half-width
        self._c2 = cp.Parameter(n_u)    # centre^2
        self._cr = cp.Parameter(n_u)    # 2 * centre * half-width
        self._r2 = cp.Parameter(n_u)    # half-width^2
        n_g = len(inst.groups)
        self._ups = cp.Variable(n_g, nonneg=True)
        cons = [
            sparse.csr_matrix(sys.A.T) @ self._y == sys.g,
            inst.E.T @ self._y == self._cc + cp.multiply(self._rr, self._uh),
            self._uh >= -1.0,
            self._uh <= 1.0,
            self._wh >= cp.square(self._uh),
            self._wh <= 1.0,
        ]
        cons += _pair_cap_rows(sys, self._y)
        self._signs = []
        self._vnorms = []
        for k, gidx in enumerate(inst.groups):
            # sum(u_g^2) in normalised coordinates, with w standing in for
            # uh^2; upsilon^2 <= sigma is the rotated-cone row of the norm.
            sig = cp.sum(self._c2[gidx] + cp.multiply(self._cr[gidx], self._uh[gidx])
                         + cp.multiply(self._r2[gidx], self._wh[gidx]))
            cons.append(cp.square(self._ups[k]) <= sig)
            # Concave envelope of the block norm over the box: interpolate
            # the corner norms. Exact wherever the norm is affine on the
            # box, which fathoms support-active segments immediately.
            kk = len(gidx)
            S = np.array(list(_corner_signs(kk)), dtype=float).T  # kk x 2^kk
            lam = cp.Variable(S.shape[1], nonneg=True)
            vnorm = cp.Parameter(S.shape[1])
            cons.append(self._uh[gidx] == S @ lam)
            cons.append(cp.sum(lam) == 1.0)
            cons.append(self._ups[k] <= vnorm @ lam)
            self._signs.append(S)
            self._vnorms.append(vnorm)
            # Couple the norm back to y: with y >= 0 the triangle
            # inequality gives ||E_g^T y|| <= sum_r y_r ||E_g[r,:]||, and
            # for any unit zhat, ||u|| - zhat.u <= sum_r y_r (||E_g[r,:]||
            # - zhat.E_g[r,:]). Without these the relaxation can pay for
            # the norms with the zero-objective slack vertex.
            Eg = inst.E[:, gidx]
            row_norms = np.linalg.norm(Eg, axis=1)
            cons.append(self._ups[k] <= row_norms @ self._y)
            u_expr = self._cc[gidx] + cp.multiply(self._rr[gidx], self._uh[gidx])
            for zhat in inst.seed_directions(k):
                slack_coefs = row_norms - Eg @ zhat
                cons.append(self._ups[k] <= zhat @ u_expr + slack_coefs @ self._y)
        self._prob = cp.Problem(cp.Maximize(inst.r @ self._y + cp.sum(self._ups)), cons)

    def solve(self, lo: np.ndarray, hi: np.ndarray):
        """Returns (bound, branch values, violation scores, y point) or None."""
        cc = 0.5 * (lo + hi)
        rr = 0.5 * (hi - lo)
        self._cc.value = cc
        self._rr.value = rr
        self._c2.value = cc * cc
        self._cr.value = 2.0 * cc * rr
        self._r2.value = rr * rr
        for S, vnorm, gidx in zip(self._signs, self._vnorms, self.inst.groups):
            corners = cc[gidx][:, None] + rr[gidx][:, None] * S
            vnorm.value = np.linalg.norm(corners, axis=0)
        val = _try_solvers(self._prob)
        if val is None:
            return None
        uh = np.asarray(self._uh.value)
        wh = np.asarray(self._wh.value)
        u = cc + rr * uh
        viol = (rr * rr) * np.maximum(wh - uh * uh, 0.0)
        # Fold the realised norm overestimate into the branch scores so a
        # binding envelope still drives splits toward its group.
        ups = np.asarray(self._ups.value)
        for k, gidx in enumerate(self.inst.groups):
            gap = float(ups[k] - np.linalg.norm(u[gidx]))
            if gap > 0.0:
                denom = float(np.sum(rr[gidx]))
                if denom > 0.0:
                    viol[gidx] = np.maximum(viol[gidx], gap * rr[gidx] / denom)
        return float(val), u, viol, np.asarray(self._y.value)


class _MonolithicRelaxation:
    """Baseline relaxation keeping the quadratic forms in y.

    Every coupled row pair of each norm's Gram matrix gets its own product
    variable with box envelopes; the branch coordinates are the y entries
    themselves. Rebuilt per node because the envelope coefficients depend
    on the node box.
    """

    def __init__(self, inst: SubproblemInstance):
        self.inst = inst
        self.grams = []
        pairs: set[tuple[int, int]] = set()
        for gidx in inst.groups:
            Eg = inst.E[:, gidx]
            M = sparse.coo_matrix(Eg @ Eg.T)
            M.data[np.abs(M.data) < 1e-14] = 0.0
            M.eliminate_zeros()
            self.grams.append(M.tocsr())
            for p, q in zip(*M.nonzero()):
                if p <= q:
                    pairs.add((int(p), int(q)))
        self.pairs = sorted(pairs)
        self.pair_pos = {pq: k for k, pq in enumerate(self.pairs)}

    def solve(self, lo: np.ndarray, hi: np.ndarray):
        inst = self.inst
        sys = inst.sys
        m = sys.n_rows
        y = cp.Variable(m)
        n_pairs = len(self.pairs)
        w = cp.Variable(n_pairs)
        n_g = len(inst.groups)
        sig = cp.Variable(n_g, nonneg=True)
        ups = cp.Variable(n_g, nonneg=True)
        cons = [sparse.csr_matrix(sys.A.T) @ y == sys.g, y >= lo, y <= hi]
        cons += _pair_cap_rows(sys, y)
        for k, (p, q) in enumerate(self.pairs):
            lp, hp, lq, hq = lo[p], hi[p], lo[q], hi[q]
            if p == q:
                cons += [w[k] >= cp.square(y[p]),
                         w[k] <= (lp + hp) * y[p] - lp * hp]
            else:
                cons += [w[k] >= lq * y[p] + lp * y[q] - lp * lq,
                         w[k] >= hq * y[p] + hp * y[q] - hp * hq,
                         w[k] <= hq * y[p] + lp * y[q] - lp * hq,
                         w[k] <= lq * y[p] + hp * y[q] - hp * lq]
        for k, (gidx, M) in enumerate(zip(inst.groups, self.grams)):
            # y^T M y = sum_p M_pp y_p^2 + 2 sum_{p<q} M_pq y_p y_q
            coef = np.zeros(n_pairs)
            Mc = M.tocoo()
            for p, q, v in zip(Mc.row, Mc.col, Mc.data):
                if p > q:
                    continue
                coef[self.pair_pos[(int(p), int(q))]] += v if p == q else 2.0 * v
            if n_pairs:
                cons.append(sig[k] == coef @ w)
            else:
                cons.append(sig[k] == 0.0)
            cons.append(sig[k] >= cp.sum_squares(inst.E[:, gidx].T @ y))
            cons.append(cp.square(ups[k]) <= sig[k])
        prob = cp.Problem(cp.Maximize(inst.r @ y + cp.sum(ups)), cons)
        val = _try_solvers(prob)
        if val is None:
            return None
        yv = np.asarray(y.value)
        wv = np.asarray(w.value) if n_pairs else np.zeros(0)
        viol = np.zeros(m)
        for k, (p, q) in enumerate(self.pairs):
            viol_k = abs(wv[k] - yv[p] * yv[q])
            viol[p] += viol_k
            viol[q] += viol_k
        return float(val), yv, viol, yv


_SOLVER_OPTS = {
    "CLARABEL": {"max_iter": 500},
    "SCS": {"eps": 1e-9, "max_iters": 50_000},
}


def _try_solvers(prob: cp.Problem):
    for name in _SOLVERS:
        try:
            prob.solve(solver=name, **_SOLVER_OPTS.get(name, {}))
        except Exception:
            continue
        if prob.status in ("optimal", "optimal_inaccurate"):
            return prob.value
        if prob.status in ("infeasible", "infeasible_inaccurate"):
            return None
    raise SubproblemError("all conic solvers failed on a node relaxation")


def _round_to_vertex(inst: SubproblemInstance, u: np.ndarray) -> np.ndarray | None:
    """Feasible vertex by maximising the linearised objective at u."""
    grad = inst.subgradient(u)
    try:
        _, y = maximize_over_dual(inst.sys, grad)
    except CompactError:
        return None
    return y


@dataclass
class _Sector:
    """Direction cone of one norm block: {rho (zhat + P t) : t in box}."""

    zhat: np.ndarray
    tangent: np.ndarray       # k x (k-1) orthonormal complement of zhat
    t_lo: np.ndarray
    t_hi: np.ndarray

    @property
    def gamma(self) -> float:
        """sec of the widest angle in the cone; ||u|| <= gamma * zhat.u."""
        return float(np.sqrt(1.0 + np.sum(np.maximum(self.t_lo**2, self.t_hi**2))))

    def recentered(self) -> "_Sector":
        """Point the frame at the box centre and re-enclose the corners.

        Keeps the secant factor second order in the box width; with the
        parent frame it would only be first order for off-axis boxes.
        """
        k = self.zhat.shape[0]
        if k == 1:
            return self
        centre = self.zhat + self.tangent @ (0.5 * (self.t_lo + self.t_hi))
        z_new = centre / np.linalg.norm(centre)
        q, _ = np.linalg.qr(np.column_stack([z_new, np.eye(k)]))
        p_new = q[:, 1:k]
        corners = []
        for signs in _corner_signs(k - 1):
            t = np.where(np.asarray(signs) > 0, self.t_hi, self.t_lo)
            d = self.zhat + self.tangent @ t
            depth = float(z_new @ d)
            if depth <= 0.05:
                return self  # too wide to recentre safely
            corners.append((p_new.T @ d) / depth)
        corners = np.array(corners)
        return _Sector(zhat=z_new, tangent=p_new,
                       t_lo=corners.min(axis=0), t_hi=corners.max(axis=0))


def _axis_sectors(k: int) -> list[_Sector]:
    """2k axis-aligned caps covering every direction of R^k."""
    out = []
    span = np.sqrt(max(k - 1, 1))
    for i in range(k):
        for sign in (1.0, -1.0):
            zhat = np.zeros(k)
            zhat[i] = sign
            tangent = np.delete(np.eye(k), i, axis=1)
            out.append(_Sector(zhat=zhat, tangent=tangent,
                               t_lo=np.full(k - 1, -span),
                               t_hi=np.full(k - 1, span)))
    return out


class _SectorCertifier:
    """Decides max <=? target by branching over norm-block directions.

    Inside a cone of directions the block norm obeys the linear bound
    ||u_g|| <= gamma * zhat^T u_g, exact at u_g = 0, so the degenerate
    apex region that defeats box relaxations is painless here. Each node
    is one LP: maximise r.y + sum_g gamma_g zhat_g.(E_g^T y) subject to
    the dual polytope (plus its pair caps), the image box, and the cone
    membership rows. Unsectored blocks contribute their worst box norm as
    a constant until branching introduces their axis caps.
    """

    def __init__(self, inst: SubproblemInstance):
        self.inst = inst
        sys = inst.sys
        m = sys.n_rows
        n_g = len(inst.groups)
        pairs = getattr(sys, "pair_rows", ())
        ub_rows = []
        rhs = []
        if pairs:
            idx = np.array(pairs, dtype=int)
            ub_rows.append(sparse.hstack([sparse.coo_matrix(
                (np.ones(2 * len(pairs)),
                 (np.repeat(np.arange(len(pairs)), 2), idx.ravel())),
                shape=(len(pairs), m)), sparse.csr_matrix((len(pairs), n_g))]))
            rhs.append(np.ones(len(pairs)))
        # Image box rows: lo <= E^T y <= hi.
        Et = sparse.csr_matrix(inst.E.T)
        zg = sparse.csr_matrix((Et.shape[0], n_g))
        ub_rows.append(sparse.hstack([Et, zg]))
        rhs.append(inst.hi)
        ub_rows.append(sparse.hstack([-Et, zg]))
        rhs.append(-inst.lo)
        # Triangle rows: nu_g <= sum_r ||E_g[r,:]|| y_r, always valid.
        tri = np.zeros((n_g, m + n_g))
        for g, gidx in enumerate(inst.groups):
            tri[g, :m] = -np.linalg.norm(inst.E[:, gidx], axis=1)
            tri[g, m + g] = 1.0
        ub_rows.append(sparse.csr_matrix(tri))
        rhs.append(np.zeros(n_g))
        self._static_ub = sparse.vstack(ub_rows).tocsr()
        self._static_ub_rhs = np.concatenate(rhs)
        self._a_eq = sparse.hstack(
            [sys.A.T, sparse.csr_matrix((sys.A.shape[1], n_g))]).tocsc()
        self._cap = np.array([
            float(np.linalg.norm(np.sqrt(np.maximum(inst.lo[g]**2, inst.hi[g]**2))))
            for g in inst.groups])
        self._m = m
        self._n_g = n_g

    def solve_node(self, sectors: dict[int, _Sector]):
        """Returns (bound, y, per-group overestimate) or None if empty.

        Variables are (y, nu) with one norm surrogate nu_g per block,
        bounded by the triangle row, the block's worst box norm and, when
        the block is sectored, the cone rows nu_g <= gamma zhat.u_g.
        """
        inst = self.inst
        sys = inst.sys
        m, n_g = self._m, self._n_g
        extra_rows = []
        for g, gidx in enumerate(inst.groups):
            sec = sectors.get(g)
            if sec is None:
                continue
            Eg = inst.E[:, gidx]
            ez = Eg @ sec.zhat
            row = np.zeros(m + n_g)
            row[:m] = -sec.gamma * ez
            row[m + g] = 1.0
            extra_rows.append(row)                      # nu <= gamma zhat.u
            row = np.zeros(m + n_g)
            row[:m] = -ez
            extra_rows.append(row)                      # zhat.u >= 0
            Ep = Eg @ sec.tangent
            for i in range(Ep.shape[1]):
                row = np.zeros(m + n_g)
                row[:m] = Ep[:, i] - sec.t_hi[i] * ez
                extra_rows.append(row)
                row = np.zeros(m + n_g)
                row[:m] = sec.t_lo[i] * ez - Ep[:, i]
                extra_rows.append(row)
        a_ub = self._static_ub
        b_ub = self._static_ub_rhs
        if extra_rows:
            a_ub = sparse.vstack([a_ub, sparse.csr_matrix(np.array(extra_rows))])
            b_ub = np.concatenate([b_ub, np.zeros(len(extra_rows))])
        obj = np.concatenate([inst.r, np.ones(n_g)])
        bounds = [(0.0, 1.0)] * m + [(0.0, float(self._cap[g])) for g in range(n_g)]
        res = linprog(-obj, A_ub=a_ub.tocsc(), b_ub=b_ub,
                      A_eq=self._a_eq, b_eq=sys.g,
                      bounds=bounds, method="highs")
        if res.status == 2:
            return None
        if res.status != 0:
            raise SubproblemError(f"sector LP failed: {res.message}")
        y = np.asarray(res.x[:m])
        nu = np.asarray(res.x[m:])
        u = inst.E.T @ y
        over = np.zeros(n_g)
        for g, gidx in enumerate(inst.groups):
            over[g] = nu[g] - float(np.linalg.norm(u[gidx]))
        return -float(res.fun), y, over

    def run(self, target: float, deadline: float, consider,
            stop_check) -> tuple[bool, float, int]:
        """Returns (all nodes at or below target, global bound, node count)."""
        heap: list[tuple[float, int, dict]] = []
        counter = 0
        pruned_max = -np.inf
        n_nodes = 0

        def push(sectors):
            nonlocal counter, pruned_max, n_nodes
            out = self.solve_node(sectors)
            n_nodes += 1
            if out is None:
                return
            bound, y, over = out
            consider(y)
            if bound <= target:
                pruned_max = max(pruned_max, bound)
                return
            heapq.heappush(heap, (-bound, counter, sectors, over))
            counter += 1

        push({})
        while heap:
            if time.perf_counter() > deadline or stop_check():
                return False, max(-heap[0][0], pruned_max), n_nodes
            negb, _, sectors, over = heapq.heappop(heap)
            bound = -negb
            g = int(np.argmax(over))
            sec = sectors.get(g)
            if sec is None:
                k = len(self.inst.groups[g])
                for new_sec in _axis_sectors(k):
                    child = dict(sectors)
                    child[g] = new_sec
                    push(child)
                continue
            widths = sec.t_hi - sec.t_lo
            i = int(np.argmax(widths))
            if widths[i] <= 1e-9:
                # Degenerate cone that still exceeds the target: keep its
                # bound in the certificate rather than splitting forever.
                return False, max(-heap[0][0] if heap else -np.inf,
                                  pruned_max, bound), n_nodes
            split = 0.5 * (sec.t_lo[i] + sec.t_hi[i])
            for side in (0, 1):
                t_lo = sec.t_lo.copy()
                t_hi = sec.t_hi.copy()
                if side == 0:
                    t_hi[i] = split
                else:
                    t_lo[i] = split
                child = dict(sectors)
                child[g] = _Sector(zhat=sec.zhat, tangent=sec.tangent,
                                   t_lo=t_lo, t_hi=t_hi)
                push(child)
        return True, pruned_max, n_nodes


def solve_subproblem(inst: SubproblemInstance, gap_tol: float = 1e-4,
                     time_cap: float = 600.0, bound_target: float | None = None,
                     stop_above: float | None = None, max_nodes: int = 200_000,
                     monolithic: bool = False,
                     trace: list | None = None) -> tuple[np.ndarray, float, GapReport]:
    """Best-bound spatial branch-and-bound for the separation problem.

    Terminates when the relative enclosure gap drops below ``gap_tol`` or
    the global upper bound falls below ``bound_target`` (useful at
    convergence, where the true optimum is exactly zero and a relative gap
    is meaningless). With ``stop_above`` set, the search also returns as
    soon as some incumbent exceeds that value: a cutting-plane loop only
    needs one sufficiently violated vertex per round, not a certified
    maximum. Incumbents are always polytope vertices obtained by rounding
    node relaxation points through an LP. Deterministic for fixed inputs:
    single worker, FIFO tie-breaking.
    """
    if gap_tol <= 0:
        raise SubproblemError("gap_tol must be positive")
    t0 = time.perf_counter()
    relaxer = _MonolithicRelaxation(inst) if monolithic else _ReformulatedRelaxation(inst)
    if monolithic:
        root_lo = np.zeros(inst.sys.n_rows)
        root_hi = np.ones(inst.sys.n_rows)
    else:
        root_lo, root_hi = inst.lo.copy(), inst.hi.copy()

    best_y: np.ndarray | None = None
    best_val = -np.inf

    def consider(y: np.ndarray | None):
        nonlocal best_y, best_val
        if y is None:
            return
        val = inst.exact_value(y)
        if val > best_val:
            best_val, best_y = val, y

    for y_seed in inst.seed_vertices:
        consider(np.asarray(y_seed, dtype=float))

    heap: list[tuple[float, int, BnbNode]] = []
    counter = 0

    def push(node: BnbNode):
        nonlocal counter
        heapq.heappush(heap, (-node.bound, counter, node))
        counter += 1

    def relax_and_push(lo, hi, depth):
        out = relaxer.solve(lo, hi)
        if out is None:
            return
        bound, values, violation, y_pt = out
        node = BnbNode(lo=lo, hi=hi, bound=bound, depth=depth,
                       values=values, violation=violation)
        if bound > best_val + 1e-14:
            consider(_round_to_vertex(inst, inst.E.T @ y_pt))
            push(node)

    n_nodes = 1
    relax_and_push(root_lo, root_hi, 0)
    certified = True
    fathom_residual = -np.inf
    # With a bound target the box phase is only a warm start; the sector
    # phase below owns the fine certification, so cap the box nodes.
    box_budget = min(max_nodes, 300) if bound_target is not None else max_nodes

    def gap_of(bound):
        return abs(best_val - bound) / max(abs(best_val), GapReport.EPS_DIV)

    while heap:
        global_bound = max(-heap[0][0], best_val, fathom_residual)
        if gap_of(global_bound) <= gap_tol:
            break
        if bound_target is not None and global_bound <= bound_target:
            break
        if stop_above is not None and best_val > stop_above:
            certified = False
            break
        if time.perf_counter() - t0 > time_cap or n_nodes >= box_budget:
            certified = False
            break
        _, _, node = heapq.heappop(heap)
        if node.bound <= best_val + 1e-14:
            continue
        if trace is not None:
            trace.append((n_nodes, node.depth, node.bound, best_val,
                          gap_of(max(node.bound, best_val))))
        j = int(np.argmax(node.violation))
        width = node.hi[j] - node.lo[j]
        if width <= 1e-12 or node.violation[j] <= 1e-13:
            # Relaxation is essentially exact on this box, so its value is
            # attained and the incumbent rounding has already seen it. Any
            # sliver above the incumbent is numerical; keep it in the
            # certificate instead of splitting a converged box forever.
            if node.bound > best_val + 1e-9:
                fathom_residual = max(fathom_residual, node.bound)
            continue
        split = float(np.clip(node.values[j],
                              node.lo[j] + 0.2 * width,
                              node.hi[j] - 0.2 * width))
        for side in (0, 1):
            lo = node.lo.copy()
            hi = node.hi.copy()
            if side == 0:
                hi[j] = split
            else:
                lo[j] = split
            n_nodes += 1
            relax_and_push(lo, hi, node.depth + 1)

    global_bound = max(-heap[0][0], best_val, fathom_residual) if heap \
        else max(best_val, fathom_residual)

    if (bound_target is not None and not monolithic
            and global_bound > bound_target
            and (stop_above is None or best_val <= stop_above)
            and time.perf_counter() - t0 < time_cap):
        # Angular certification: box relaxations of a homogeneous norm go
        # blind near its apex, direction sectors do not.
        certifier = _SectorCertifier(inst)

        def stop_check():
            return stop_above is not None and best_val > stop_above

        ok, bound2, extra = certifier.run(bound_target, t0 + time_cap,
                                          consider, stop_check)
        n_nodes += extra
        global_bound = min(global_bound, max(bound2, best_val))
        certified = ok or (stop_above is not None and best_val > stop_above
                           and time.perf_counter() - t0 <= time_cap)

    if best_y is None:
        # Dual polytope is never empty under complete recourse.
        _, best_y = maximize_over_dual(inst.sys, inst.r)
        best_val = inst.exact_value(best_y)
        global_bound = max(global_bound, best_val)
    else:
        # Snap the incumbent to a vertex: maximising its own linearisation
        # never loses objective value.
        y_snap = _round_to_vertex(inst, inst.E.T @ best_y)
        if y_snap is not None and inst.exact_value(y_snap) >= best_val - 1e-12:
            best_y = y_snap
            best_val = max(best_val, inst.exact_value(y_snap))
    report = GapReport.make(objval=best_val, objbound=global_bound,
                            certified=certified, n_nodes=n_nodes,
                            wall=time.perf_counter() - t0)
    return best_y, best_val, report


def brute_force_subproblem(inst: SubproblemInstance, cap: int = 14) -> tuple[np.ndarray, float]:
    """Exact optimum by enumerating the vertices of the dual polytope.

    The objective is convex, so the maximum sits at a vertex; every basic
    feasible solution of {y >= 0 : A^T y = g} is visited through basis
    enumeration. Intended as the independent oracle for small systems.
    """
    sys = inst.sys
    m = sys.n_rows
    if m > cap:
        raise SubproblemError(f"{m} dual dimensions exceeds enumeration cap {cap}")
    M = np.asarray(sys.A.T.todense())
    g = sys.g
    rank = int(np.linalg.matrix_rank(M, tol=1e-9))
    best_val = -np.inf
    best_y = None
    seen = set()
    for S in combinations(range(m), rank):
        sub = M[:, S]
        if np.linalg.matrix_rank(sub, tol=1e-9) < rank:
            continue
        y_s, res, _, _ = np.linalg.lstsq(sub, g, rcond=None)
        if np.max(np.abs(sub @ y_s - g)) > 1e-9:
            continue
        if np.min(y_s) < -1e-9:
            continue
        y = np.zeros(m)
        y[list(S)] = np.clip(y_s, 0.0, None)
        key = tuple(np.round(y, 9))
        if key in seen:
            continue
        seen.add(key)
        val = inst.exact_value(y)
        if val > best_val:
            best_val, best_y = val, y
    if best_y is None:
        raise SubproblemError("dual polytope has no vertex (inconsistent system)")
    return best_y, float(best_val)
