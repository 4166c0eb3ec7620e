"""One-helper rate region of the side channel and the inner bound on secure rates.

A pair ``(R_A, R)`` lies in the region when some auxiliary ``U - Z - K``
gives ``R_A >= I(Z;U)`` and ``R >= H(K|U)``. The lower-left frontier is
traced by minimizing ``H(K|U)`` subject to ``I(Z;U) <= r`` over a sweep of
``r``, and the region is the epigraph of the lower convex hull of the
witnessed points.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize
from scipy.special import xlogy

from ._simplex import SimplexProduct, multistart_minimize
from .errors import ModelError, UsageError
from .exponents import SideModel, _model, error_exponent_E, F_exponent
from .finite_field import make_rng
from .prob_types import Distribution, entropy

MEMBERSHIP_TOL = 1e-3


def _ent(p: np.ndarray, axes) -> np.ndarray:
    return -xlogy(p, p).sum(axis=axes)


def _region_batch(model: SideModel, u_given_z: np.ndarray):
    """``(I(Z;U), H(K|U))`` for a batch ``u_given_z`` of shape ``(B, Z, U)``."""
    pzu = model.p_z[None, :, None] * u_given_z
    pu = pzu.sum(axis=1)
    puk = np.einsum("bzu,zk->buk", pzu, model.k_given_z)
    h_z = float(entropy(model.p_z))
    info = h_z + _ent(pu, 1) - _ent(pzu, (1, 2))
    cond = _ent(puk, (1, 2)) - _ent(pu, 1)
    return np.maximum(info, 0.0), np.maximum(cond, 0.0)


def region_point(u_given_z, p_k, W=None) -> Tuple[float, float]:
    """Corner ``(I(Z;U), H(K|U))`` for a test channel ``p_{U|Z}`` (rows indexed by ``z``).

    A witness given as a full table ``[u, z, k]`` is checked for the
    Markov condition and must reproduce the model's ``p_{ZK}``.
    """
    model = _model(p_k, W)
    arr = np.asarray(u_given_z, float)
    if arr.ndim == 3:
        from .exponents import AuxJoint
        aux = AuxJoint(arr, max_u=model.nz + 1)
        if np.max(np.abs(aux.table.sum(axis=0) - model.p_zk)) > 1e-9:
            raise ModelError("witness does not reproduce the model's p_ZK")
        pzu = aux.table.sum(axis=2).T
        arr = pzu / model.p_z[:, None]
    if arr.ndim != 2 or arr.shape[0] != model.nz:
        raise UsageError(f"p_U|Z must have {model.nz} rows")
    if arr.shape[1] > model.nz + 1:
        raise ModelError(f"|U| = {arr.shape[1]} exceeds |Z| + 1")
    if np.any(arr < 0) or np.max(np.abs(arr.sum(axis=1) - 1)) > 1e-12:
        raise ModelError("p_U|Z rows must be probability vectors")
    i, h = _region_batch(model, arr[None])
    return float(i[0]), float(h[0])


class Membership(str, enum.Enum):
    INTERIOR = "interior"
    BOUNDARY = "boundary"
    EXTERIOR = "exterior"

    @property
    def in_region(self) -> bool:
        return self is not Membership.EXTERIOR


@dataclass
class RegionBoundary:
    """Witnessed frontier points and their lower convex hull."""

    points: np.ndarray                 # (N, 2) hull vertices, sorted by R_A
    witnesses: List[np.ndarray] = field(repr=False)   # p_{U|Z} per vertex
    raw_points: np.ndarray = field(repr=False)        # every swept point
    h_k: float = 0.0
    h_z: float = 0.0
    h_k_given_z: float = 0.0
    sweep: int = 0
    tol: float = MEMBERSHIP_TOL

    def frontier(self, R_A) -> np.ndarray:
        """Smallest ``R`` in the region at each ``R_A``."""
        R_A = np.asarray(R_A, float)
        return np.interp(R_A, self.points[:, 0], self.points[:, 1],
                         left=np.inf, right=self.points[-1, 1])

    def classify(self, R_A: float, R: float, tol: Optional[float] = None) -> Membership:
        tol = self.tol if tol is None else tol
        if R_A < -tol:
            return Membership.EXTERIOR
        gap = R - float(self.frontier(max(R_A, 0.0)))
        if gap > tol and R_A > tol:
            return Membership.INTERIOR
        if gap < -tol:
            return Membership.EXTERIOR
        return Membership.BOUNDARY

    def as_rows(self):
        return [(float(a), float(r)) for a, r in self.points]


def _lower_hull(pts: np.ndarray) -> List[int]:
    """Indices of the lower convex hull of points sorted by x, then keep the decreasing part."""
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    hull: List[int] = []
    for i in order:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = pts[hull[-2]], pts[hull[-1]]
            x3, y3 = pts[i]
            if (x2 - x1) * (y3 - y1) - (y2 - y1) * (x3 - x1) <= 1e-15:
                hull.pop()
            else:
                break
        hull.append(int(i))
    # keep the non-increasing (Pareto) branch
    out = [hull[0]]
    for i in hull[1:]:
        if pts[i, 1] < pts[out[-1], 1] - 1e-15:
            out.append(i)
    return out


def region_boundary(p_k, W=None, sweep: int = 41, n_starts: int = 12, seed: int = 0,
                    extra_u: int = 1) -> RegionBoundary:
    """Trace the frontier with ``|U| = |Z| + extra_u``."""
    model = _model(p_k, W)
    nz, nu = model.nz, model.nz + extra_u
    box = SimplexProduct(nz, nu)
    h_k = entropy(model.p_k)
    h_z = entropy(model.p_z)
    h_kz = entropy(model.p_zk) - h_z

    def values(x):
        return _region_batch(model, box.to_probs(np.atleast_2d(x)))

    const = np.zeros((nz, nu)); const[:, 0] = 1.0
    ident = np.zeros((nz, nu)); ident[np.arange(nz), np.arange(nz)] = 1.0
    witnesses = [const, ident]
    pts = []
    for w in witnesses:
        i, h = values(box.to_box(w))
        pts.append((float(i[0]), float(h[0])))
    rng = make_rng(seed, 11)
    pool = rng.random((n_starts, box.dim))
    prev = box.to_box(const)
    for r in np.linspace(0.0, h_z, sweep)[1:-1]:
        starts = [prev] + list(pool)
        best_x, best_h = None, np.inf
        for x0 in starts:
            res = minimize(lambda x: float(values(x)[1][0]), x0, method="SLSQP",
                           bounds=[(0.0, 1.0)] * box.dim,
                           constraints=[{"type": "ineq", "fun": lambda x: r - float(values(x)[0][0])}],
                           options={"maxiter": 300, "ftol": 1e-12})
            i, h = values(res.x)
            if i[0] <= r + 1e-9 and h[0] < best_h:
                best_x, best_h = np.clip(res.x, 0, 1), float(h[0])
        if best_x is None:
            continue
        prev = best_x
        witnesses.append(box.to_probs(best_x[None])[0])
        i, h = values(best_x)
        pts.append((float(i[0]), float(h[0])))
    raw = np.array(pts)
    idx = _lower_hull(raw)
    return RegionBoundary(raw[idx], [witnesses[i] for i in idx], raw, h_k, h_z, h_kz, sweep)


def membership(R_A: float, R: float, boundary: RegionBoundary,
               tol: Optional[float] = None) -> Membership:
    return boundary.classify(R_A, R, tol)


@dataclass
class SumRateReport:
    min_sum: float
    argmin: Tuple[float, float]
    h_k: float
    convex: bool
    raw_convex_violation: float
    tol: float

    @property
    def ok(self) -> bool:
        return abs(self.min_sum - self.h_k) <= self.tol and self.convex


def _convex_ok(points: np.ndarray, tol: float = 1e-12) -> Tuple[bool, float]:
    """Middle point of each consecutive triple on or below its chord."""
    worst = 0.0
    for a, b, c in zip(points[:-2], points[1:-1], points[2:]):
        t = (b[0] - a[0]) / (c[0] - a[0]) if c[0] > a[0] else 0.0
        chord = a[1] + t * (c[1] - a[1])
        worst = max(worst, b[1] - chord)
    return worst <= tol, worst


def sum_rate_check(p_k, W=None, boundary: Optional[RegionBoundary] = None,
                    tol: float = MEMBERSHIP_TOL) -> SumRateReport:
    bnd = boundary or region_boundary(p_k, W)
    sums = bnd.points.sum(axis=1)
    k = int(np.argmin(sums))
    convex, _ = _convex_ok(bnd.points)
    order = np.argsort(bnd.raw_points[:, 0], kind="stable")
    _, raw_worst = _convex_ok(bnd.raw_points[order])
    return SumRateReport(float(sums[k]), tuple(map(float, bnd.points[k])), bnd.h_k,
                           convex, raw_worst, tol)


@dataclass
class InnerBound:
    """Membership predicate for the inner bound on secure rate pairs."""

    h_x: float
    boundary: RegionBoundary

    def contains(self, R_A: float, R: float) -> bool:
        if R < self.h_x - 1e-12:
            return False
        return self.boundary.classify(R_A, R) is not Membership.INTERIOR

    def interior(self, R_A: float, R: float, tol: Optional[float] = None) -> bool:
        tol = self.boundary.tol if tol is None else tol
        return R > self.h_x + tol and self.boundary.classify(R_A, R, tol) is Membership.EXTERIOR

    def indicator(self, ra_grid: Sequence[float], r_grid: Sequence[float]):
        """Rows ``(R_A, R, flag)`` with ``flag`` 1 inside the inner bound."""
        return [(float(a), float(r), int(self.contains(a, r))) for a in ra_grid for r in r_grid]


def inner_bound_region(p_x, p_k, W=None, boundary: Optional[RegionBoundary] = None) -> InnerBound:
    px = p_x.probs if isinstance(p_x, Distribution) else np.asarray(p_x, float)
    return InnerBound(entropy(px), boundary or region_boundary(p_k, W))


@dataclass
class DPoint:
    R_A: float
    R: float
    E: float
    F: float
    interior: bool

    @property
    def consistent(self) -> bool:
        if self.interior:
            return self.E > 0 and self.F > 0
        return True


def d_region_points(p_x, p_k, W=None, ra_grid: Sequence[float] = (), r_grid: Sequence[float] = (),
                    boundary: Optional[RegionBoundary] = None, tol: float = MEMBERSHIP_TOL,
                    **f_kwargs) -> List[DPoint]:
    """Both exponents at every grid point of the inner bound.

    Raises ``AssertionError`` when a strict-interior point has a non-positive
    exponent.
    """
    model = _model(p_k, W)
    inner = inner_bound_region(p_x, model, boundary=boundary)
    out = []
    for a in ra_grid:
        for r in r_grid:
            if not inner.contains(a, r):
                continue
            e = error_exponent_E(r, p_x)
            f = F_exponent(a, r, model, **f_kwargs).value
            pt = DPoint(float(a), float(r), e, f, inner.interior(a, r, tol))
            if not pt.consistent:
                raise AssertionError(f"exponent not positive at interior point ({a}, {r}): E={e}, F={f}")
            out.append(pt)
    return out


def bsc_frontier(R_A, eps: float) -> np.ndarray:
    """Closed-form frontier for a uniform binary key seen through a BSC.

    ``R = h(h^{-1}(ln 2 - R_A) * eps)`` with ``a * b = a(1-b) + (1-a)b``.
    """
    from scipy.optimize import brentq
    ln2 = np.log(2.0)

    def h(x):
        return float(entropy([x, 1 - x]))

    def hinv(v):
        if v <= 0:
            return 0.0
        if v >= ln2:
            return 0.5
        return brentq(lambda x: h(x) - v, 0.0, 0.5, xtol=1e-15)

    out = []
    for ra in np.atleast_1d(np.asarray(R_A, float)):
        a = hinv(ln2 - min(max(ra, 0.0), ln2))
        out.append(h(a * (1 - eps) + (1 - a) * eps))
    return np.array(out)
