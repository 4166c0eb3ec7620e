"""Error and secrecy exponents.

Two functionals of the key/side-channel pair ``(p_K, W)`` bound the
leakage exponent:

* the ``(mu, alpha)`` family ``omega``/``Omega``/``F``, minimized over
  auxiliaries ``q(u, z, k) = q_U(u) q_{Z|U}(z|u) p_{K|Z}(k|z)``;
* the ``(mu, lambda)`` family ``omega~``/``Omega~``/``F~``, minimized over
  auxiliaries that keep the model's ``p_{ZK}`` and choose ``p_{U|Z}``.

Both inner minimizations are nonconvex. They use a deterministic multistart
over a stick-breaking box (see :mod:`privamp._simplex`), so every value is a
best-found upper estimate of the true minimum. Tables over the outer grids do
not depend on the rates, so they are cached per model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from ._simplex import SimplexProduct, multistart_minimize
from .errors import ModelError, UsageError
from .prob_types import Channel, Distribution, divergence, entropy

LOG_TOL = 1e-300


# --- model -------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SideModel:
    """Joint law of key ``K`` and side-channel output ``Z``.

    Output symbols of zero probability are dropped, so ``p_z > 0``.
    """

    p_k: np.ndarray
    W: np.ndarray
    p_zk: np.ndarray = field(repr=False)
    p_z: np.ndarray = field(repr=False)
    k_given_z: np.ndarray = field(repr=False)   # (|Z|, |K|)

    @classmethod
    def build(cls, p_k, W) -> "SideModel":
        pk = p_k.probs if isinstance(p_k, Distribution) else np.asarray(p_k, float)
        w = W.matrix if isinstance(W, Channel) else np.asarray(W, float)
        Distribution(pk)
        Channel(w)
        if w.shape[0] != pk.size:
            raise ModelError(f"channel has {w.shape[0]} inputs but the key alphabet has {pk.size}")
        p_zk = (pk[:, None] * w).T
        keep = p_zk.sum(axis=1) > 0
        p_zk = p_zk[keep]
        p_z = p_zk.sum(axis=1)
        return cls(pk, w, p_zk, p_z, p_zk / p_z[:, None])

    @property
    def nz(self) -> int:
        return self.p_z.size

    @property
    def nk(self) -> int:
        return self.p_k.size

    def key(self) -> Tuple:
        return (self.p_k.tobytes(), self.W.tobytes(), self.W.shape)


def _model(p_k, W) -> SideModel:
    return p_k if isinstance(p_k, SideModel) else SideModel.build(p_k, W)


# --- auxiliary joints ----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class AuxJoint:
    """Table ``q[u, z, k]`` of an auxiliary variable with ``U - Z - K`` Markov."""

    table: np.ndarray
    max_u: Optional[int] = None

    def __post_init__(self):
        t = np.asarray(self.table, float)
        if t.ndim != 3:
            raise ModelError("auxiliary table must be indexed [u, z, k]")
        if np.any(t < 0) or abs(t.sum() - 1.0) > 1e-9:
            raise ModelError("auxiliary table is not a probability law")
        if self.max_u is not None and t.shape[0] > self.max_u:
            raise ModelError(f"|U| = {t.shape[0]} exceeds the cardinality bound {self.max_u}")
        quz = t.sum(axis=2)
        qzk = t.sum(axis=0)
        qz = qzk.sum(axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            k_given_uz = t / quz[:, :, None]
            k_given_z = qzk / qz[:, None]
        gap = np.where(quz[:, :, None] > 1e-15, np.abs(k_given_uz - k_given_z[None]), 0.0)
        if gap.max(initial=0.0) > 1e-9:
            raise ModelError(f"U - Z - K Markov condition violated by {gap.max():.3g}")
        t = t.copy()
        t.setflags(write=False)
        object.__setattr__(self, "table", t)

    @property
    def sizes(self) -> Tuple[int, int, int]:
        return self.table.shape

    @classmethod
    def from_q(cls, q_u, z_given_u, k_given_z, max_u=None) -> "AuxJoint":
        q_u, zu, kz = (np.asarray(a, float) for a in (q_u, z_given_u, k_given_z))
        return cls(q_u[:, None, None] * zu[:, :, None] * kz[None, :, :], max_u)

    @classmethod
    def from_p(cls, p_z, u_given_z, k_given_z, max_u=None) -> "AuxJoint":
        p_z, uz, kz = (np.asarray(a, float) for a in (p_z, u_given_z, k_given_z))
        return cls((p_z[:, None] * uz).T[:, :, None] * kz[None, :, :], max_u)

    def mutual_info_zu(self) -> float:
        quz = self.table.sum(axis=2)
        return entropy(quz.sum(axis=0)) + entropy(quz.sum(axis=1)) - entropy(quz)

    def cond_entropy_k_u(self) -> float:
        quk = self.table.sum(axis=1)
        return entropy(quk) - entropy(quk.sum(axis=1))


def _q_tables(model: SideModel, x: np.ndarray) -> np.ndarray:
    """Q-family box parameters -> tables ``(B, U, Z, K)`` with ``|U| = |Z|``."""
    nz = model.nz
    nu_dim = nz - 1
    q_u = SimplexProduct(1, nz).to_probs(x[:, :nu_dim])[:, 0]
    zu = SimplexProduct(nz, nz).to_probs(x[:, nu_dim:])
    return q_u[:, :, None, None] * zu[..., None] * model.k_given_z[None, None]


def _q_dim(model: SideModel) -> int:
    return (model.nz - 1) + model.nz * (model.nz - 1)


def _q_box(model: SideModel, q_u, zu) -> np.ndarray:
    nz = model.nz
    return np.concatenate([SimplexProduct(1, nz).to_box(np.asarray(q_u)[None]),
                           SimplexProduct(nz, nz).to_box(np.asarray(zu))])


def _q_starts(model: SideModel):
    nz = model.nz
    pz = model.p_z
    starts = [_q_box(model, pz, np.eye(nz)),                 # U = Z
              _q_box(model, np.full(nz, 1 / nz), np.tile(pz, (nz, 1)))]   # U independent
    for z in range(nz):                                      # q_Z a point mass
        starts.append(_q_box(model, np.eye(nz)[z], np.eye(nz)))
    return starts


def _p_tables(model: SideModel, x: np.ndarray) -> np.ndarray:
    """Tilde-family box parameters -> tables ``(B, U, Z, K)`` with ``p_{ZK}`` fixed."""
    nz = model.nz
    uz = SimplexProduct(nz, nz).to_probs(x)                  # (B, Z, U)
    puz = np.swapaxes(model.p_z[None, :, None] * uz, 1, 2)   # (B, U, Z)
    return puz[..., None] * model.k_given_z[None, None]


def _p_dim(model: SideModel) -> int:
    return model.nz * (model.nz - 1)


def _p_starts(model: SideModel):
    nz = model.nz
    box = SimplexProduct(nz, nz)
    return [box.to_box(np.eye(nz)), box.to_box(np.tile(np.eye(nz)[0], (nz, 1)))]


# --- the (mu, alpha) family ----------------------------------------------------

def _marginals(tab: np.ndarray):
    quz = tab.sum(axis=-1)
    q_u = quz.sum(axis=-1)
    q_z = quz.sum(axis=-2)
    quk = tab.sum(axis=-2)
    with np.errstate(divide="ignore", invalid="ignore"):
        z_u = quz / q_u[..., None]
        k_u = quk / q_u[..., None]
    return q_u, q_z, z_u, k_u


def _omega_log(tab, p_z, mu, alpha):
    """``omega`` on the support of ``tab``; entries off the support are unused."""
    _, q_z, z_u, k_u = _marginals(tab)
    with np.errstate(divide="ignore", invalid="ignore"):
        lpz = np.log(p_z)
        a = (1 - alpha) * (lpz - np.log(q_z))[..., None, :, None]
        b = alpha * mu * (lpz[..., None, :] - np.log(z_u))[..., None]
        c = alpha * (1 - mu) * np.log(k_u)[..., :, None, :]
        return -(a + b + c)


def _omega_capital_batch(tab, p_z, mu, alpha) -> np.ndarray:
    supp = tab > 0
    w = _omega_log(tab, p_z, mu, alpha)
    e = np.where(supp, tab * np.exp(-np.where(supp, w, 0.0)), 0.0)
    return -np.log(e.reshape(e.shape[0], -1).sum(axis=1))


def _check_mu_alpha(mu, alpha):
    if not (0 <= mu <= 1 and 0 <= alpha <= 1):
        raise UsageError("mu and alpha must lie in [0, 1]")


def omega_weight(mu: float, alpha: float, q: AuxJoint, p_z) -> np.ndarray:
    """Table ``omega(z, k | u)``; ``nan`` outside the support of ``q``."""
    _check_mu_alpha(mu, alpha)
    p_z = np.asarray(p_z.probs if isinstance(p_z, Distribution) else p_z, float)
    q_z = q.table.sum(axis=(0, 2))
    if np.any((q_z > 0) & (p_z <= 0)):
        raise ModelError("q_Z charges a symbol that p_Z does not")
    w = _omega_log(q.table[None], p_z, mu, alpha)[0]
    return np.where(q.table > 0, w, np.nan)


def omega_capital(mu: float, alpha: float, q: AuxJoint, p_z) -> float:
    _check_mu_alpha(mu, alpha)
    p_z = np.asarray(p_z.probs if isinstance(p_z, Distribution) else p_z, float)
    q_z = q.table.sum(axis=(0, 2))
    if np.any((q_z > 0) & (p_z <= 0)):
        raise ModelError("q_Z charges a symbol that p_Z does not")
    return float(_omega_capital_batch(q.table[None], p_z, mu, alpha)[0])


@dataclass
class ExponentResult:
    value: float
    argmax: Dict[str, float]
    minimizer: Optional[AuxJoint]
    trace: Dict[str, object]

    def to_dict(self) -> dict:
        out = {"value": self.value, "argmax": dict(self.argmax), "trace": dict(self.trace)}
        if self.minimizer is not None:
            out["minimizer"] = self.minimizer.table.tolist()
        return out


def _omega_min_x(model, mu, alpha, n_starts, seed, refine, warm):
    f = lambda x: _omega_capital_batch(_q_tables(model, x), model.p_z, mu, alpha)
    return multistart_minimize(f, _q_dim(model), _q_starts(model), n_starts, seed, refine, warm)


def omega_min(mu: float, alpha: float, p_k, W=None, n_starts: int = 32, seed: int = 0,
              refine: int = 3, warm=None) -> ExponentResult:
    """Best-found ``min_q Omega(q | p_Z)`` over the Q family with ``|U| = |Z|``."""
    _check_mu_alpha(mu, alpha)
    model = _model(p_k, W)
    res = _omega_min_x(model, mu, alpha, n_starts, seed, refine, warm)
    q = AuxJoint(_q_tables(model, res.x[None])[0], max_u=model.nz)
    return ExponentResult(omega_capital(mu, alpha, q, model.p_z), {"mu": mu, "alpha": alpha}, q,
                          {"starts": res.starts, "refined": res.refined,
                           "iterations": res.iterations, "seed": seed, "x": res.x.tolist()})


# --- the tilde family ----------------------------------------------------------

def _tilde_log(tab, p_z, mu):
    """``omega~`` on the support."""
    _, _, z_u, k_u = _marginals(tab)
    with np.errstate(divide="ignore", invalid="ignore"):
        a = mu * (np.log(z_u) - np.log(p_z)[..., None, :])[..., None]
        b = -(1 - mu) * np.log(k_u)[..., :, None, :]
        return a + b


def _tilde_capital_batch(tab, p_z, mu, lam) -> np.ndarray:
    supp = tab > 0
    w = np.where(supp, _tilde_log(tab, p_z, mu), 0.0)
    e = np.where(supp, tab * np.exp(-lam * w), 0.0)
    return -np.log(e.reshape(e.shape[0], -1).sum(axis=1))


def _check_p(p: AuxJoint, model: SideModel):
    if p.table.shape[1:] != (model.nz, model.nk) or \
            np.max(np.abs(p.table.sum(axis=0) - model.p_zk)) > 1e-9:
        raise ModelError("auxiliary law does not reproduce the model's p_ZK")


@dataclass
class TiltedFamily:
    omega: np.ndarray       # omega~(z, k | u), nan off the support
    value: float            # Omega~
    tilted: np.ndarray      # p^(lambda)(u, z, k)

    def mean(self) -> float:
        m = self.tilted > 0
        return float((self.tilted[m] * self.omega[m]).sum())

    def variance(self) -> float:
        m = self.tilted > 0
        mu = self.mean()
        return float((self.tilted[m] * (self.omega[m] - mu) ** 2).sum())


def tilde_family(mu: float, lam: float, p: AuxJoint, p_k=None, W=None) -> TiltedFamily:
    """``omega~`` table, ``Omega~`` and the tilted law ``p^(lambda)``.

    When ``p_k``/``W`` are given, ``p`` is checked to reproduce their ``p_ZK``.
    """
    if not 0 <= mu <= 1 or lam < 0:
        raise UsageError("need mu in [0, 1] and lambda >= 0")
    tab = p.table
    p_z = tab.sum(axis=(0, 2))
    if p_k is not None:
        _check_p(p, _model(p_k, W))
    supp = tab > 0
    w = np.where(supp, _tilde_log(tab[None], p_z, mu)[0], np.nan)
    logt = np.where(supp, np.log(np.where(supp, tab, 1.0)) - lam * np.where(supp, w, 0.0), -np.inf)
    top = logt.max()
    e = np.exp(logt - top)
    z = e.sum()
    return TiltedFamily(w, float(-(math.log(z) + top)), e / z)


def tilde_capital(mu: float, lam: float, p: AuxJoint) -> float:
    p_z = p.table.sum(axis=(0, 2))
    return float(_tilde_capital_batch(p.table[None], p_z, mu, lam)[0])


def tilde_min(mu: float, lam: float, p_k, W=None, n_starts: int = 32, seed: int = 0,
              refine: int = 3, warm=None) -> ExponentResult:
    """Best-found ``min_p Omega~(p)`` with ``p_{ZK}`` fixed and ``|U| = |Z|``."""
    model = _model(p_k, W)
    f = lambda x: _tilde_capital_batch(_p_tables(model, x), model.p_z, mu, lam)
    res = multistart_minimize(f, _p_dim(model), _p_starts(model), n_starts, seed, refine, warm)
    p = AuxJoint(_p_tables(model, res.x[None])[0], max_u=model.nz)
    return ExponentResult(tilde_capital(mu, lam, p), {"mu": mu, "lambda": lam}, p,
                          {"starts": res.starts, "refined": res.refined,
                           "iterations": res.iterations, "seed": seed, "x": res.x.tolist()})


# --- cached outer tables -------------------------------------------------------

@dataclass
class OuterTable:
    """Inner minima over a ``(mu, second)`` grid, independent of the rates."""

    mu: np.ndarray
    second: np.ndarray
    values: np.ndarray
    params: np.ndarray = field(repr=False)


_TABLES: Dict[Tuple, OuterTable] = {}


def _outer_table(kind: str, model: SideModel, grid: int, second_max: float,
                 n_starts: int, seed: int) -> OuterTable:
    key = (kind, model.key(), grid, second_max, n_starts, seed)
    if key in _TABLES:
        return _TABLES[key]
    mus = np.linspace(0.0, 1.0, grid)
    if kind == "F":
        sec = np.linspace(0.0, second_max, grid)
        dim, starts = _q_dim(model), _q_starts(model)
        fun = lambda mu, s: (lambda x: _omega_capital_batch(_q_tables(model, x), model.p_z, mu, s))
    else:
        # quadratic spacing: small lambda carries the near-boundary maxima
        sec = second_max * np.linspace(0.0, 1.0, grid) ** 2
        dim, starts = _p_dim(model), _p_starts(model)
        fun = lambda mu, s: (lambda x: _tilde_capital_batch(_p_tables(model, x), model.p_z, mu, s))
    vals = np.empty((grid, grid))
    params = np.empty((grid, grid, dim))
    for i, mu in enumerate(mus):
        warm = None
        for j, s in enumerate(sec):
            res = multistart_minimize(fun(mu, s), dim, starts, n_starts, seed, 2, warm)
            vals[i, j], params[i, j] = res.value, res.x
            warm = res.x
    tab = OuterTable(mus, sec, vals, params)
    _TABLES[key] = tab
    return tab


def clear_cache():
    _TABLES.clear()


def _refine_outer(objective, mu0, s0, mu_box, s_box, rounds=2):
    """Alternating bounded scalar maximization inside a box around a grid cell."""
    best = (objective(mu0, s0), mu0, s0)
    for _ in range(rounds):
        v, mu, s = best
        r = minimize_scalar(lambda m: -objective(m, s), method="bounded",
                            bounds=mu_box, options={"xatol": 1e-7})
        if -r.fun > v:
            best = (-r.fun, float(r.x), s)
        v, mu, s = best
        r = minimize_scalar(lambda t: -objective(mu, t), method="bounded",
                            bounds=s_box, options={"xatol": 1e-7})
        if -r.fun > v:
            best = (-r.fun, mu, float(r.x))
    return best


def _sup_outer(tab: OuterTable, ratio, inner, refine: bool):
    """Maximize ``ratio(omega, mu, s)`` over the table, then refine locally.

    ``inner(mu, s, warm)`` returns ``(value, x)`` of a fresh inner minimization.
    Refinement starts from the best cell with ``s > 0`` so that maxima
    hiding between the first grid columns are still found.
    """
    M, S = np.meshgrid(tab.mu, tab.second, indexing="ij")
    obj = ratio(tab.values, M, S)
    i, j = np.unravel_index(int(np.argmax(obj)), obj.shape)
    best = (float(obj[i, j]), float(M[i, j]), float(S[i, j]), tab.params[i, j])
    trace = {"cell": [int(i), int(j)], "grid_value": best[0], "refined": False}
    if refine:
        sub = obj[:, 1:]
        i2, j2 = np.unravel_index(int(np.argmax(sub)), sub.shape)
        j2 += 1
        x0 = tab.params[i2, j2]
        cache = {}

        def f(m, s):
            v, x = inner(m, s, x0)
            cache[(m, s)] = x
            return float(ratio(v, m, s))

        mu_box = (tab.mu[max(i2 - 1, 0)], tab.mu[min(i2 + 1, tab.mu.size - 1)])
        s_box = (tab.second[j2 - 1], tab.second[min(j2 + 1, tab.second.size - 1)])
        v, m2, s2 = _refine_outer(f, float(M[i2, j2]), float(S[i2, j2]), mu_box, s_box)
        if v > best[0]:
            best = (v, m2, s2, cache[(m2, s2)])
            trace["refined"] = True
    return best, trace


def F_exponent(R_A: float, R: float, p_k, W=None, grid: int = 33, n_starts: int = 32,
               seed: int = 0, refine: bool = True) -> ExponentResult:
    """``sup_{mu, alpha} [Omega - alpha(mu R_A + (1-mu) R)] / (2 + alpha (1-mu))``."""
    if R_A < 0 or R < 0:
        raise UsageError("rates must be non-negative")
    model = _model(p_k, W)
    tab = _outer_table("F", model, grid, 1.0, n_starts, seed)
    ratio = lambda om, m, a: (om - a * (m * R_A + (1 - m) * R)) / (2 + a * (1 - m))

    def inner(m, a, warm):
        res = _omega_min_x(model, m, a, 8, seed, 1, warm)
        return res.value, res.x

    (_, mu, alpha, x), trace = _sup_outer(tab, ratio, inner, refine)
    trace.update({"grid": grid, "starts": n_starts, "seed": seed})
    q = AuxJoint(_q_tables(model, np.asarray(x)[None])[0], max_u=model.nz)
    om = omega_capital(mu, alpha, q, model.p_z)
    value = ratio(om, mu, alpha)
    trace["omega"] = om
    if value <= 0:    # alpha = 0 always gives zero
        mu, alpha, q, value = 0.0, 0.0, None, 0.0
    return ExponentResult(float(value), {"mu": mu, "alpha": alpha}, q, trace)


def f_objective(result: ExponentResult, R_A: float, R: float, p_k, W=None) -> float:
    """Re-evaluate an :func:`F_exponent` result from its stored witness."""
    mu, alpha = result.argmax["mu"], result.argmax["alpha"]
    if result.minimizer is None:
        return 0.0
    om = omega_capital(mu, alpha, result.minimizer, _model(p_k, W).p_z)
    return (om - alpha * (mu * R_A + (1 - mu) * R)) / (2 + alpha * (1 - mu))


TILDE_VARIANTS = ("printed", "mu-bar-rate")


def _tilde_ratio(R_A, R, variant):
    if variant == "printed":
        return lambda om, m, l: (om - l * (m * R_A + R)) / (2 + l * (5 - m))
    if variant == "mu-bar-rate":
        # sensitivity variant, not the defined quantity: the rate term carries (1 - mu)
        return lambda om, m, l: (om - l * (m * R_A + (1 - m) * R)) / (2 + l * (5 - m))
    raise UsageError(f"unknown variant {variant!r}; choose from {TILDE_VARIANTS}")


def F_tilde(R_A: float, R: float, p_k, W=None, grid: int = 33, lam_max: float = 4.0,
            n_starts: int = 32, seed: int = 0, refine: bool = True,
            check: bool = True, tol: float = 1e-3, variant: str = "printed") -> ExponentResult:
    """``sup_{lambda in [0, lam_max], mu} [Omega~ - lambda(mu R_A + R)] / (2 + lambda(5 - mu))``.

    With ``check`` the result is compared against :func:`F_exponent` on the
    same model and an ``AssertionError`` is raised if it exceeds it by more
    than ``tol``. ``variant="mu-bar-rate"`` replaces ``R`` by ``(1-mu) R`` in
    the numerator; it is a sensitivity experiment, not the defined quantity.
    """
    if R_A < 0 or R < 0:
        raise UsageError("rates must be non-negative")
    model = _model(p_k, W)
    tab = _outer_table("tilde", model, grid, lam_max, n_starts, seed)
    ratio = _tilde_ratio(R_A, R, variant)

    def inner(m, l, warm):
        fun = lambda xx: _tilde_capital_batch(_p_tables(model, xx), model.p_z, m, l)
        res = multistart_minimize(fun, _p_dim(model), _p_starts(model), 8, seed, 1, warm)
        return res.value, res.x

    (_, mu, lam, x), trace = _sup_outer(tab, ratio, inner, refine)
    trace.update({"grid": grid, "lambda_max": lam_max, "starts": n_starts, "seed": seed,
                  "variant": variant})
    p = AuxJoint(_p_tables(model, np.asarray(x)[None])[0], max_u=model.nz)
    om = tilde_capital(mu, lam, p)
    value = ratio(om, mu, lam)
    trace["omega_tilde"] = om
    if value <= 0:
        mu, lam, p, value = 0.0, 0.0, None, 0.0
    result = ExponentResult(float(value), {"mu": mu, "lambda": lam}, p, trace)
    if check and variant == "printed":
        big = F_exponent(R_A, R, model, grid=grid, n_starts=n_starts, seed=seed, refine=refine)
        trace["F"] = big.value
        if result.value > big.value + tol:
            raise AssertionError(f"F~ = {result.value} exceeds F = {big.value} at ({R_A}, {R})")
    return result


# --- curvature quantities ------------------------------------------------------

def R_mu(mu: float, p_k, W=None, n_starts: int = 32, seed: int = 0) -> ExponentResult:
    """``min_p [mu I(Z;U) + (1-mu) H(K|U)]``, the slope of ``Omega~`` at ``lambda = 0``."""
    model = _model(p_k, W)

    def f(x):
        tab = _p_tables(model, x)
        supp = tab > 0
        w = np.where(supp, _tilde_log(tab, model.p_z, mu), 0.0)
        return (tab * w).reshape(tab.shape[0], -1).sum(axis=1)

    res = multistart_minimize(f, _p_dim(model), _p_starts(model), n_starts, seed, 3)
    p = AuxJoint(_p_tables(model, res.x[None])[0], max_u=model.nz)
    value = mu * p.mutual_info_zu() + (1 - mu) * p.cond_entropy_k_u()
    return ExponentResult(float(value), {"mu": mu}, p, {"starts": res.starts, "seed": seed})


@dataclass
class RhoResult:
    value: float
    argmax: Dict[str, float]
    unrestricted: float      # max variance over every p at nu = 0
    tilted: float            # max over near-minimizers and nu in (0, lambda]
    trace: Dict[str, object]


def rho_variance(p_k, W=None, mu_grid: int = 11, lam_grid: int = 6, nu_grid: int = 6,
                 n_starts: int = 32, seed: int = 0, near_tol: float = 1e-6) -> RhoResult:
    """Largest variance of ``omega~`` under tilted minimizers.

    At ``lambda = 0`` every admissible ``p`` attains the minimum, so that slice
    is a maximization of ``Var_p[omega~]`` over all ``p``. For ``lambda > 0``
    the pool points within ``near_tol`` of the best-found minimum stand in for
    the set of minimizers, and ``nu`` runs over a grid of ``[0, lambda]``.
    """
    model = _model(p_k, W)
    dim = _p_dim(model)
    best = (-1.0, {})
    unrestricted, tilted = 0.0, 0.0

    def var_batch(tab, mu, nu):
        supp = tab > 0
        w = np.where(supp, _tilde_log(tab, model.p_z, mu), 0.0)
        lt = np.where(supp, np.log(np.where(supp, tab, 1.0)) - nu * w, -np.inf)
        lt = lt - lt.reshape(lt.shape[0], -1).max(axis=1)[:, None, None, None]
        e = np.exp(lt)
        e /= e.reshape(e.shape[0], -1).sum(axis=1)[:, None, None, None]
        m = (e * w).reshape(e.shape[0], -1).sum(axis=1)
        return (e * (w - m[:, None, None, None]) ** 2).reshape(e.shape[0], -1).sum(axis=1)

    for mu in np.linspace(0.0, 1.0, mu_grid):
        res = multistart_minimize(lambda x: -var_batch(_p_tables(model, x), mu, 0.0),
                                  dim, _p_starts(model), n_starts, seed, 3)
        v = -res.value
        unrestricted = max(unrestricted, v)
        if v > best[0]:
            best = (v, {"mu": float(mu), "lambda": 0.0, "nu": 0.0})
        for lam in np.linspace(0.0, 0.5, lam_grid)[1:]:
            fun = lambda x: _tilde_capital_batch(_p_tables(model, x), model.p_z, mu, lam)
            r = multistart_minimize(fun, dim, _p_starts(model), n_starts, seed, 3)
            near = r.pool[r.pool_values <= r.value + near_tol]
            near = np.vstack([r.x[None], near])
            tabs = _p_tables(model, near)
            for nu in np.linspace(0.0, lam, nu_grid):
                vs = var_batch(tabs, mu, nu)
                k = int(np.argmax(vs))
                tilted = max(tilted, float(vs[k]))
                if vs[k] > best[0]:
                    best = (float(vs[k]), {"mu": float(mu), "lambda": float(lam), "nu": float(nu)})
    return RhoResult(best[0], best[1], unrestricted, tilted,
                     {"mu_grid": mu_grid, "lambda_grid": lam_grid, "nu_grid": nu_grid,
                      "starts": n_starts, "seed": seed})


def g_inverse(v):
    """Inverse of ``a -> a + (5/4) a^2`` on ``a >= 0``."""
    v = np.asarray(v, float)
    if np.any(v < 0):
        raise UsageError("g_inverse needs v >= 0")
    out = (-2.0 + 2.0 * np.sqrt(1.0 + 5.0 * v)) / 5.0
    return float(out) if out.ndim == 0 else out


def vartheta(a):
    a = np.asarray(a, float)
    out = a + 1.25 * a * a
    return float(out) if out.ndim == 0 else out


# --- error exponent ------------------------------------------------------------

def _e_objective(pbar: np.ndarray, R: float, p_x: np.ndarray) -> np.ndarray:
    from scipy.special import rel_entr, xlogy
    h = -xlogy(pbar, pbar).sum(axis=-1)
    d = rel_entr(pbar, p_x).sum(axis=-1)
    return np.maximum(R - h, 0.0) + d


def error_exponent_binary(R: float, p1: float) -> float:
    """One-dimensional minimization for a binary source with ``P(X=1) = p1``."""
    if R < 0:
        raise UsageError("R must be non-negative")
    p_x = np.array([1 - p1, p1])
    f = lambda t: float(_e_objective(np.array([1 - t, t]), R, p_x))
    ts = np.linspace(0.0, 1.0, 4001)
    vals = _e_objective(np.stack([1 - ts, ts], axis=1), R, p_x)
    k = int(np.argmin(vals))
    lo, hi = ts[max(k - 1, 0)], ts[min(k + 1, ts.size - 1)]
    r = minimize_scalar(f, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
    return max(min(float(r.fun), float(vals[k]), f(p1)), 0.0)


def error_exponent_E(R: float, p_x, grid: int = 64, n_starts: int = 16, seed: int = 0) -> float:
    """``min over pbar of [R - H(pbar)]^+ + D(pbar || p_X)``.

    Dense grid on the simplex (box grid for larger alphabets) followed by
    bound-constrained refinement of the best points. Candidates ``p_X`` and
    the square-root tilt of ``p_X`` are always scored.
    """
    if R < 0:
        raise UsageError("R must be non-negative")
    p = np.asarray(p_x.probs if isinstance(p_x, Distribution) else p_x, float)
    q = p.size
    box = SimplexProduct(1, q)
    if q == 1:
        return max(R, 0.0)
    per_axis = max(int(round(grid ** (2.0 / (q - 1)))), 3) if q > 2 else 4001
    per_axis = min(per_axis, 400)
    axes = [np.linspace(0, 1, per_axis)] * (q - 1)
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, q - 1)
    root = np.sqrt(p) / np.sqrt(p).sum()
    extra = box.to_box(np.vstack([p, root])[:, None, :])
    pts = np.vstack([pts, extra])
    f = lambda x: _e_objective(box.to_probs(x)[:, 0], R, p)
    res = multistart_minimize(f, q - 1, list(pts), len(pts), seed, 4)
    best = min(res.value, float(_e_objective(p, R, p)), float(_e_objective(root, R, p)))
    return max(best, 0.0)


# --- finite-n correction terms -------------------------------------------------

def delta_terms(n: int, alphabet_size: int, R: float) -> Tuple[float, float]:
    """Finite-length slacks in the error and leakage exponents."""
    if n < 1 or R <= 0:
        raise UsageError("need n >= 1 and R > 0")
    q = alphabet_size
    t = (n + 1) ** q + 1
    d1 = (1 + 2 * q * math.log(n + 1) + math.log(t)) / n
    d2 = (math.log(5 * n * R) + math.log(t)) / n
    return d1, d2


def finite_length_curves(ns: Sequence[int], alphabet_size: int, R: float, E: float, F: float):
    """``exp(-n[E - d1])`` and ``exp(-n[F - d2])`` for each ``n``."""
    err, leak = [], []
    for n in ns:
        d1, d2 = delta_terms(n, alphabet_size, R)
        err.append(math.exp(-n * (E - d1)))
        leak.append(math.exp(-n * (F - d2)))
    return np.array(err), np.array(leak)
