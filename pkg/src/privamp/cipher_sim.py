"""One-time-pad cipher with affine privacy amplification under a side channel.

A source block ``X^n`` is padded with a uniform key ``K^n``, the ciphertext
is compressed by an affine map, and an adversary sees the compressed
ciphertext together with a rate-limited encoding ``M`` of ``Z^n``, the
output of a memoryless channel ``W`` driven by the key. Everything here is
exact enumeration except :func:`simulate`, which estimates only the
decoding error probability.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
from scipy import stats

from .affine_code import AffineEncoder, DecoderPolicy, make_decoder
from .errors import ModelError, UsageError
from .finite_field import (FieldMatrix, FieldSpec, FieldVector, all_sequences,
                           check_cap, make_rng, seq_to_index)
from .prob_types import (Channel, Distribution, JointDistribution, TypeClass,
                         entropy, mutual_information, type_index_map)
from ._parallel import parallel_map


# --- adversary ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class AdversaryEncoder:
    """Deterministic map from ``Z^n`` (by index) to a message index.

    ``message_count`` is the size of the declared message set, which may
    exceed the number of messages actually used.
    """

    table: np.ndarray
    message_count: int
    n: int
    z_size: int
    name: str = "explicit"

    def __post_init__(self):
        t = np.asarray(self.table, dtype=np.int64)
        if t.shape != (self.z_size**self.n,):
            raise UsageError(f"adversary table must have {self.z_size**self.n} entries")
        if t.min() < 0 or t.max() >= self.message_count:
            raise UsageError("adversary message index out of range")
        t.setflags(write=False)
        object.__setattr__(self, "table", t)

    @property
    def rate(self) -> float:
        """``(1/n) ln |M_A|``."""
        return math.log(self.message_count) / self.n

    def in_rate_class(self, R_A: float, eps: float = 0.0) -> bool:
        return self.message_count <= math.exp(self.n * (R_A + eps)) * (1 + 1e-12)

    def register(self, R_A: float, eps: float = 0.0) -> "AdversaryEncoder":
        """Return ``self`` if it belongs to the rate class, else raise."""
        if not self.in_rate_class(R_A, eps):
            raise ModelError(f"adversary '{self.name}' uses {self.message_count} messages, "
                             f"more than exp(n(R_A+eps)) = {math.exp(self.n * (R_A + eps)):.6g}")
        return self

    def __call__(self, z) -> int:
        z = np.asarray(z, dtype=np.int64)
        return int(self.table[seq_to_index(z, self.z_size)])

    @classmethod
    def constant(cls, n: int, z_size: int) -> "AdversaryEncoder":
        return cls(np.zeros(z_size**n, dtype=np.int64), 1, n, z_size, "constant")

    @classmethod
    def identity(cls, n: int, z_size: int) -> "AdversaryEncoder":
        return cls(np.arange(z_size**n), z_size**n, n, z_size, "identity")

    @classmethod
    def truncation(cls, n: int, z_size: int, keep: int) -> "AdversaryEncoder":
        """Report the first ``keep`` symbols of ``Z^n``."""
        if not 0 <= keep <= n:
            raise UsageError("keep must lie in [0, n]")
        table = np.arange(z_size**n) // z_size ** (n - keep)
        return cls(table, z_size**keep, n, z_size, f"truncation[{keep}]")

    @classmethod
    def truncation_for_rate(cls, n: int, z_size: int, R_A: float) -> "AdversaryEncoder":
        keep = min(n, int(math.floor(n * R_A / math.log(z_size) + 1e-12)))
        return cls.truncation(n, z_size, keep)

    @classmethod
    def type_quantizer(cls, n: int, z_size: int) -> "AdversaryEncoder":
        """Report only the empirical type of ``Z^n``."""
        types, labels = type_index_map(all_sequences(z_size, n), z_size)
        return cls(labels, len(types), n, z_size, "type-quantizer")

    @classmethod
    def random(cls, n: int, z_size: int, messages: int, rng: np.random.Generator) -> "AdversaryEncoder":
        """Uniformly random table onto ``messages`` labels."""
        return cls(rng.integers(0, messages, size=z_size**n), messages, n, z_size, f"random[{messages}]")

    @classmethod
    def from_strategy(cls, name: str, n: int, z_size: int, R_A: Optional[float] = None):
        if name == "constant":
            return cls.constant(n, z_size)
        if name == "identity":
            return cls.identity(n, z_size)
        if name == "type-quantizer":
            return cls.type_quantizer(n, z_size)
        if name == "truncation":
            if R_A is None:
                raise UsageError("truncation strategy needs R_A")
            return cls.truncation_for_rate(n, z_size, R_A)
        raise UsageError(f"unknown adversary strategy {name!r}")


STRATEGIES = ("constant", "identity", "truncation", "type-quantizer")


# --- system ------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SystemInstance:
    p_x: Distribution
    W: Channel
    encoder: AffineEncoder
    adversary: AdversaryEncoder
    p_k: Optional[Distribution] = None

    def __post_init__(self):
        q = self.encoder.spec.p
        p_k = Distribution.uniform(q) if self.p_k is None else self.p_k
        if p_k.size != q or np.max(np.abs(p_k.probs - 1.0 / q)) > 1e-12:
            raise ModelError("the key distribution must be uniform over the field")
        object.__setattr__(self, "p_k", p_k)
        if self.p_x.size != q:
            raise ModelError(f"source alphabet {self.p_x.size} != field size {q}")
        if self.W.input_size != q:
            raise ModelError(f"side channel input size {self.W.input_size} != field size {q}")
        if self.adversary.n != self.n or self.adversary.z_size != self.W.output_size:
            raise ModelError("adversary does not act on Z^n of this system")

    @property
    def spec(self) -> FieldSpec:
        return self.encoder.spec

    @property
    def n(self) -> int:
        return self.encoder.n

    @property
    def m(self) -> int:
        return self.encoder.m

    @property
    def q(self) -> int:
        return self.spec.p

    def with_encoder(self, encoder: AffineEncoder) -> "SystemInstance":
        return SystemInstance(self.p_x, self.W, encoder, self.adversary, self.p_k)

    def provenance(self) -> dict:
        return {"n": self.n, "m": self.m, "modulus": self.q,
                "rate": self.encoder.rate(), "adversary": self.adversary.name,
                "adversary_rate": self.adversary.rate}


# --- exact joint law ---------------------------------------------------------

@dataclass(eq=False)
class SystemJoint:
    """Exact law of ``(X^n, K^n, Z^n, M, C~)``.

    ``M`` and ``C~`` are deterministic, so the law is carried by the
    product table over ``(x, k, z)`` plus the two index maps.
    """

    sys: SystemInstance
    px: np.ndarray            # p_X^n(x)
    pkz: np.ndarray           # p_K^n(k) W^n(z|k), shape (q^n, |Z|^n)
    lin_image: np.ndarray     # index of xA for every x
    key_image: np.ndarray     # index of kA + b for every k
    adv: np.ndarray           # M index for every z
    xs: np.ndarray = field(repr=False)

    @property
    def atom_count(self) -> int:
        return self.px.size * self.pkz.size

    def atoms(self):
        """Materialize ``(x, k, z, a, c, prob)`` arrays over all atoms."""
        check_cap("joint atoms", self.atom_count)
        nx, (nk, nz) = self.px.size, self.pkz.shape
        x, k, z = np.meshgrid(np.arange(nx), np.arange(nk), np.arange(nz), indexing="ij")
        x, k, z = x.ravel(), k.ravel(), z.ravel()
        prob = (self.px[:, None, None] * self.pkz[None, :, :]).ravel()
        return x, k, z, self.adv[z], self._cipher(x, k), prob

    def _cipher(self, x, k):
        q, m = self.sys.q, self.sys.m
        mq = all_sequences(q, m)
        return seq_to_index((mq[self.lin_image[x]] + mq[self.key_image[k]]) % q, q)

    @property
    def n_messages(self) -> int:
        return self.sys.adversary.message_count

    def key_message(self) -> np.ndarray:
        """``p(k, a)`` as a ``(q^n, |M|)`` array."""
        out = np.zeros((self.pkz.shape[0], self.n_messages))
        for a in range(self.n_messages):
            out[:, a] = self.pkz[:, self.adv == a].sum(axis=1)
        return out

    def encoded_key_message(self) -> np.ndarray:
        """``p(k~, a)`` as a ``(q^m, |M|)`` array."""
        pka = self.key_message()
        out = np.zeros((self.sys.q**self.sys.m, self.n_messages))
        np.add.at(out, self.key_image, pka)
        return out

    def x_cipher_message(self, workers: int = 1, chunk: int = 64) -> np.ndarray:
        """``p(x, c~, a)`` accumulated over disjoint blocks of ``x``."""
        nx = self.px.size
        blocks = [range(s, min(s + chunk, nx)) for s in range(0, nx, chunk)]
        parts = parallel_map(self._xca_block, blocks, workers)
        return np.concatenate(parts, axis=0)

    def _xca_block(self, xr):
        q, m = self.sys.q, self.sys.m
        ncm = q**m * self.n_messages
        nk, nz = self.pkz.shape
        k = np.repeat(np.arange(nk), nz)
        a = np.tile(self.adv, nk)
        w = self.pkz.ravel()
        out = np.empty((len(xr), q**m, self.n_messages))
        for row, x in enumerate(xr):
            c = self._cipher(np.full(k.shape, x), k)
            out[row] = np.bincount(c * self.n_messages + a, weights=w,
                                   minlength=ncm).reshape(q**m, -1) * self.px[x]
        return out


def build_joint(sys: SystemInstance) -> SystemJoint:
    n, q = sys.n, sys.q
    nz = sys.W.output_size ** n
    check_cap("joint atoms", q ** (2 * n) * nz)
    xs = all_sequences(q, n)
    A, b = sys.encoder.A.entries, sys.encoder.b.entries
    px = sys.p_x.power(n)
    pkz = sys.p_k.power(n)[:, None] * sys.W.power(n)
    lin = seq_to_index((xs @ A) % q, q)
    key = seq_to_index((xs @ A + b) % q, q)
    return SystemJoint(sys, px, pkz, lin, key, sys.adversary.table, xs)


def _as_joint(sys_or_joint) -> SystemJoint:
    return sys_or_joint if isinstance(sys_or_joint, SystemJoint) else build_joint(sys_or_joint)


def _cond_entropy_rows(pja: np.ndarray) -> float:
    """``H(J | A)`` for a table indexed ``[j, a]``."""
    return entropy(pja) - entropy(pja.sum(axis=0))


def leakage_exact(sys, method: str = "joint", workers: int = 1) -> float:
    """``I(X^n; C~, M)`` in nats.

    ``method="joint"`` marginalizes the full joint onto ``(X^n, C~, M)``.
    ``method="reduced"`` uses ``H(C~|M) - H(K~|M)``, which follows from
    ``C~ = X~ + K~`` with ``X`` independent of ``(K, Z)``; it only touches the
    ``m``-dimensional images and serves as an independent second path.
    """
    j = _as_joint(sys)
    if method == "joint":
        t = j.x_cipher_message(workers=workers)
        return mutual_information(JointDistribution(t / t.sum()), (0,), (1, 2))
    if method == "reduced":
        q, m = j.sys.q, j.sys.m
        pka = j.encoded_key_message()
        pxt = np.bincount(j.lin_image, weights=j.px, minlength=q**m)
        mq = all_sequences(q, m)
        pca = np.zeros_like(pka)
        for xt in np.flatnonzero(pxt):
            shift = seq_to_index((mq + mq[xt]) % q, q)
            pca[shift] += pxt[xt] * pka
        return max(_cond_entropy_rows(pca) - _cond_entropy_rows(pka), 0.0)
    raise UsageError(f"unknown leakage method {method!r}")


def leakage_divergence_bound(sys, check: bool = True) -> float:
    """``D(p_{K~|M} || uniform | p_M) = m ln q - H(K~|M)``."""
    j = _as_joint(sys)
    pka = j.encoded_key_message()
    pm = pka.sum(axis=0)
    mask = pm > 0
    cond = pka[:, mask] / pm[mask]
    uniform = np.full(pka.shape[0], 1.0 / pka.shape[0])
    from .prob_types import conditional_divergence
    bound = conditional_divergence(cond.T, uniform, pm[mask])
    if check:
        leak = leakage_exact(j)
        if leak > bound + 1e-10:
            raise AssertionError(f"leakage {leak} exceeds divergence bound {bound}")
    return bound


@dataclass
class LeakageReport:
    delta_exact: float
    divergence_bound: float
    theta_bound: Optional[float]
    provenance: dict

    @property
    def ok(self) -> bool:
        return self.delta_exact <= self.divergence_bound + 1e-10

    def margin(self) -> float:
        return self.divergence_bound - self.delta_exact


def leakage_report(sys: SystemInstance, R: Optional[float] = None, workers: int = 1) -> LeakageReport:
    """Exact leakage with its divergence bound and, given ``R``, the Theta value."""
    j = build_joint(sys)
    delta = leakage_exact(j, workers=workers)
    bound = leakage_divergence_bound(j, check=False)
    th = theta(j, R) if R is not None else None
    prov = sys.provenance()
    prov["R"] = R
    for name, v in (("delta_exact", delta), ("divergence_bound", bound), ("theta", th)):
        if v is not None and not math.isfinite(v):
            raise AssertionError(f"{name} is not finite")
    return LeakageReport(delta, bound, th, prov)


# --- Theta and its tail bound ------------------------------------------------

def _key_given_message(j: SystemJoint):
    pka = j.key_message()
    pa = pka.sum(axis=0)
    cond = np.divide(pka, pa[None, :], out=np.zeros_like(pka), where=pa[None, :] > 0)
    return pka, cond


def theta(sys, R: float) -> float:
    """``E log[1 + (e^{nR} - 1) p(K^n | M)]``."""
    if R < 0:
        raise UsageError("R must be non-negative")
    j = _as_joint(sys)
    pka, cond = _key_given_message(j)
    n = j.sys.n
    vals = np.log1p(math.expm1(n * R) * cond)
    return float((pka * vals).sum())


@dataclass
class TailReport:
    R: float
    eta: float
    n: int
    wp: float
    theta: float
    bound: float
    normalized_ok: Optional[bool]

    @property
    def ok(self) -> bool:
        return self.theta <= self.bound + 1e-10 and self.normalized_ok is not False

    @property
    def margin(self) -> float:
        return self.bound - self.theta


def _log_cond_key(j: SystemJoint):
    pka, cond = _key_given_message(j)
    with np.errstate(divide="ignore"):
        return pka, np.log(cond)


def theta_tail_bound(sys, R: float, eta: float) -> TailReport:
    """Probability that the normalized key surprisal is at most ``R + eta``.

    Returns that probability together with ``n R wp + exp(-n eta)``, which
    bounds Theta; when ``nR >= 1`` also checks
    ``Theta / (nR) <= wp + exp(-n eta)``.
    """
    if eta <= 0:
        raise UsageError("eta must be positive")
    j = _as_joint(sys)
    n = j.sys.n
    pka, logc = _log_cond_key(j)
    inside = pka > 0
    event = inside & (R >= -logc / n - eta)
    wp = float(pka[event].sum())
    th = theta(j, R)
    bound = n * R * wp + math.exp(-n * eta)
    norm_ok = None
    if n * R >= 1:
        norm_ok = th / (n * R) <= wp + math.exp(-n * eta) + 1e-10
    return TailReport(R, eta, n, wp, th, bound, norm_ok)


# --- event decomposition ------------------------------------------------------

def mzk_true_joint(sys) -> JointDistribution:
    """``p(a, z, k)`` as a dense ``(|M|, |Z|^n, q^n)`` table."""
    j = _as_joint(sys)
    nk, nz = j.pkz.shape
    check_cap("M x Z^n x K^n table", j.n_messages * nz * nk)
    t = np.zeros((j.n_messages, nz, nk))
    t[j.adv, np.arange(nz), :] = j.pkz.T
    return JointDistribution(t)


def mzk_product_of_marginals(sys) -> JointDistribution:
    t = mzk_true_joint(sys).table
    pm, pz, pk = t.sum(axis=(1, 2)), t.sum(axis=(0, 2)), t.sum(axis=(0, 1))
    return JointDistribution(pm[:, None, None] * pz[None, :, None] * pk[None, None, :])


@dataclass
class EventReport:
    n: int
    eta: float
    R: float
    R_A: float
    p_B_c: float
    p_C_c: float
    p_D_c: float
    wp: float
    p_BCDE: float
    wp_tilde: float

    @property
    def tail(self) -> float:
        return math.exp(-self.n * self.eta)

    def checks(self, tol: float = 1e-10) -> dict:
        t = self.tail
        return {"B^c": self.p_B_c <= t + tol, "C^c": self.p_C_c <= t + tol,
                "D^c": self.p_D_c <= t + tol, "wp<=wp~": self.wp <= self.wp_tilde + tol}

    @property
    def ok(self) -> bool:
        return all(self.checks().values())

    def worst_margin(self) -> float:
        t = self.tail
        return min(t - self.p_B_c, t - self.p_C_c, t - self.p_D_c, self.wp_tilde - self.wp)


def event_decomposition(sys, R: float, R_A: float, eta: float,
                        q_hat: Union[JointDistribution, np.ndarray],
                        q_z: Union[Distribution, np.ndarray]) -> EventReport:
    """Probabilities of the four typicality events and the bound on ``wp``.

    ``q_hat`` is any law on ``(M, Z^n, K^n)`` and ``q_z`` any law on ``Z^n``.
    The third condition of ``wp~`` uses ``R_A``, so the adversary must belong
    to the rate class of ``R_A``.
    """
    if eta <= 0:
        raise UsageError("eta must be positive")
    j = _as_joint(sys)
    n = j.sys.n
    j.sys.adversary.register(R_A)
    nk, nz = j.pkz.shape
    qh = np.asarray(q_hat.table if isinstance(q_hat, JointDistribution) else q_hat, float)
    qz = np.asarray(q_z.probs if isinstance(q_z, Distribution) else q_z, float)
    if qh.shape != (j.n_messages, nz, nk):
        raise UsageError(f"q_hat must have shape {(j.n_messages, nz, nk)}, got {qh.shape}")
    if qz.shape != (nz,):
        raise UsageError(f"q_z must have shape {(nz,)}, got {qz.shape}")

    # atoms indexed [z, k]; a = adv[z]
    p = j.pkz.T
    pos = p > 0
    pz = p.sum(axis=1)
    pa = np.bincount(j.adv, weights=pz, minlength=j.n_messages)
    pka = j.key_message()
    with np.errstate(divide="ignore", invalid="ignore"):
        log_p = np.log(p)
        log_qh = np.log(qh[j.adv, np.arange(nz), :])
        B = (log_p - log_qh) / n >= -eta
        C = np.broadcast_to(((np.log(pz) - np.log(qz)) / n >= -eta)[:, None], p.shape)
        log_pz_given_a = np.log(pz) - np.log(pa[j.adv])
        M = j.n_messages
        D = np.broadcast_to((log_pz_given_a <= math.log(M) + n * eta + np.log(pz))[:, None], p.shape)
        D_rate = np.broadcast_to(
            ((log_pz_given_a - np.log(pz)) / n - eta <= R_A)[:, None], p.shape)
        log_k_given_a = np.log(pka[:, j.adv].T) - np.log(pa[j.adv])[:, None]
        E = R >= -log_k_given_a / n - eta

    def prob(mask):
        return float(p[mask & pos].sum())

    tail = math.exp(-n * eta)
    return EventReport(
        n=n, eta=eta, R=R, R_A=R_A,
        p_B_c=prob(~B), p_C_c=prob(~C), p_D_c=prob(~D),
        wp=prob(E), p_BCDE=prob(B & C & D_rate & E),
        wp_tilde=prob(B & C & D_rate & E) + 3 * tail,
    )


# --- ensemble leakage --------------------------------------------------------

def ensemble_mean_leakage(sys: SystemInstance, method: str = "joint",
                          cap: Optional[int] = None) -> float:
    """Average of the exact leakage over every ``(A, b)`` of the system's shape."""
    from .finite_field import exhaust_affine
    total, count = 0.0, 0
    for A, b in exhaust_affine(sys.n, sys.m, sys.spec, cap):
        total += leakage_exact(sys.with_encoder(AffineEncoder(A, b)), method=method)
        count += 1
    return total / count


# --- Monte Carlo ---------------------------------------------------------------

@dataclass
class SimulationResult:
    trials: int
    errors: int
    seed: int
    ci_low: float
    ci_high: float
    level: float

    @property
    def error_rate(self) -> float:
        return self.errors / self.trials


def _simulate_chunk(args):
    sys, table, seed, stream, size = args
    rng = make_rng(seed, stream)
    n, q = sys.n, sys.q
    A, b = sys.encoder.A.entries, sys.encoder.b.entries
    x = rng.choice(q, size=(size, n), p=sys.p_x.probs)
    k = rng.integers(0, q, size=(size, n))
    cdf = np.cumsum(sys.W.matrix, axis=1)
    u = rng.random((size, n))
    z = np.minimum((u[..., None] >= cdf[k]).sum(axis=-1), sys.W.output_size - 1)
    _ = sys.adversary.table[seq_to_index(z, sys.W.output_size)]
    c_tilde = (((x + k) % q) @ A + b) % q
    k_tilde = (k @ A + b) % q
    x_tilde = (c_tilde - k_tilde) % q
    x_hat = table[seq_to_index(x_tilde, q)]
    return int(np.count_nonzero(x_hat != seq_to_index(x, q)))


def simulate(sys: SystemInstance, trials: int, seed: int,
             policy=DecoderPolicy.DECLARE_ERROR, chunk: int = 10_000,
             workers: int = 1, level: float = 0.95) -> SimulationResult:
    """Monte Carlo decoding error rate with a Wilson interval.

    Chunk ``i`` draws from stream ``i`` of ``seed``, so results do not
    depend on ``workers``.
    """
    if trials < 1:
        raise UsageError("trials must be at least 1")
    table = make_decoder(sys.encoder, policy).table
    sizes = [min(chunk, trials - s) for s in range(0, trials, chunk)]
    jobs = [(sys, table, seed, i, size) for i, size in enumerate(sizes)]
    errors = sum(parallel_map(_simulate_chunk, jobs, workers))
    ci = stats.binomtest(errors, trials).proportion_ci(confidence_level=level, method="wilson")
    return SimulationResult(trials, errors, seed, float(ci.low), float(ci.high), level)
