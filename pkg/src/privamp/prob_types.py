"""Distributions, information measures and the method of types.

All quantities are in nats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import rel_entr, xlogy

from .errors import ModelError, UsageError
from .finite_field import check_cap

PROB_TOL = 1e-12


def _validate_probs(arr: np.ndarray, what: str) -> np.ndarray:
    if not np.all(np.isfinite(arr)):
        raise ModelError(f"{what}: non-finite entries")
    if np.any(arr < 0):
        raise ModelError(f"{what}: negative entries")
    total = arr.sum()
    if abs(total - 1.0) > PROB_TOL:
        raise ModelError(f"{what}: sums to {total!r}, not 1 (tolerance {PROB_TOL})")
    arr = arr.copy()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Distribution:
    probs: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.probs, dtype=float)
        if arr.ndim != 1 or arr.size == 0:
            raise ModelError("a distribution is a non-empty probability vector")
        object.__setattr__(self, "probs", _validate_probs(arr, "distribution"))

    @property
    def size(self) -> int:
        return self.probs.shape[0]

    def __len__(self):
        return self.size

    def __getitem__(self, i):
        return self.probs[i]

    def __repr__(self):
        return f"Distribution({self.probs.tolist()})"

    @classmethod
    def uniform(cls, q: int) -> "Distribution":
        return cls(np.full(q, 1.0 / q))

    @classmethod
    def point_mass(cls, q: int, at: int = 0) -> "Distribution":
        v = np.zeros(q)
        v[at] = 1.0
        return cls(v)

    def power(self, n: int) -> np.ndarray:
        """Probabilities of ``X^n`` under the i.i.d. extension, in index order."""
        return reduce(np.kron, [self.probs] * n, np.ones(1))


@dataclass(frozen=True, eq=False)
class Channel:
    """Stochastic matrix; row ``x`` is the output law given input ``x``."""

    matrix: np.ndarray

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=float)
        if mat.ndim != 2 or mat.size == 0:
            raise ModelError("a channel is a non-empty 2-d stochastic matrix")
        rows = [_validate_probs(row, f"channel row {i}") for i, row in enumerate(mat)]
        mat = np.vstack(rows)
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    @property
    def input_size(self) -> int:
        return self.matrix.shape[0]

    @property
    def output_size(self) -> int:
        return self.matrix.shape[1]

    def row(self, x: int) -> Distribution:
        return Distribution(self.matrix[x])

    def __repr__(self):
        return f"Channel({self.matrix.tolist()})"

    @classmethod
    def bsc(cls, eps: float) -> "Channel":
        return cls([[1 - eps, eps], [eps, 1 - eps]])

    @classmethod
    def noiseless(cls, q: int) -> "Channel":
        return cls(np.eye(q))

    @classmethod
    def constant(cls, q_in: int, out: Distribution) -> "Channel":
        """Output independent of input."""
        return cls(np.tile(out.probs, (q_in, 1)))

    def power(self, n: int) -> np.ndarray:
        """Memoryless extension ``W^n(z|x)`` as a ``(q_in**n, q_out**n)`` array."""
        return reduce(np.kron, [self.matrix] * n, np.ones((1, 1)))

    def output(self, pin: Distribution) -> Distribution:
        return Distribution(pin.probs @ self.matrix)


@dataclass(frozen=True, eq=False)
class JointDistribution:
    table: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.table, dtype=float)
        if arr.ndim < 1 or arr.size == 0:
            raise ModelError("empty joint table")
        object.__setattr__(self, "table", _validate_probs(arr, "joint distribution"))

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.table.shape

    def marginal(self, *axes: int) -> "JointDistribution":
        """Marginal over the listed axes, kept in the given order."""
        drop = tuple(i for i in range(self.table.ndim) if i not in axes)
        t = self.table.sum(axis=drop) if drop else self.table
        kept = sorted(axes)
        return JointDistribution(t.transpose([kept.index(a) for a in axes]))

    def as_distribution(self) -> Distribution:
        return Distribution(self.table.ravel())

    @classmethod
    def product(cls, *dists: Distribution) -> "JointDistribution":
        t = reduce(np.multiply.outer, [d.probs for d in dists])
        return cls(t)


# --- information measures ---------------------------------------------------

def _probs(d) -> np.ndarray:
    if isinstance(d, (Distribution, JointDistribution)):
        return np.asarray(d.probs if isinstance(d, Distribution) else d.table).ravel()
    return np.asarray(d, dtype=float).ravel()


def entropy(d) -> float:
    """Shannon entropy ``-sum p ln p`` with ``0 ln 0 = 0``."""
    return float(-xlogy(_probs(d), _probs(d)).sum())


def _split(joint: JointDistribution, a_axes, b_axes) -> np.ndarray:
    t = joint.marginal(*a_axes, *b_axes).table
    na = int(np.prod([joint.shape[i] for i in a_axes]))
    return t.reshape(na, -1)


def conditional_entropy(joint: JointDistribution, target=(0,), given=(1,)) -> float:
    """``H(target | given)`` for axis groups of a joint table."""
    t = _split(joint, target, given)
    return entropy(t) - entropy(t.sum(axis=0))


def mutual_information(joint: JointDistribution, a=(0,), b=(1,)) -> float:
    """``I(a; b)`` computed as a divergence from the product of marginals."""
    t = _split(joint, a, b)
    pa = t.sum(axis=1, keepdims=True)
    pb = t.sum(axis=0, keepdims=True)
    mi = float(rel_entr(t, pa * pb).sum())
    return max(mi, 0.0)


def divergence(p, q) -> float:
    """Kullback-Leibler divergence; ``+inf`` when ``p`` is not dominated by ``q``."""
    pp, qq = _probs(p), _probs(q)
    if pp.shape != qq.shape:
        raise UsageError(f"alphabet mismatch: {pp.shape} vs {qq.shape}")
    return float(rel_entr(pp, qq).sum())


def conditional_divergence(p_a_given_b, q_a, p_b) -> float:
    """``sum_b p_B(b) D(p_{A|B}(.|b) || q_A)``.

    ``p_a_given_b`` is a :class:`Channel` (or array) with one row per ``b``.
    """
    rows = p_a_given_b.matrix if isinstance(p_a_given_b, Channel) else np.asarray(p_a_given_b, float)
    qa, pb = _probs(q_a), _probs(p_b)
    if rows.shape != (pb.size, qa.size):
        raise UsageError(f"shape mismatch: rows {rows.shape}, q_A {qa.size}, p_B {pb.size}")
    per_row = rel_entr(rows, qa[None, :]).sum(axis=1)
    mask = pb > 0
    return float(np.dot(pb[mask], per_row[mask]))


def binary_entropy(x: float) -> float:
    return entropy([x, 1.0 - x])


# --- method of types ---------------------------------------------------------

@dataclass(frozen=True)
class TypeClass:
    counts: Tuple[int, ...]

    def __post_init__(self):
        c = tuple(int(v) for v in self.counts)
        if any(v < 0 for v in c):
            raise UsageError("type counts must be non-negative")
        if not c:
            raise UsageError("empty type")
        object.__setattr__(self, "counts", c)

    @property
    def n(self) -> int:
        return sum(self.counts)

    @property
    def alphabet_size(self) -> int:
        return len(self.counts)

    def distribution(self) -> Distribution:
        return Distribution(np.array(self.counts, float) / self.n)

    def entropy(self) -> float:
        return entropy(np.array(self.counts, float) / self.n)

    def entropy_key(self) -> int:
        """``prod c**c``; a larger key means strictly smaller type entropy.

        ``n H = n ln n - sum c ln c``, so comparing this integer compares
        entropies of equal-length types exactly.
        """
        return math.prod(c**c for c in self.counts)

    @classmethod
    def of(cls, seq, alphabet_size: int) -> "TypeClass":
        seq = np.asarray(seq, dtype=np.int64)
        return cls(tuple(np.bincount(seq, minlength=alphabet_size).tolist()))


def enumerate_types(n: int, alphabet_size: int, cap: Optional[int] = None) -> List[TypeClass]:
    """All compositions of ``n`` into ``alphabet_size`` non-negative parts."""
    count = math.comb(n + alphabet_size - 1, alphabet_size - 1)
    check_cap(f"types n={n}, |X|={alphabet_size}", count, cap)

    def comps(total, parts):
        if parts == 1:
            yield (total,)
            return
        for first in range(total, -1, -1):
            for rest in comps(total - first, parts - 1):
                yield (first,) + rest

    types = [TypeClass(c) for c in comps(n, alphabet_size)]
    assert len(types) == count <= (n + 1) ** alphabet_size
    return types


def type_class_size(t: TypeClass, check: bool = True) -> int:
    """Exact multinomial ``n! / prod c!``; optionally checks the entropy sandwich."""
    size = math.factorial(t.n)
    for c in t.counts:
        size //= math.factorial(c)
    if check:
        lo, hi = type_class_size_bounds(t)
        if not (lo <= size * (1 + 1e-12) and size <= hi * (1 + 1e-12)):
            raise AssertionError(f"type-class size {size} outside [{lo}, {hi}] for {t}")
    return size


def type_class_size_bounds(t: TypeClass) -> Tuple[float, float]:
    """``((n+1)^-|X| e^{nH}, e^{nH})``."""
    nh = t.n * t.entropy()
    return math.exp(nh - t.alphabet_size * math.log(t.n + 1)), math.exp(nh)


def sequence_prob(seq, p: Distribution) -> float:
    seq = np.asarray(seq, dtype=np.int64)
    return float(np.prod(p.probs[seq]))


def typeclass_prob_bound(t: TypeClass, p: Distribution, check: bool = True) -> Tuple[float, float]:
    """Exact ``p^n(T_t)`` and the bound ``exp(-n D(t || p))``."""
    if t.alphabet_size != p.size:
        raise UsageError("type and distribution alphabets differ")
    per_seq = math.prod(float(p.probs[i]) ** c for i, c in enumerate(t.counts))
    exact = type_class_size(t, check=False) * per_seq
    d = divergence(np.array(t.counts, float) / t.n, p.probs)
    bound = math.exp(-t.n * d) if math.isfinite(d) else 0.0
    if check and exact > bound * (1 + 1e-12) + 1e-300:
        raise AssertionError(f"type-class probability {exact} exceeds bound {bound}")
    return exact, bound


def type_index_map(seqs: np.ndarray, alphabet_size: int):
    """Group sequences by type.

    Returns ``(types, labels)`` where ``labels[i]`` indexes ``types`` for row ``i``.
    """
    counts = np.stack([(seqs == a).sum(axis=1) for a in range(alphabet_size)], axis=1)
    uniq, labels = np.unique(counts, axis=0, return_inverse=True)
    return [TypeClass(tuple(row)) for row in uniq.tolist()], labels.ravel()
