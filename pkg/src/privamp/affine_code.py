"""Affine privacy-amplifying encoder and the minimum-entropy decoder.

The decoder is tabulated per encoder: every ``x`` in ``X^n`` is labelled by
its syndrome ``xA`` and by the rank of its type entropy, and each coset is
resolved once. Type entropies are ranked through the exact integer key
``prod c**c`` so ties are detected without floating-point noise.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
from scipy import stats

from .errors import UsageError
from .finite_field import (FieldMatrix, FieldSpec, FieldVector, all_matrices,
                           all_sequences, check_cap, make_rng, seq_to_index)
from .prob_types import (Distribution, TypeClass, divergence, enumerate_types,
                         type_index_map)


class DecoderPolicy(str, enum.Enum):
    """What the decoder outputs when no coset member is a strict minimizer."""

    DECLARE_ERROR = "declare-error"
    LEXICOGRAPHIC = "lexicographic"


@dataclass(frozen=True, eq=False)
class AffineEncoder:
    A: FieldMatrix
    b: FieldVector

    def __post_init__(self):
        if self.A.spec != self.b.spec:
            raise UsageError("A and b live in different fields")
        if self.A.cols != len(self.b):
            raise UsageError(f"b has length {len(self.b)}, A has {self.A.cols} columns")
        if self.A.cols > self.A.rows:
            raise UsageError(f"m={self.A.cols} exceeds n={self.A.rows}: not a compression")

    @property
    def spec(self) -> FieldSpec:
        return self.A.spec

    @property
    def n(self) -> int:
        return self.A.rows

    @property
    def m(self) -> int:
        return self.A.cols

    def rate(self) -> float:
        return self.m * math.log(self.spec.p) / self.n

    @classmethod
    def linear(cls, A: FieldMatrix) -> "AffineEncoder":
        return cls(A, FieldVector.zeros(A.spec, A.cols))

    def to_text(self) -> str:
        """Golden-test text form: modulus, sizes, row-major ``A``, then ``b``."""
        a = " ".join(str(v) for v in self.A.entries.ravel())
        b = " ".join(str(v) for v in self.b.entries)
        return f"modulus={self.spec.p}\nn={self.n}\nm={self.m}\nA={a}\nb={b}\n"

    @classmethod
    def from_text(cls, text: str) -> "AffineEncoder":
        fields = {}
        for line in text.strip().splitlines():
            key, _, value = line.partition("=")
            fields[key.strip()] = value.strip()
        try:
            spec = FieldSpec(int(fields["modulus"]))
            n, m = int(fields["n"]), int(fields["m"])
            a = [int(v) for v in fields["A"].split()]
            b = [int(v) for v in fields["b"].split()]
        except KeyError as exc:
            raise UsageError(f"encoder text is missing field {exc}") from None
        if len(a) != n * m or len(b) != m:
            raise UsageError("encoder text: entry count does not match n, m")
        return cls(FieldMatrix(spec, np.array(a).reshape(n, m)), FieldVector(spec, b))


def encode_linear(enc: AffineEncoder, x: FieldVector) -> FieldVector:
    if len(x) != enc.n:
        raise UsageError(f"input length {len(x)} != n={enc.n}")
    if x.spec != enc.spec:
        raise UsageError("field mismatch")
    return FieldVector(enc.spec, (x.entries @ enc.A.entries) % enc.spec.p)


def encode_affine(enc: AffineEncoder, k: FieldVector) -> FieldVector:
    return encode_linear(enc, k) + enc.b


def rate_to_m(n: int, R: float, p: int) -> int:
    """Largest ``m`` with ``(m/n) ln p <= R``; ``m = 0`` is rejected."""
    m = int(math.floor(n * R / math.log(p) + 1e-12))
    if m < 1:
        raise UsageError(f"R={R} gives m=0 at n={n}: degenerate encoder")
    return m


# --- decoder tables ----------------------------------------------------------

class _SequenceSpace:
    """Sequences of ``X^n`` with their type labels and entropy ranks."""

    _cache: dict = {}

    def __init__(self, p: int, n: int):
        self.p, self.n = p, n
        self.xs = all_sequences(p, n)
        self.types, self.type_label = type_index_map(self.xs, p)
        keys = [t.entropy_key() for t in self.types]
        distinct = sorted(set(keys), reverse=True)
        rank_of = {k: r for r, k in enumerate(distinct)}
        self.type_rank = np.array([rank_of[k] for k in keys], dtype=np.int64)
        self.rank = self.type_rank[self.type_label]
        self.n_ranks = len(distinct)
        self.index = np.arange(p**n, dtype=np.int64)
        self.type_sizes = np.bincount(self.type_label, minlength=len(self.types))

    @classmethod
    def get(cls, p: int, n: int) -> "_SequenceSpace":
        check_cap(f"X^{n} over GF({p})", p**n)
        key = (p, n)
        if key not in cls._cache:
            cls._cache[key] = cls(p, n)
        return cls._cache[key]


def _decode_table(A: np.ndarray, p: int, space: _SequenceSpace, policy) -> np.ndarray:
    """Syndrome index -> decoded sequence index, ``-1`` for failure."""
    m = A.shape[1]
    syn = seq_to_index((space.xs @ A) % p, p)
    order = np.lexsort((space.index, space.rank, syn))
    s_sorted = syn[order]
    starts = np.flatnonzero(np.r_[True, s_sorted[1:] != s_sorted[:-1]])
    best = order[starts]
    best_syn = syn[best]
    pair = syn * space.n_ranks + space.rank
    pair_counts = np.bincount(pair, minlength=(p**m) * space.n_ranks)
    tied = pair_counts[best_syn * space.n_ranks + space.rank[best]] > 1
    table = np.full(p**m, -1, dtype=np.int64)
    if DecoderPolicy(policy) is DecoderPolicy.LEXICOGRAPHIC:
        table[best_syn] = best
    else:
        table[best_syn[~tied]] = best[~tied]
    return table


def _error_vector(A: np.ndarray, p: int, space: _SequenceSpace, policy) -> np.ndarray:
    table = _decode_table(A, p, space, policy)
    syn = seq_to_index((space.xs @ A) % p, p)
    return (table[syn] != space.index).astype(np.int64)


@dataclass(frozen=True, eq=False)
class MinEntropyDecoder:
    """Tabulated decoder for one encoder and tie policy."""

    encoder: AffineEncoder
    policy: DecoderPolicy
    table: np.ndarray

    def __call__(self, xt: FieldVector) -> Optional[FieldVector]:
        i = self.table[xt.index()]
        if i < 0:
            return None
        return FieldVector.from_index(self.encoder.spec, self.encoder.n, int(i))


def make_decoder(enc: AffineEncoder, policy=DecoderPolicy.DECLARE_ERROR) -> MinEntropyDecoder:
    space = _SequenceSpace.get(enc.spec.p, enc.n)
    policy = DecoderPolicy(policy)
    return MinEntropyDecoder(enc, policy, _decode_table(enc.A.entries, enc.spec.p, space, policy))


def decode_min_entropy(enc: AffineEncoder, xt: FieldVector,
                       policy=DecoderPolicy.DECLARE_ERROR) -> Optional[FieldVector]:
    """Coset member of strictly smallest type entropy, or ``None``.

    Under the lexicographic policy ties resolve to the first minimizer in
    lexicographic order instead of failing.
    """
    if len(xt) != enc.m:
        raise UsageError(f"codeword length {len(xt)} != m={enc.m}")
    return make_decoder(enc, policy)(xt)


def error_indicator(enc: AffineEncoder, x: FieldVector,
                    policy=DecoderPolicy.DECLARE_ERROR) -> int:
    dec = make_decoder(enc, policy)
    return int(dec(encode_linear(enc, x)) != x)


def error_vector(enc: AffineEncoder, policy=DecoderPolicy.DECLARE_ERROR) -> np.ndarray:
    """Decoding-error indicator for every ``x`` in index order."""
    space = _SequenceSpace.get(enc.spec.p, enc.n)
    return _error_vector(enc.A.entries, enc.spec.p, space, policy)


def xi_by_type(enc: AffineEncoder, policy=DecoderPolicy.DECLARE_ERROR):
    """``(types, xi)``: average error indicator over each type class."""
    space = _SequenceSpace.get(enc.spec.p, enc.n)
    err = _error_vector(enc.A.entries, enc.spec.p, space, policy)
    sums = np.bincount(space.type_label, weights=err, minlength=len(space.types))
    return space.types, sums / space.type_sizes


def xi_type(enc: AffineEncoder, t: TypeClass, policy=DecoderPolicy.DECLARE_ERROR) -> float:
    if t.n != enc.n or t.alphabet_size != enc.spec.p:
        raise UsageError(f"type {t.counts} does not match n={enc.n}, |X|={enc.spec.p}")
    types, xi = xi_by_type(enc, policy)
    return float(xi[types.index(t)])


def error_prob_exact(enc: AffineEncoder, p_x: Distribution,
                     policy=DecoderPolicy.DECLARE_ERROR) -> float:
    if p_x.size != enc.spec.p:
        raise UsageError("source alphabet does not match the field")
    err = error_vector(enc, policy)
    return float(np.dot(p_x.power(enc.n), err))


def error_prob_type_bound(enc: AffineEncoder, p_x: Distribution,
                          policy=DecoderPolicy.DECLARE_ERROR, check: bool = True) -> float:
    """``sum_t xi_t exp(-n D(t || p_X))``, an upper bound on the error probability."""
    types, xi = xi_by_type(enc, policy)
    bound = 0.0
    for t, v in zip(types, xi):
        if v > 0:
            d = divergence(np.array(t.counts, float) / t.n, p_x.probs)
            bound += v * math.exp(-enc.n * d) if math.isfinite(d) else 0.0
    if check:
        exact = error_prob_exact(enc, p_x, policy)
        if exact > bound + 1e-12:
            raise AssertionError(f"exact error probability {exact} exceeds type bound {bound}")
    return bound


# --- ensemble average over random affine encoders ---------------------------

def type_error_bound(t: TypeClass, R: float) -> float:
    """``e (n+1)^|X| exp(-n [R - H(t)]^+)``."""
    n, q = t.n, t.alphabet_size
    return math.e * (n + 1) ** q * math.exp(-n * max(R - t.entropy(), 0.0))


@dataclass
class EnsembleErrorReport:
    n: int
    m: int
    p: int
    R: float
    mode: str
    encoders: int
    types: List[TypeClass]
    mean_xi: np.ndarray
    bound: np.ndarray
    ci_low: Optional[np.ndarray] = None
    ci_high: Optional[np.ndarray] = None
    mean_error_prob: Optional[float] = None

    @property
    def violations(self) -> List[TypeClass]:
        """Types whose ensemble average (CI lower end in sampled mode) beats the bound."""
        lhs = self.mean_xi if self.ci_low is None else self.ci_low
        return [t for t, v, b in zip(self.types, lhs, self.bound) if v > b + 1e-12]

    @property
    def ok(self) -> bool:
        return not self.violations


def ensemble_error_bound(n: int, m: int, spec: FieldSpec, p_x: Optional[Distribution] = None,
                         R: Optional[float] = None, policy=DecoderPolicy.DECLARE_ERROR,
                         samples: Optional[int] = None, seed: Optional[int] = None,
                         level: float = 0.999, cap: Optional[int] = None) -> EnsembleErrorReport:
    """Average of the per-type error rate over the random linear ensemble.

    The offset ``b`` does not affect decoding, so averaging over all
    ``(A, b)`` equals averaging over ``A``; exact mode enumerates every
    matrix. With ``samples`` given, ``A`` is drawn uniformly instead and a
    normal-approximation interval at ``level`` accompanies each mean.
    ``R`` defaults to the realized rate ``(m/n) ln p``.
    """
    p = spec.p
    if m < 1 or m > n:
        raise UsageError("need 1 <= m <= n")
    R = m * math.log(p) / n if R is None else float(R)
    if R < m * math.log(p) / n - 1e-12:
        raise UsageError("R must be at least the realized rate (m/n) ln p")
    space = _SequenceSpace.get(p, n)
    sums = np.zeros(len(space.types))
    sq = np.zeros(len(space.types))
    pe_sum = 0.0
    px_n = p_x.power(n) if p_x is not None else None

    if samples is None:
        mats = all_matrices(n, m, p, cap)
        count = mats.shape[0]
        source = iter(mats)
    else:
        if seed is None:
            raise UsageError("sampled ensemble needs a seed")
        rng = make_rng(seed)
        count = int(samples)
        source = (rng.integers(0, p, size=(n, m)) for _ in range(count))

    for A in source:
        err = _error_vector(A, p, space, policy)
        xi = np.bincount(space.type_label, weights=err, minlength=len(space.types)) / space.type_sizes
        sums += xi
        sq += xi * xi
        if px_n is not None:
            pe_sum += float(np.dot(px_n, err))

    mean = sums / count
    bound = np.array([type_error_bound(t, R) for t in space.types])
    report = EnsembleErrorReport(n, m, p, R, "exact" if samples is None else "sampled", count,
                                 space.types, mean, bound,
                                 mean_error_prob=pe_sum / count if px_n is not None else None)
    if samples is not None:
        var = np.maximum(sq / count - mean**2, 0.0) * count / max(count - 1, 1)
        half = stats.norm.ppf(0.5 + level / 2) * np.sqrt(var / count)
        report.ci_low, report.ci_high = mean - half, mean + half
    return report
