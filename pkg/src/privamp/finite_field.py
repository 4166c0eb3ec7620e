"""Prime-field vectors and matrices carrying the affine encoders.

Sequences of ``X^n`` are addressed by their integer index in base ``p``
with the first coordinate most significant, so index order coincides with
lexicographic order of the digit strings.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, Optional, Tuple

import numpy as np

from .errors import EnumerationCapError, UsageError

DEFAULT_CAP = 2**24

_cap = DEFAULT_CAP


def get_enumeration_cap() -> int:
    return _cap


def set_enumeration_cap(cap: int) -> int:
    """Set the global enumeration cap and return the previous value."""
    global _cap
    if cap < 1:
        raise UsageError("enumeration cap must be positive")
    old, _cap = _cap, int(cap)
    return old


def check_cap(what: str, size: int, cap: Optional[int] = None) -> None:
    limit = _cap if cap is None else cap
    if size > limit:
        raise EnumerationCapError(what, size, limit)


def _is_prime(p: int) -> bool:
    if p < 2:
        return False
    if p % 2 == 0:
        return p == 2
    f = 3
    while f * f <= p:
        if p % f == 0:
            return False
        f += 2
    return True


@dataclass(frozen=True)
class FieldSpec:
    modulus: int

    def __post_init__(self):
        if not isinstance(self.modulus, (int, np.integer)) or not _is_prime(int(self.modulus)):
            raise UsageError(f"field modulus must be a prime, got {self.modulus!r}")
        object.__setattr__(self, "modulus", int(self.modulus))

    @property
    def p(self) -> int:
        return self.modulus

    def inv(self, a: int) -> int:
        a %= self.modulus
        if a == 0:
            raise ZeroDivisionError("0 has no inverse")
        return pow(a, self.modulus - 2, self.modulus)


def _frozen(arr, spec: FieldSpec, ndim: int) -> np.ndarray:
    a = np.array(arr, dtype=np.int64)
    if a.ndim != ndim:
        raise UsageError(f"expected a {ndim}-d array, got shape {a.shape}")
    if a.size and (a.min() < 0 or a.max() >= spec.modulus):
        raise UsageError(f"entries must lie in [0, {spec.modulus})")
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class FieldVector:
    spec: FieldSpec
    entries: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "entries", _frozen(self.entries, self.spec, 1))

    def __len__(self):
        return self.entries.shape[0]

    def __eq__(self, other):
        return (isinstance(other, FieldVector) and self.spec == other.spec
                and np.array_equal(self.entries, other.entries))

    def __hash__(self):
        return hash((self.spec, self.entries.tobytes()))

    def __repr__(self):
        return f"FieldVector(GF({self.spec.p}), {self.entries.tolist()})"

    def __add__(self, other):
        return field_add(self, other)

    def __sub__(self, other):
        return field_sub(self, other)

    def __neg__(self):
        return FieldVector(self.spec, (-self.entries) % self.spec.p)

    def index(self) -> int:
        """Position of this vector in lexicographic order of ``X^n``."""
        return int(seq_to_index(self.entries, self.spec.p))

    @classmethod
    def zeros(cls, spec: FieldSpec, n: int) -> "FieldVector":
        return cls(spec, np.zeros(n, dtype=np.int64))

    @classmethod
    def from_index(cls, spec: FieldSpec, n: int, idx: int) -> "FieldVector":
        return cls(spec, index_to_seq(idx, spec.p, n))


@dataclass(frozen=True, eq=False)
class FieldMatrix:
    spec: FieldSpec
    entries: np.ndarray

    def __post_init__(self):
        a = _frozen(self.entries, self.spec, 2)
        if a.shape[0] < 1 or a.shape[1] < 1:
            raise UsageError("matrix dimensions must be positive")
        object.__setattr__(self, "entries", a)

    @property
    def rows(self) -> int:
        return self.entries.shape[0]

    @property
    def cols(self) -> int:
        return self.entries.shape[1]

    def __eq__(self, other):
        return (isinstance(other, FieldMatrix) and self.spec == other.spec
                and np.array_equal(self.entries, other.entries))

    def __hash__(self):
        return hash((self.spec, self.entries.shape, self.entries.tobytes()))

    def __repr__(self):
        return f"FieldMatrix(GF({self.spec.p}), {self.entries.tolist()})"

    @classmethod
    def identity(cls, spec: FieldSpec, n: int) -> "FieldMatrix":
        return cls(spec, np.eye(n, dtype=np.int64))

    @classmethod
    def ones(cls, spec: FieldSpec, n: int, m: int) -> "FieldMatrix":
        return cls(spec, np.ones((n, m), dtype=np.int64))


def _same_spec(a, b):
    if a.spec != b.spec:
        raise UsageError(f"field mismatch: GF({a.spec.p}) vs GF({b.spec.p})")


def field_add(a: FieldVector, b: FieldVector) -> FieldVector:
    _same_spec(a, b)
    if len(a) != len(b):
        raise UsageError(f"length mismatch: {len(a)} vs {len(b)}")
    return FieldVector(a.spec, (a.entries + b.entries) % a.spec.p)


def field_sub(a: FieldVector, b: FieldVector) -> FieldVector:
    _same_spec(a, b)
    if len(a) != len(b):
        raise UsageError(f"length mismatch: {len(a)} vs {len(b)}")
    return FieldVector(a.spec, (a.entries - b.entries) % a.spec.p)


def mat_apply(x: FieldVector, A: FieldMatrix) -> FieldVector:
    """Row-vector times matrix, ``xA`` over GF(p)."""
    _same_spec(x, A)
    if len(x) != A.rows:
        raise UsageError(f"vector length {len(x)} does not match {A.rows} matrix rows")
    return FieldVector(x.spec, (x.entries @ A.entries) % x.spec.p)


# --- sequence indexing -----------------------------------------------------

def seq_to_index(seqs, p: int) -> np.ndarray:
    """Integer index of each row of ``seqs`` (last axis holds the digits)."""
    seqs = np.asarray(seqs, dtype=np.int64)
    n = seqs.shape[-1]
    weights = p ** np.arange(n - 1, -1, -1, dtype=np.int64)
    return seqs @ weights


def index_to_seq(idx, p: int, n: int) -> np.ndarray:
    idx = np.asarray(idx, dtype=np.int64)
    powers = p ** np.arange(n - 1, -1, -1, dtype=np.int64)
    return (idx[..., None] // powers) % p


def all_sequences(p: int, n: int, cap: Optional[int] = None) -> np.ndarray:
    """All of ``X^n`` as a ``(p**n, n)`` array in index order."""
    check_cap(f"X^{n} over GF({p})", p**n, cap)
    return index_to_seq(np.arange(p**n, dtype=np.int64), p, n)


# --- random and exhaustive encoder ensembles --------------------------------

def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Counter-based Philox generator for the ``(seed, stream)`` pair.

    Distinct streams of one seed are statistically independent, so workers
    can each take their own stream without sharing state.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(stream),))
    return np.random.Generator(np.random.Philox(ss))


def random_affine(n: int, m: int, spec: FieldSpec,
                  rng: np.random.Generator) -> Tuple[FieldMatrix, FieldVector]:
    if n < 1 or m < 1:
        raise UsageError("n and m must be at least 1")
    draws = rng.integers(0, spec.p, size=n * m + m)
    A = FieldMatrix(spec, draws[: n * m].reshape(n, m))
    b = FieldVector(spec, draws[n * m:])
    return A, b


def exhaust_affine(n: int, m: int, spec: FieldSpec,
                   cap: Optional[int] = None) -> Iterator[Tuple[FieldMatrix, FieldVector]]:
    """Yield every ``(A, b)`` with ``A`` of shape ``n x m`` exactly once."""
    if n < 1 or m < 1:
        raise UsageError("n and m must be at least 1")
    p = spec.p
    check_cap(f"affine ensemble n={n}, m={m}, GF({p})", p ** (n * m + m), cap)
    for digits in itertools.product(range(p), repeat=n * m + m):
        d = np.array(digits, dtype=np.int64)
        yield FieldMatrix(spec, d[: n * m].reshape(n, m)), FieldVector(spec, d[n * m:])


def all_matrices(n: int, m: int, p: int, cap: Optional[int] = None) -> np.ndarray:
    """Every ``n x m`` matrix over GF(p) stacked as ``(p**(n*m), n, m)``."""
    check_cap(f"matrices {n}x{m} over GF({p})", p ** (n * m), cap)
    flat = index_to_seq(np.arange(p ** (n * m), dtype=np.int64), p, n * m)
    return flat.reshape(-1, n, m)


def coset_preimages(A: FieldMatrix, target: FieldVector,
                    cap: Optional[int] = None) -> list:
    """All ``x`` with ``xA = target``, in lexicographic order."""
    _same_spec(A, target)
    if len(target) != A.cols:
        raise UsageError(f"target length {len(target)} does not match {A.cols} columns")
    p = A.spec.p
    xs = all_sequences(p, A.rows, cap)
    images = (xs @ A.entries) % p
    hit = np.all(images == target.entries, axis=1)
    return [FieldVector(A.spec, row) for row in xs[hit]]


def syndromes(A: np.ndarray, p: int, cap: Optional[int] = None) -> np.ndarray:
    """Index of ``xA`` for every ``x`` in ``X^n`` (vectorized coset labels)."""
    n = A.shape[0]
    xs = all_sequences(p, n, cap)
    return seq_to_index((xs @ A) % p, p)


# --- collision counts over the full ensemble --------------------------------

@dataclass
class CollisionCounts:
    """Exact ensemble tallies for one ``(p, n, m)``.

    ``kernel[d]`` counts matrices with ``dA = 0`` for each difference index
    ``d``; ``affine_hits[s, t]`` counts pairs ``(A, b)`` with ``sA + b = t``.
    """

    p: int
    n: int
    m: int
    kernel: np.ndarray
    affine_hits: Optional[np.ndarray]
    method: str
    ensemble_size: int = field(init=False)

    def __post_init__(self):
        self.ensemble_size = self.p ** (self.n * self.m + self.m)


def collision_counts_bruteforce(n: int, m: int, p: int,
                                cap: Optional[int] = None) -> CollisionCounts:
    """Tally by visiting every matrix and every difference vector.

    Work is ``p**(n*m) * p**n``; the affine table adds ``p**(n+m)`` per matrix.
    """
    mats = all_matrices(n, m, p, cap)
    xs = all_sequences(p, n, cap)
    check_cap("brute-force collision tally", mats.shape[0] * xs.shape[0], cap)
    kernel = np.zeros(p**n, dtype=np.int64)
    hits = np.zeros((p**n, p**m), dtype=np.int64)
    rows = np.arange(p**n)[:, None]
    bs = all_sequences(p, m, cap)
    for A in mats:
        img = (xs @ A) % p
        kernel += seq_to_index(img, p) == 0
        shifted = seq_to_index((img[:, None, :] + bs[None, :, :]) % p, p)
        np.add.at(hits, (np.broadcast_to(rows, shifted.shape), shifted), 1)
    return CollisionCounts(p, n, m, kernel, hits, "bruteforce")


def collision_counts_columnwise(n: int, m: int, p: int) -> CollisionCounts:
    """Exact kernel tallies using the product structure of the ensemble.

    The matrix ensemble is the Cartesian product of ``m`` copies of the
    column set ``X^n``, so ``#{A : dA = 0}`` is the ``m``-th power of
    ``#{a : d.a = 0}``. That column count is built for every ``d`` at once by
    a digit-by-digit dynamic program that visits each ``(d, a)`` combination
    exactly once in aggregate.
    """
    # table[d, s] = #{a in X^k : d . a = s} for the first k digits of d
    table = np.zeros((1, p), dtype=object)
    table[0, 0] = 1
    for _ in range(n):
        new = np.zeros((table.shape[0] * p, p), dtype=object)
        for d_digit in range(p):
            block = np.zeros_like(table)
            for a_digit in range(p):
                block += np.roll(table, (d_digit * a_digit) % p, axis=1)
            # new row index = old * p + d_digit, i.e. lexicographic order
            new[d_digit::p] = block
        table = new
    kernel = np.array([int(c) ** m for c in table[:, 0]], dtype=object)
    return CollisionCounts(p, n, m, kernel, None, "columnwise")
