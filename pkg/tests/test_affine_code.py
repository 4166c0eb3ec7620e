import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from privamp.affine_code import (AffineEncoder, DecoderPolicy, decode_min_entropy,
                                 encode_affine, encode_linear, ensemble_error_bound,
                                 error_indicator, error_prob_exact, error_prob_type_bound,
                                 error_vector, rate_to_m, xi_by_type, xi_type)
from privamp.errors import UsageError
from privamp.finite_field import (FieldMatrix, FieldSpec, FieldVector, all_sequences,
                                  exhaust_affine, field_add, make_rng, random_affine)
from privamp.prob_types import Distribution, TypeClass, entropy

from conftest import rand_probs

GF2 = FieldSpec(2)
PARITY3 = AffineEncoder.linear(FieldMatrix.ones(GF2, 3, 1))


def v2(*e):
    return FieldVector(GF2, np.array(e))


def brute_decode(enc, xt, policy):
    """Oracle: scan the coset directly and compare type entropies as floats."""
    p, n = enc.spec.p, enc.n
    members = [x for x in all_sequences(p, n) if np.array_equal((x @ enc.A.entries) % p, xt)]
    ents = [entropy(np.bincount(x, minlength=p) / n) for x in members]
    best = min(ents)
    winners = [x for x, h in zip(members, ents) if abs(h - best) < 1e-12]
    if len(winners) == 1 or policy == DecoderPolicy.LEXICOGRAPHIC:
        return tuple(winners[0])
    return None


def test_encode_examples():
    enc = AffineEncoder(FieldMatrix.ones(GF2, 3, 1), v2(1))
    assert encode_affine(enc, v2(1, 0, 0)) == v2(0)
    assert encode_linear(enc, v2(0, 0, 0)) == v2(0)


def test_affine_identity_all_pairs():
    enc = AffineEncoder(FieldMatrix.ones(GF2, 3, 1), v2(1))
    for x in all_sequences(2, 3):
        for k in all_sequences(2, 3):
            xv, kv = v2(*x), v2(*k)
            assert encode_affine(enc, field_add(xv, kv)) == field_add(encode_linear(enc, xv),
                                                                      encode_affine(enc, kv))


def test_m_greater_than_n_rejected():
    with pytest.raises(UsageError):
        AffineEncoder.linear(FieldMatrix.ones(GF2, 2, 3))


def test_decoder_examples():
    assert decode_min_entropy(PARITY3, v2(0)) == v2(0, 0, 0)
    ident = AffineEncoder.linear(FieldMatrix.identity(GF2, 3))
    for x in all_sequences(2, 3):
        assert decode_min_entropy(ident, v2(*x)) == v2(*x)
    tie = AffineEncoder.linear(FieldMatrix.ones(GF2, 2, 1))
    assert decode_min_entropy(tie, v2(1)) is None
    assert decode_min_entropy(tie, v2(1), DecoderPolicy.LEXICOGRAPHIC) == v2(0, 1)


@given(st.sampled_from([2, 3]), st.integers(1, 5), st.integers(0, 10**6),
       st.sampled_from(list(DecoderPolicy)))
def test_decoder_matches_coset_scan(p, n, seed, policy):
    spec = FieldSpec(p)
    rng = make_rng(seed)
    m = int(rng.integers(1, n + 1))
    A, _ = random_affine(n, m, spec, rng)
    enc = AffineEncoder.linear(A)
    for idx in range(p**m):
        xt = FieldVector.from_index(spec, m, idx)
        members = [x for x in all_sequences(p, n) if np.array_equal((x @ A.entries) % p, xt.entries)]
        if not members:
            continue
        got = decode_min_entropy(enc, xt, policy)
        want = brute_decode(enc, xt.entries, policy)
        assert (None if got is None else tuple(got.entries)) == want


def test_xi_examples():
    ident = AffineEncoder.linear(FieldMatrix.identity(GF2, 3))
    assert all(v == 0 for v in xi_by_type(ident)[1])
    assert error_indicator(PARITY3, v2(0, 1, 1)) == 1
    assert xi_type(PARITY3, TypeClass((3, 0))) == 0.0


def test_error_prob_examples():
    ident = AffineEncoder.linear(FieldMatrix.identity(GF2, 3))
    assert error_prob_exact(ident, Distribution([0.7, 0.3])) == 0.0
    # only 000 and 111 decode correctly (each is the strict minimizer of its coset)
    assert error_prob_exact(PARITY3, Distribution.uniform(2)) == pytest.approx(6 / 8)
    assert error_prob_exact(PARITY3, Distribution([0.9, 0.1])) == pytest.approx(1 - 0.9**3 - 0.1**3)


def test_type_bound_examples():
    ident = AffineEncoder.linear(FieldMatrix.identity(GF2, 3))
    assert error_prob_type_bound(ident, Distribution.uniform(2)) == 0.0
    types, xi = xi_by_type(PARITY3)
    want = sum(x * math.exp(-3 * _d(t)) for t, x in zip(types, xi))
    assert error_prob_type_bound(PARITY3, Distribution.uniform(2)) == pytest.approx(want)


def _d(t):
    c = np.array(t.counts) / t.n
    return float(np.sum(c[c > 0] * np.log(c[c > 0] / 0.5)))


def test_type_bound_dominates_exact_random_encoders():
    rng = make_rng(99)
    for _ in range(50):
        n = int(rng.integers(1, 7))
        m = int(rng.integers(1, n + 1))
        A, b = random_affine(n, m, GF2, rng)
        p_x = Distribution(rand_probs(rng, 2))
        enc = AffineEncoder(A, b)
        for pol in DecoderPolicy:
            assert error_prob_exact(enc, p_x, pol) <= error_prob_type_bound(enc, p_x, pol) + 1e-12


def test_offset_does_not_change_errors():
    A = FieldMatrix.ones(GF2, 3, 1)
    assert np.array_equal(error_vector(AffineEncoder(A, v2(0))), error_vector(AffineEncoder(A, v2(1))))


def test_ensemble_examples():
    rep = ensemble_error_bound(2, 1, GF2)
    assert rep.ok and rep.encoders == 4
    k = rep.types.index(TypeClass((1, 1)))
    # direct average over all (A, b) pairs
    total = 0.0
    for A, b in exhaust_affine(2, 1, GF2):
        total += xi_type(AffineEncoder(A, b), TypeClass((1, 1)))
    assert rep.mean_xi[k] == pytest.approx(total / 8)
    R = math.log(2) / 2
    assert rep.bound[k] == pytest.approx(math.e * 9 * math.exp(-2 * max(R - math.log(2), 0)))
    rep = ensemble_error_bound(3, 2, GF2)
    assert rep.ok and len(rep.types) == 4 and rep.encoders == 64


def test_ensemble_sampled_needs_seed():
    with pytest.raises(UsageError):
        ensemble_error_bound(4, 2, GF2, samples=10)
    a = ensemble_error_bound(4, 2, GF2, samples=200, seed=3)
    b = ensemble_error_bound(4, 2, GF2, samples=200, seed=3)
    assert np.array_equal(a.mean_xi, b.mean_xi) and a.ok


@given(st.integers(1, 40), st.floats(0.01, 3.0), st.sampled_from([2, 3, 5]))
def test_rate_to_m_bookkeeping(n, R, p):
    lnp = math.log(p)
    if n * R < lnp:
        with pytest.raises(UsageError):
            rate_to_m(n, R, p)
        return
    m = rate_to_m(n, R, p)
    assert m == math.floor(n * R / lnp + 1e-12)
    assert (m / n) * lnp <= R + 1e-12
    assert R - lnp / n <= (m / n) * lnp + 1e-12
    if p == 2:
        assert R - 1 / n <= (m / n) * lnp + 1e-12


def test_text_roundtrip():
    A, b = random_affine(4, 2, FieldSpec(3), make_rng(2))
    enc = AffineEncoder(A, b)
    assert AffineEncoder.from_text(enc.to_text()).to_text() == enc.to_text()
    assert enc.to_text().splitlines()[0] == "modulus=3"
