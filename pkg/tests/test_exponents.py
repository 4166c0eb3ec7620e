import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from privamp import exponents as ex
from privamp.errors import ModelError, UsageError
from privamp.finite_field import make_rng
from privamp.prob_types import Channel, Distribution, binary_entropy, divergence, entropy

from conftest import rand_probs

LN2 = math.log(2)
PK = Distribution.uniform(2)
BSC1 = ex.SideModel.build(PK, Channel.bsc(0.1))
FAST = {"grid": 9, "n_starts": 8}


def aux_true(model):
    """U = Z: the auxiliary table of the model itself."""
    return ex.AuxJoint.from_p(model.p_z, np.eye(model.nz), model.k_given_z)


def aux_indep(model, q_u):
    return ex.AuxJoint.from_q(q_u, np.tile(model.p_z, (len(q_u), 1)), model.k_given_z)


# --- error exponent ----------------------------------------------------------

def test_error_exponent_examples():
    p = Distribution([0.8, 0.2])
    h = entropy(p)
    assert ex.error_exponent_E(0.5 * h, p) == 0.0
    assert ex.error_exponent_E(h, p) == pytest.approx(0.0, abs=1e-12)
    assert ex.error_exponent_E(1.0, PK) == pytest.approx(1.0 - LN2, abs=1e-9)


@settings(max_examples=15)
@given(st.floats(0.0, 2.0), st.floats(0.01, 0.99))
def test_error_exponent_routes_agree(R, p1):
    a = ex.error_exponent_E(R, [1 - p1, p1])
    b = ex.error_exponent_binary(R, p1)
    assert a == pytest.approx(b, abs=1e-7)
    # any candidate upper-bounds the minimum
    for t in (0.1, 0.5, p1):
        cand = max(R - binary_entropy(t), 0.0) + divergence([1 - t, t], [1 - p1, p1])
        assert a <= cand + 1e-12


def test_error_exponent_ternary_is_min():
    p = np.array([0.6, 0.3, 0.1])
    e = ex.error_exponent_E(1.5, p)
    rng = make_rng(1)
    for _ in range(500):
        t = rand_probs(rng, 3)
        assert e <= max(1.5 - entropy(t), 0) + divergence(t, p) + 1e-9


# --- the (mu, alpha) family --------------------------------------------------

def test_omega_weight_examples():
    q = aux_true(BSC1)
    assert np.nanmax(np.abs(ex.omega_weight(0.3, 0.0, q, BSC1.p_z))) == pytest.approx(0, abs=1e-12)
    w = ex.omega_weight(1.0, 1.0, q, BSC1.p_z)
    zu = np.eye(2)
    with np.errstate(divide="ignore"):
        want = np.log(zu / BSC1.p_z[None, :])[:, :, None] * np.ones((1, 1, 2))
    m = q.table > 0
    assert np.allclose(w[m], want[m])
    w = ex.omega_weight(0.0, 1.0, q, BSC1.p_z)
    k_u = q.table.sum(axis=1) / q.table.sum(axis=(1, 2))[:, None]
    assert np.allclose(w[m], (-np.log(k_u)[:, None, :] * np.ones((1, 2, 1)))[m])


def test_omega_capital_examples():
    q = aux_indep(BSC1, [0.3, 0.7])
    assert ex.omega_capital(0.4, 0.0, q, BSC1.p_z) == pytest.approx(0.0, abs=1e-12)
    assert ex.omega_capital(0.0, 1.0, q, BSC1.p_z) == pytest.approx(LN2)


def test_omega_rejects_null_support():
    q = aux_true(BSC1)
    with pytest.raises(ModelError):
        ex.omega_capital(0.5, 0.5, q, [1.0, 0.0])


def test_auxjoint_validation():
    with pytest.raises(ModelError):
        ex.AuxJoint(np.full((2, 2, 2), 0.2))
    bad = np.zeros((1, 2, 2))
    bad[0] = [[0.5, 0.0], [0.0, 0.5]]
    mix = np.stack([bad[0] * 0.5, np.array([[0.0, 0.25], [0.25, 0.0]])])
    with pytest.raises(ModelError):
        ex.AuxJoint(mix)        # K given (U, Z) depends on U
    with pytest.raises(ModelError):
        ex.AuxJoint(np.full((3, 2, 2), 1 / 12), max_u=2)


def test_omega_min_below_random_feasible():
    res = ex.omega_min(0.5, 0.7, BSC1)
    rng = make_rng(6)
    for _ in range(100):
        q_u = rand_probs(rng, 2)
        zu = np.vstack([rand_probs(rng, 2) for _ in range(2)])
        q = ex.AuxJoint.from_q(q_u, zu, BSC1.k_given_z)
        assert res.value <= ex.omega_capital(0.5, 0.7, q, BSC1.p_z) + 1e-10


def test_F_examples():
    f0 = ex.F_exponent(0.0, 0.0, BSC1)
    assert f0.value > 0
    # the witness reproduces the value
    assert ex.f_objective(f0, 0.0, 0.0, BSC1) == pytest.approx(f0.value, abs=1e-8)
    assert ex.F_exponent(LN2, LN2, BSC1).value == pytest.approx(0.0, abs=1e-3)
    fine = ex.F_exponent(0.0, 0.0, BSC1, grid=65)
    assert abs(fine.value - f0.value) < 1e-3


@settings(max_examples=10)
@given(st.floats(0, 0.7), st.floats(0, 0.7), st.floats(0.0, 0.2), st.floats(0.0, 0.2))
def test_F_nonnegative_and_monotone(ra, r, d1, d2):
    a = ex.F_exponent(ra, r, BSC1, **FAST)
    b = ex.F_exponent(ra + d1, r + d2, BSC1, **FAST)
    assert a.value >= 0 and b.value >= 0
    assert b.value <= a.value + 1e-6
    if a.minimizer is not None:
        assert ex.f_objective(a, ra, r, BSC1) == pytest.approx(a.value, abs=1e-8)


def test_F_reproducible():
    ex.clear_cache()
    a = ex.F_exponent(0.1, 0.2, BSC1, **FAST).to_dict()
    ex.clear_cache()
    b = ex.F_exponent(0.1, 0.2, BSC1, **FAST).to_dict()
    assert a == b


# --- the tilde family --------------------------------------------------------

def test_tilde_family_examples():
    p = aux_true(BSC1)
    fam = ex.tilde_family(0.6, 0.0, p, PK, Channel.bsc(0.1))
    assert fam.value == pytest.approx(0.0, abs=1e-15)
    assert np.allclose(fam.tilted, p.table)
    for q in (2, 3):
        model = ex.SideModel.build(Distribution.uniform(q), Channel.noiseless(q))
        pu = aux_indep(model, np.full(model.nz, 1 / model.nz))
        for lam in (0.2, 0.5, 1.0):
            assert ex.tilde_capital(0.0, lam, pu) == pytest.approx(lam * math.log(q))
    fam = ex.tilde_family(0.3, 0.4, p)
    assert fam.tilted.sum() == pytest.approx(1.0, abs=1e-12)


def test_tilde_family_rejects_wrong_model():
    p = aux_true(ex.SideModel.build(PK, Channel.bsc(0.3)))
    with pytest.raises(ModelError):
        ex.tilde_family(0.5, 0.2, p, PK, Channel.bsc(0.1))


@given(st.integers(0, 10**6), st.floats(0, 1), st.floats(0, 1))
def test_tilde_bounds(seed, mu, lam):
    rng = make_rng(seed)
    nk, nz = int(rng.integers(2, 4)), int(rng.integers(2, 4))
    model = ex.SideModel.build(rand_probs(rng, nk), np.vstack([rand_probs(rng, nz) for _ in range(nk)]))
    uz = np.vstack([rand_probs(rng, model.nz) for _ in range(model.nz)])
    p = ex.AuxJoint.from_p(model.p_z, uz, model.k_given_z)
    v = ex.tilde_capital(mu, lam, p)
    assert -1e-12 <= v <= mu * math.log(model.nz) + (1 - mu) * math.log(nk) + 1e-12


@given(st.integers(0, 10**6), st.floats(0, 1), st.floats(0.05, 0.45))
def test_tilde_derivatives(seed, mu, lam):
    rng = make_rng(seed)
    uz = np.vstack([rand_probs(rng, 2) for _ in range(2)])
    p = ex.AuxJoint.from_p(BSC1.p_z, uz, BSC1.k_given_z)
    fam = ex.tilde_family(mu, lam, p)
    f = lambda l: ex.tilde_capital(mu, l, p)
    d1 = (f(lam + 1e-4) - f(lam - 1e-4)) / 2e-4
    d2 = (f(lam + 1e-3) - 2 * f(lam) + f(lam - 1e-3)) / 1e-6
    assert d1 == pytest.approx(fam.mean(), abs=1e-6)
    assert d2 == pytest.approx(-fam.variance(), abs=1e-4)


def test_F_tilde_examples():
    assert ex.F_tilde(0.0, 0.0, BSC1, **FAST).value >= 0
    deep = ex.F_tilde(LN2, LN2, BSC1, **FAST)
    assert deep.value == pytest.approx(0.0, abs=1e-3)
    with pytest.raises(UsageError):
        ex.F_tilde(0.1, 0.1, BSC1, variant="other", **FAST)


@settings(max_examples=8)
@given(st.floats(0, 0.7), st.floats(0, 0.7))
def test_F_dominates_F_tilde(ra, r):
    big = ex.F_exponent(ra, r, BSC1, **FAST).value
    small = ex.F_tilde(ra, r, BSC1, check=False, **FAST).value
    assert 0 <= small <= big + 1e-3


# --- curvature and finite-length terms ---------------------------------------

def test_g_inverse_examples():
    assert ex.g_inverse(0.0) == 0.0
    assert ex.g_inverse(2.25) == pytest.approx(1.0)
    with pytest.raises(UsageError):
        ex.g_inverse(-1.0)


@given(st.floats(0, 10))
def test_g_inverse_roundtrip(a):
    assert ex.g_inverse(ex.vartheta(a)) == pytest.approx(a, abs=1e-10)


def test_point_mass_variance_zero():
    model = ex.SideModel.build(PK, Channel.noiseless(2))
    fam = ex.tilde_family(0.5, 0.3, aux_true(model))
    assert fam.variance() == pytest.approx(0.0, abs=1e-15)


def test_R_mu_endpoints():
    # mu = 0: U = Z minimizes H(K|U); mu = 1: U constant minimizes I(Z;U)
    assert ex.R_mu(0.0, BSC1).value == pytest.approx(binary_entropy(0.1), abs=1e-6)
    assert ex.R_mu(1.0, BSC1).value == pytest.approx(0.0, abs=1e-9)


def test_delta_terms_examples():
    d1, d2 = ex.delta_terms(10, 2, LN2)
    assert d1 == pytest.approx(math.log(math.e * 11**4 * 122) / 10, rel=1e-12)
    assert d1 == pytest.approx(1.5396, abs=1e-4)
    assert d2 == pytest.approx(math.log(5 * 10 * LN2 * 122) / 10, rel=1e-12)
    assert d2 == pytest.approx(0.83495, abs=1e-5)
    ns = np.unique(np.logspace(1, 5, 200).astype(int))
    d = [ex.delta_terms(int(n), 2, LN2)[0] for n in ns]
    assert np.all(np.diff(d) < 0)
    with pytest.raises(UsageError):
        ex.delta_terms(0, 2, LN2)


def test_finite_length_curves():
    err, leak = ex.finite_length_curves([10, 100], 2, LN2, 0.3, 0.1)
    d1, d2 = ex.delta_terms(100, 2, LN2)
    assert err[1] == pytest.approx(math.exp(-100 * (0.3 - d1)))
    assert leak[1] == pytest.approx(math.exp(-100 * (0.1 - d2)))
