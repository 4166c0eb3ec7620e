import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from privamp.errors import ModelError
from privamp.exponents import SideModel
from privamp.finite_field import make_rng
from privamp.prob_types import Channel, Distribution, binary_entropy, entropy
from privamp.rate_region import (Membership, _region_batch, bsc_frontier, d_region_points,
                                 inner_bound_region, membership, sum_rate_check,
                                 region_boundary, region_point)

from conftest import rand_probs

LN2 = math.log(2)
PK = Distribution.uniform(2)
H01 = binary_entropy(0.1)


def test_region_point_examples():
    W = Channel.bsc(0.1)
    i, h = region_point(np.eye(2), PK, W)
    assert (i, h) == (pytest.approx(LN2), pytest.approx(H01))
    i, h = region_point(np.ones((2, 1)), PK, W)
    assert (i, h) == (pytest.approx(0.0, abs=1e-15), pytest.approx(LN2))
    assert H01 == pytest.approx(0.325083, abs=1e-6)


def test_region_point_rejects_bad_witness():
    W = Channel.bsc(0.1)
    with pytest.raises(ModelError):
        region_point(np.full((2, 4), 0.25), PK, W)      # |U| = 4 > |Z| + 1
    bad = np.zeros((2, 2, 2))
    bad[0] = [[0.45, 0.05], [0.0, 0.0]]
    bad[1] = [[0.0, 0.0], [0.05, 0.45]]
    bad[0, 0] = [0.25, 0.25]                             # K|Z changed: not the model's law
    with pytest.raises(ModelError):
        region_point(bad / bad.sum(), PK, W)


@given(st.integers(0, 10**6))
def test_region_point_matches_direct_entropies(seed):
    rng = make_rng(seed)
    W = Channel(np.vstack([rand_probs(rng, 3) for _ in range(2)]))
    model = SideModel.build(PK, W)
    uz = np.vstack([rand_probs(rng, 4) for _ in range(model.nz)])
    t = (model.p_z[:, None] * uz)[:, :, None] * model.k_given_z[:, None, :]   # [z, u, k]
    puz, puk = t.sum(2), t.sum(0)
    i_direct = entropy(puz.sum(1)) + entropy(puz.sum(0)) - entropy(puz)
    h_direct = entropy(puk) - entropy(puk.sum(1))
    i, h = region_point(uz, PK, W)
    assert i == pytest.approx(i_direct, abs=1e-12) and h == pytest.approx(h_direct, abs=1e-12)
    # every point satisfies R_A + R >= H(K)
    assert i + h >= LN2 - 1e-12


def test_bsc_frontier_against_oracle(bsc_region):
    ra = bsc_region.points[:, 0]
    assert np.max(np.abs(bsc_region.points[:, 1] - bsc_frontier(ra, 0.1))) < 2e-4
    grid = np.linspace(0, LN2, 30)
    assert np.max(np.abs(bsc_region.frontier(grid) - bsc_frontier(grid, 0.1))) < 2e-3


def test_boundary_invariants(bsc_region):
    pts = bsc_region.points
    assert np.all(np.diff(pts[:, 0]) > 0) and np.all(np.diff(pts[:, 1]) < 0)
    assert tuple(pts[0]) == (pytest.approx(0.0, abs=1e-12), pytest.approx(LN2))
    assert tuple(pts[-1]) == (pytest.approx(LN2), pytest.approx(H01))
    model = SideModel.build(PK, Channel.bsc(0.1))
    for (a, r), w in zip(pts, bsc_region.witnesses):
        i, h = _region_batch(model, np.asarray(w)[None])
        assert abs(i[0] - a) < 1e-8 and abs(h[0] - r) < 1e-8
    assert np.all(pts.sum(axis=1) >= LN2 - 1e-9)


def test_noiseless_and_independent_frontiers():
    nb = region_boundary(PK, Channel.noiseless(2), sweep=11)
    assert np.allclose(nb.points.sum(axis=1), LN2, atol=1e-6)
    assert tuple(nb.points[-1]) == (pytest.approx(LN2), pytest.approx(0.0, abs=1e-9))
    ib = region_boundary(PK, Channel([[0.5, 0.5], [0.5, 0.5]]), sweep=11)
    assert np.allclose(ib.points[:, 1], LN2)
    assert ib.classify(0.3, LN2 - 0.1) is Membership.EXTERIOR
    assert ib.classify(0.3, LN2 + 0.1) is Membership.INTERIOR


def test_membership_examples(bsc_region):
    hk, hz, hkz = bsc_region.h_k, bsc_region.h_z, bsc_region.h_k_given_z
    assert membership(0.0, hk, bsc_region).in_region
    assert membership(hz + 1, hkz + 1, bsc_region) is Membership.INTERIOR
    assert membership(0.0, hk - 0.1, bsc_region) is Membership.EXTERIOR
    assert membership(-0.5, 1.0, bsc_region) is Membership.EXTERIOR


def test_sum_rate_and_convexity(bsc_region):
    rep = sum_rate_check(PK, boundary=bsc_region, W=Channel.bsc(0.1))
    assert rep.ok and rep.argmin[0] == pytest.approx(0.0, abs=1e-12)
    r3 = sum_rate_check(PK, Channel.bsc(0.3))
    assert r3.ok and r3.argmin[0] == pytest.approx(0.0, abs=1e-12)


def test_inner_bound_examples(bsc_region):
    p_x = Distribution([0.9, 0.1])
    inner = inner_bound_region(p_x, PK, boundary=bsc_region)
    assert not inner.contains(0.5, entropy(p_x) - 0.01)
    # (0, ln 2) lies on the boundary of the helper region, so it stays in the closure
    assert inner.contains(0.0, LN2) and not inner.interior(0.0, LN2)
    ind = region_boundary(PK, Channel([[0.5, 0.5], [0.5, 0.5]]), sweep=7)
    pm = inner_bound_region(Distribution([1.0, 0.0]), PK, boundary=ind)
    for ra in (0.0, 0.3, 0.6):
        for r in (0.0, 0.2, 0.6):
            assert pm.contains(ra, r)
    rows = inner.indicator([0.2], [0.1, 0.45, 0.7])
    assert rows == [(0.2, 0.1, 0), (0.2, 0.45, 1), (0.2, 0.7, 0)]


def test_d_region_points(bsc_region):
    p_x = Distribution([0.95, 0.05])
    pts = d_region_points(p_x, PK, Channel.bsc(0.1), ra_grid=[0.3, 0.6], r_grid=[0.1, 0.3, 0.45, 0.8],
                          boundary=bsc_region, grid=9, n_starts=8)
    got = {(p.R_A, p.R): p for p in pts}
    assert (0.3, 0.1) not in got                  # R < H(X)
    assert (0.3, 0.8) not in got                  # inside the helper region
    inner = got[(0.3, 0.3)]
    assert inner.interior and inner.E > 0 and inner.F > 0
