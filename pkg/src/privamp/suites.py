"""Verification suites: every finite-length inequality checked by exact computation.

Each ``check_*`` function returns a :class:`CheckResult` with a pass flag,
the worst margin seen (positive means slack) and a short detail list. The
acceptance tests and ``privamp verify`` both call these.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import exponents as ex
from .affine_code import (AffineEncoder, DecoderPolicy, ensemble_error_bound,
                          error_prob_exact, rate_to_m)
from .cipher_sim import (AdversaryEncoder, SystemInstance, build_joint, ensemble_mean_leakage,
                         event_decomposition,
                         leakage_divergence_bound, leakage_exact, mzk_product_of_marginals,
                         mzk_true_joint, theta, theta_tail_bound)
from .finite_field import (FieldMatrix, FieldSpec, all_matrices, all_sequences,
                           collision_counts_bruteforce, collision_counts_columnwise,
                           exhaust_affine, make_rng, random_affine, seq_to_index)
from .prob_types import Channel, Distribution, entropy
from .rate_region import (Membership, bsc_frontier, inner_bound_region, sum_rate_check,
                          region_boundary)

ETAS = (0.05, 0.1, 0.2, 0.5)


@dataclass
class CheckResult:
    name: str
    passed: bool
    margin: float
    details: List[str] = field(default_factory=list)
    data: Dict[str, object] = field(default_factory=dict)
    elapsed: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name}: worst margin {self.margin:.6g} ({self.elapsed:.1f}s)"


class _Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0


# --- collision probabilities of the affine ensemble -------------------------

def collision_cases(primes=(2, 3), budget_log2: int = 20):
    """Every ``(p, n, m)`` with ``m <= n`` and ``p**(n m + m) <= 2**budget_log2``."""
    out = []
    for p in primes:
        n = 1
        while p ** (n + 1) <= 2**budget_log2:
            for m in range(1, n + 1):
                if p ** (n * m + m) <= 2**budget_log2:
                    out.append((p, n, m))
            n += 1
    return out


def check_collision_counts(primes=(2, 3), budget_log2: int = 20, brute_work: int = 2**24) -> CheckResult:
    """Exact integer tallies of collision events over the full ``(A, b)`` ensemble.

    Cases whose brute-force work fits ``brute_work`` are tallied both by brute
    force and by the column-product count, and the two must agree.
    """
    with _Timer() as tm:
        bad, cases, crossed = [], 0, 0
        for p, n, m in collision_cases(primes, budget_log2):
            cases += 1
            col = collision_counts_columnwise(n, m, p)
            total_a = p ** (n * m)
            size = p ** (n * m + m)
            kern = [int(c) for c in col.kernel]
            if kern[0] != total_a:
                bad.append(f"p={p} n={n} m={m}: d=0 count {kern[0]}")
            for d, c in enumerate(kern[1:], start=1):
                # part a: collision probability p^-m
                if Fraction(c, total_a) != Fraction(1, p**m):
                    bad.append(f"p={p} n={n} m={m} d={d}: {c}/{total_a}")
                    break
                # part c: b is fixed by (A, target), so the joint count equals the kernel count
                if Fraction(c, size) != Fraction(1, p ** (2 * m)):
                    bad.append(f"p={p} n={n} m={m} d={d}: joint {c}/{size}")
                    break
            if total_a * p**n <= brute_work:
                bf = collision_counts_bruteforce(n, m, p)
                crossed += 1
                if [int(c) for c in bf.kernel] != kern:
                    bad.append(f"p={p} n={n} m={m}: brute-force and column counts differ")
                # part b: every (s, target) is hit by exactly p^(nm) pairs (A, b)
                if not np.all(bf.affine_hits == total_a):
                    bad.append(f"p={p} n={n} m={m}: affine hits not uniform")
            if size <= 2**12 and p**n <= 27:
                # part c by direct enumeration of (A, b) for every pair s != t
                bad += _joint_event_bruteforce(p, n, m)
    return CheckResult("collision probabilities of the affine ensemble (exact)", not bad,
                       0.0 if not bad else -1.0, bad[:10] + [f"{cases} cases, {crossed} brute-force cross-checked"],
                       {"cases": cases, "cross_checked": crossed}, tm.elapsed)


def _joint_event_bruteforce(p: int, n: int, m: int) -> List[str]:
    """Count pairs ``(A, b)`` with ``sA + b = tA + b = y`` for all ``s != t`` and ``y``."""
    mats = all_matrices(n, m, p)
    xs = all_sequences(p, n)
    bs = all_sequences(p, m)
    img = np.einsum("sn,anm->asm", xs, mats) % p                   # (A, s, m)
    out = seq_to_index((img[:, :, None, :] + bs[None, None]) % p, p)  # (A, s, b)
    want = p ** (n * m + m - 2 * m)
    bad = []
    for s in range(p**n):
        for t in range(s + 1, p**n):
            same = out[:, s, :] == out[:, t, :]
            counts = np.bincount(out[:, s, :][same], minlength=p**m)
            if np.any(counts != want):
                bad.append(f"p={p} n={n} m={m}: joint event (s={s}, t={t}) counts {counts.tolist()}")
                return bad
    return bad


# --- random systems --------------------------------------------------------------

def random_system(rng: np.random.Generator, max_n: int = 4) -> SystemInstance:
    """A random instance over GF(2) or GF(3) with a random side channel and adversary."""
    q = int(rng.choice([2, 3]))
    n = int(rng.integers(1, max_n + 1))
    m = int(rng.integers(1, n + 1))
    nz = int(rng.choice([2, 3]))
    spec = FieldSpec(q)
    p_x = _dirichlet(rng, q)
    W = Channel(np.vstack([_dirichlet(rng, nz).probs for _ in range(q)]))
    A, b = random_affine(n, m, spec, rng)
    kind = int(rng.integers(0, 5))
    if kind == 0:
        adv = AdversaryEncoder.constant(n, nz)
    elif kind == 1:
        adv = AdversaryEncoder.identity(n, nz)
    elif kind == 2:
        adv = AdversaryEncoder.truncation(n, nz, int(rng.integers(0, n + 1)))
    elif kind == 3:
        adv = AdversaryEncoder.type_quantizer(n, nz)
    else:
        adv = AdversaryEncoder.random(n, nz, int(rng.integers(1, nz**n + 1)), rng)
    return SystemInstance(p_x, W, AffineEncoder(A, b), adv)


def _dirichlet(rng, k) -> Distribution:
    v = rng.dirichlet(np.ones(k))
    v = np.maximum(v, 1e-6)
    v /= v.sum()
    v[-1] = 1.0 - v[:-1].sum()
    return Distribution(v)


def random_systems(count: int = 100, seed: int = 2024, max_n: int = 4) -> List[SystemInstance]:
    return [random_system(make_rng(seed, i), max_n) for i in range(count)]


# --- leakage against its divergence bound -------------------------------------

def check_leakage_bound(count: int = 100, seed: int = 2024, max_n: int = 4, tol: float = 1e-10) -> CheckResult:
    """Exact leakage (two routes) never exceeds the conditional-divergence bound."""
    with _Timer() as tm:
        worst, path_gap, bad = math.inf, 0.0, []
        for i, sys in enumerate(random_systems(count, seed, max_n)):
            j = build_joint(sys)
            leak = leakage_exact(j, "joint")
            leak2 = leakage_exact(j, "reduced")
            path_gap = max(path_gap, abs(leak - leak2))
            bound = leakage_divergence_bound(j, check=False)
            worst = min(worst, bound - leak)
            if bound - leak < -tol:
                bad.append(f"instance {i}: leakage {leak} > bound {bound}")
        passed = not bad and path_gap <= 1e-9
    return CheckResult("leakage <= divergence bound", passed, worst,
                       bad + [f"{count} instances, max gap between leakage routes {path_gap:.3g}"],
                       {"instances": count, "path_gap": path_gap}, tm.elapsed)


# --- ensemble-average leakage against Theta -----------------------------------

def check_ensemble_leakage(ns=(2, 3), eps: float = 0.1, tol: float = 1e-10) -> CheckResult:
    """Average exact leakage over every ``(A, b)`` against ``Theta`` at the realized rate."""
    with _Timer() as tm:
        rows, worst = [], math.inf
        spec = FieldSpec(2)
        W = Channel.bsc(eps)
        for n in ns:
            for m in range(1, min(2, n) + 1):
                adv = AdversaryEncoder.identity(n, 2)
                A0 = FieldMatrix.ones(spec, n, m)
                sys = SystemInstance(Distribution.uniform(2), W, AffineEncoder.linear(A0), adv)
                mean = ensemble_mean_leakage(sys, "reduced")
                R = m * math.log(2) / n
                th = theta(sys, R)
                worst = min(worst, th - mean)
                rows.append(f"n={n} m={m}: mean leakage {mean:.6f} <= Theta {th:.6f}")
    return CheckResult("ensemble leakage <= Theta", worst >= -tol, worst, rows, {}, tm.elapsed)


# --- Theta tail bound and typicality events -------------------------------------

def check_tail_events(count: int = 100, seed: int = 2024, max_n: int = 4, etas=ETAS,
                      tol: float = 1e-10) -> CheckResult:
    with _Timer() as tm:
        worst, bad, checks = math.inf, [], 0
        for i, sys in enumerate(random_systems(count, seed, max_n)):
            j = build_joint(sys)
            R = sys.encoder.rate()
            R_A = sys.adversary.rate
            nz = sys.W.output_size ** sys.n
            q_hats = {"true": mzk_true_joint(j), "product": mzk_product_of_marginals(j)}
            p_zn = sys.W.output(sys.p_k).power(sys.n)
            q_zs = {"p_Z": p_zn, "uniform": np.full(nz, 1.0 / nz)}
            for eta in etas:
                tail = theta_tail_bound(j, R, eta)
                checks += 1
                worst = min(worst, tail.margin)
                if not tail.ok:
                    bad.append(f"instance {i} eta={eta}: Theta {tail.theta} > {tail.bound}")
                for qn, qh in q_hats.items():
                    for zn, qz in q_zs.items():
                        rep = event_decomposition(j, R, R_A, eta, qh, qz)
                        checks += 1
                        worst = min(worst, rep.worst_margin())
                        if abs(rep.wp - tail.wp) > 1e-12:
                            bad.append(f"instance {i}: inconsistent tail probability")
                        if not all(v for v in rep.checks(tol).values()):
                            bad.append(f"instance {i} eta={eta} q_hat={qn} q_Z={zn}: {rep.checks(tol)}")
    return CheckResult("Theta tail bound and typicality events", not bad and worst >= -tol, worst,
                       bad[:10] + [f"{checks} inequality groups checked"], {"checks": checks}, tm.elapsed)


# --- error exponent closed form --------------------------------------------------

def check_error_exponent(points: int = 201, tol: float = 1e-6) -> CheckResult:
    with _Timer() as tm:
        worst, worst_bin = 0.0, 0.0
        for R in np.linspace(0.0, 2.0, points):
            exact = max(0.0, R - math.log(2))
            worst = max(worst, abs(ex.error_exponent_E(R, [0.5, 0.5]) - exact))
            worst_bin = max(worst_bin, abs(ex.error_exponent_binary(R, 0.5) - exact))
    return CheckResult("error exponent vs closed form (uniform binary)",
                       worst <= tol and worst_bin <= tol, tol - max(worst, worst_bin),
                       [f"max deviation simplex route {worst:.3g}, one-dimensional route {worst_bin:.3g}"],
                       {}, tm.elapsed)


# --- ensemble error bound per type --------------------------------------------------

def check_ensemble_error(max_n: int = 3, mc_n: int = 6, mc_m: int = 3, samples: int = 10_000,
                 seed: int = 7) -> CheckResult:
    with _Timer() as tm:
        spec = FieldSpec(2)
        rows, worst, bad = [], math.inf, []
        for n in range(1, max_n + 1):
            for m in range(1, n + 1):
                rep = ensemble_error_bound(n, m, spec)
                worst = min(worst, float(np.min(rep.bound - rep.mean_xi)))
                if not rep.ok:
                    bad.append(f"exhaustive n={n} m={m}: {[t.counts for t in rep.violations]}")
        rows.append(f"exhaustive GF(2), n <= {max_n}: worst slack {worst:.4g}")
        rep = ensemble_error_bound(mc_n, mc_m, spec, samples=samples, seed=seed)
        mc_slack = float(np.min(rep.bound - rep.ci_low))
        if not rep.ok:
            bad.append(f"sampled n={mc_n} m={mc_m}: {[t.counts for t in rep.violations]}")
        rows.append(f"sampled n={mc_n} m={mc_m}, {samples} encoders: worst CI-adjusted slack {mc_slack:.4g}")
    return CheckResult("ensemble error bound per type", not bad, min(worst, mc_slack), bad + rows,
                       {}, tm.elapsed)


# --- one-helper region --------------------------------------------------------------

def sum_rate_channels():
    return {"noiseless": Channel.noiseless(2), "BSC(0.1)": Channel.bsc(0.1),
            "BSC(0.3)": Channel.bsc(0.3), "Z independent of K": Channel([[0.5, 0.5], [0.5, 0.5]])}


def check_region_sum_rate(tol: float = 1e-3) -> CheckResult:
    with _Timer() as tm:
        pk = Distribution.uniform(2)
        rows, worst, ok = [], math.inf, True
        for name, W in sum_rate_channels().items():
            rep = sum_rate_check(pk, W, tol=tol)
            gap = abs(rep.min_sum - rep.h_k)
            worst = min(worst, tol - gap)
            ok &= rep.ok
            rows.append(f"{name}: min R_A+R = {rep.min_sum:.6f} (H(K) = {rep.h_k:.6f}) at {rep.argmin}, "
                        f"convex={rep.convex}, raw chord excess {rep.raw_convex_violation:.2g}")
    return CheckResult("region sum-rate minimum and frontier convexity", ok, worst, rows, {}, tm.elapsed)


# --- tilde-family properties ---------------------------------------------------------

def _random_aux(rng) -> ex.AuxJoint:
    nk = int(rng.choice([2, 3]))
    nz = int(rng.choice([2, 3]))
    pk = _dirichlet(rng, nk).probs
    W = np.vstack([_dirichlet(rng, nz).probs for _ in range(nk)])
    model = ex.SideModel.build(pk, W)
    uz = np.vstack([_dirichlet(rng, model.nz).probs for _ in range(model.nz)])
    return ex.AuxJoint.from_p(model.p_z, uz, model.k_given_z)


def check_tilde_bounds(count: int = 1000, seed: int = 3, tol: float = 1e-12) -> CheckResult:
    with _Timer() as tm:
        worst, bad = math.inf, []
        for i in range(count):
            rng = make_rng(seed, i)
            p = _random_aux(rng)
            mu, lam = float(rng.random()), float(rng.random())
            _, nz, nk = p.sizes
            v = ex.tilde_capital(mu, lam, p)
            hi = mu * math.log(nz) + (1 - mu) * math.log(nk)
            worst = min(worst, v, hi - v)
            if v < -tol or v > hi + tol:
                bad.append(f"draw {i}: value {v} outside [0, {hi}]")
    return CheckResult("tilde functional bounds", not bad, worst, bad[:10] + [f"{count} draws"], {}, tm.elapsed)


def _fd_probes(model, seed: int):
    probes = []
    for mu in (0.0, 0.25, 0.5, 0.75, 1.0):
        probes.append((mu, ex.tilde_min(mu, 0.25, model, seed=seed).minimizer))
    rng = make_rng(seed, 99)
    for _ in range(3):
        uz = np.vstack([_dirichlet(rng, model.nz).probs for _ in range(model.nz)])
        probes.append((float(rng.random()), ex.AuxJoint.from_p(model.p_z, uz, model.k_given_z)))
    return probes


def check_tilde_derivatives(eps: float = 0.1, lams=(0.1, 0.25, 0.4), tol: float = 1e-4,
                      seed: int = 0) -> CheckResult:
    """First and second derivatives in ``lambda`` against central differences."""
    with _Timer() as tm:
        model = ex.SideModel.build(Distribution.uniform(2), Channel.bsc(eps))
        worst = 0.0
        for mu, p in _fd_probes(model, seed):
            f = lambda l: ex.tilde_capital(mu, l, p)
            for lam in lams:
                fam = ex.tilde_family(mu, lam, p, model)
                h1, h2 = 1e-4, 1e-3
                d1 = (f(lam + h1) - f(lam - h1)) / (2 * h1)
                d2 = (f(lam + h2) - 2 * f(lam) + f(lam - h2)) / h2**2
                worst = max(worst, abs(d1 - fam.mean()), abs(d2 + fam.variance()))
    return CheckResult("tilde derivatives vs finite differences", worst <= tol, tol - worst,
                       [f"max deviation {worst:.3g}"], {}, tm.elapsed)


def check_tilde_concavity(eps: float = 0.1, tol: float = 1e-8, seed: int = 0) -> CheckResult:
    with _Timer() as tm:
        model = ex.SideModel.build(Distribution.uniform(2), Channel.bsc(eps))
        lams = np.linspace(0.0, 0.5, 51)
        worst = -math.inf
        for mu, p in _fd_probes(model, seed):
            vals = np.array([ex.tilde_capital(mu, l, p) for l in lams])
            worst = max(worst, float(np.max(vals[:-2] - 2 * vals[1:-1] + vals[2:])))
    return CheckResult("tilde functional concave in lambda", worst <= tol, tol - worst,
                       [f"largest second difference {worst:.3g}"], {}, tm.elapsed)


def check_F_dominates_tilde(eps: float = 0.1, tol: float = 1e-3, grid: int = 5) -> CheckResult:
    with _Timer() as tm:
        model = ex.SideModel.build(Distribution.uniform(2), Channel.bsc(eps))
        worst, rows = math.inf, []
        for ra in np.linspace(0.0, math.log(2), grid):
            for r in np.linspace(0.0, math.log(2), grid):
                big = ex.F_exponent(ra, r, model).value
                small = ex.F_tilde(ra, r, model, check=False).value
                worst = min(worst, big - small)
                rows.append(f"({ra:.3f}, {r:.3f}): F = {big:.5f}, F~ = {small:.5f}")
    return CheckResult("F >= F~ on a rate grid", worst >= -tol, worst + tol, rows, {}, tm.elapsed)


def check_tilde_quadratic_floor(eps: float = 0.1, seed: int = 0) -> CheckResult:
    """Quadratic lower bound on the minimized tilde functional."""
    with _Timer() as tm:
        model = ex.SideModel.build(Distribution.uniform(2), Channel.bsc(eps))
        rho = ex.rho_variance(model, seed=seed)
        worst, rows = math.inf, [f"rho = {rho.value:.6f} at {rho.argmax}"]
        for mu in (0.0, 0.25, 0.5, 0.75, 1.0):
            r_mu = ex.R_mu(mu, model, seed=seed).value
            for lam in (0.1, 0.2, 0.3, 0.4, 0.5):
                lhs = ex.tilde_min(mu, lam, model, seed=seed).value
                rhs = lam * r_mu - 0.5 * lam**2 * rho.value
                worst = min(worst, lhs - rhs)
    return CheckResult("tilde functional quadratic lower bound", worst >= -1e-9, worst, rows,
                       {"rho": rho.value}, tm.elapsed)


def check_tilde_positivity(eps: float = 0.2, tau: float = 0.05, points: int = 10, seed: int = 5,
                      variant: str = "printed") -> CheckResult:
    """Positivity of ``F~`` just outside the region, against ``(rho/4) g(tau/rho)^2``.

    Sample points sit a distance ``tau + delta`` below the frontier with
    ``delta`` uniform in ``(0, 0.05]`` and ``R_A`` uniform over the frontier's span.
    """
    with _Timer() as tm:
        pk = Distribution.uniform(2)
        model = ex.SideModel.build(pk, Channel.bsc(eps))
        bnd = region_boundary(pk, Channel.bsc(eps))
        rho = ex.rho_variance(model).value
        rows = [f"rho = {rho:.6f}, tau = {tau}, variant = {variant}"]
        if not tau < rho / 2:
            return CheckResult(f"F~ positivity outside the region ({variant})", False, -1.0,
                               rows + ["tau is not below rho/2; premise fails"], {"rho": rho}, tm.elapsed)
        floor = rho / 4 * ex.g_inverse(tau / rho) ** 2
        rng = make_rng(seed, 0)
        worst, fails = math.inf, 0
        done = 0
        while done < points:
            ra = float(rng.uniform(0.02, bnd.h_z - 0.02))
            r = float(bnd.frontier(ra)) - tau - float(rng.uniform(1e-6, 0.05))
            if r < 0 or bnd.classify(ra, r + tau) is not Membership.EXTERIOR:
                continue
            done += 1
            v = ex.F_tilde(ra, r, model, check=False, variant=variant).value
            worst = min(worst, v - floor)
            fails += v <= floor
            rows.append(f"({ra:.4f}, {r:.4f}): F~ = {v:.6g} vs {floor:.6g}")
    return CheckResult(f"F~ positivity outside the region ({variant})", fails == 0, worst, rows,
                       {"rho": rho, "floor": floor, "failures": fails}, tm.elapsed)


# --- exponent and region agree ---------------------------------------------------------

def check_region_consistency(eps: float = 0.1, p1: float = 0.05, points: int = 10,
                             margin: float = 0.05, tol: float = 1e-3) -> CheckResult:
    with _Timer() as tm:
        pk = Distribution.uniform(2)
        W = Channel.bsc(eps)
        model = ex.SideModel.build(pk, W)
        p_x = Distribution([1 - p1, p1])
        inner = inner_bound_region(p_x, pk, W)
        bnd = inner.boundary
        ras = np.linspace(0.05, bnd.h_z - 0.05, points)
        rows, ok = [], True
        worst_in, worst_out = -math.inf, math.inf
        for ra in ras:
            f = float(bnd.frontier(ra))
            r_in = f + margin
            v_in = ex.F_exponent(ra, r_in, model).value
            worst_in = max(worst_in, v_in)
            r_out = f - margin
            if not r_out > inner.h_x + 0.05 or not inner.interior(ra, r_out):
                ok = False
                rows.append(f"({ra:.3f}, {r_out:.3f}) is not a strict interior point of the inner bound")
                continue
            v_out = ex.F_exponent(ra, r_out, model).value
            e_out = ex.error_exponent_E(r_out, p_x)
            worst_out = min(worst_out, v_out, e_out)
            rows.append(f"R_A={ra:.3f}: F(inside, R={r_in:.3f}) = {v_in:.3g}; "
                        f"F(outside, R={r_out:.3f}) = {v_out:.4g}, E = {e_out:.4g}")
        ok &= worst_in <= tol and worst_out > 0
    return CheckResult("secrecy exponent vanishes exactly on the region", ok,
                       min(tol - worst_in, worst_out), rows, {}, tm.elapsed)


# --- finite-length trend ---------------------------------------------------------------

@dataclass
class TrendRow:
    n: int
    m: int
    encoders: int
    mode: str
    p_e: float
    leakage: float
    error_curve: float
    leakage_curve: float


def finite_n_trend(ns=(2, 4, 6, 8), p1: float = 0.05, eps: float = 0.2, R: Optional[float] = None,
                   R_A: float = 0.55, samples: int = 400, exhaustive_log2: int = 12, seed: int = 11,
                   policy=DecoderPolicy.DECLARE_ERROR) -> List[TrendRow]:
    """Best-of-ensemble exact error probability and leakage at each ``n``.

    The encoder minimizing ``p_e + leakage`` is kept. Ensembles with at most
    ``2**exhaustive_log2`` members are enumerated, larger ones are sampled.
    The adversary reports the type of ``Z^n``.
    """
    R = math.log(2) / 2 if R is None else R
    spec = FieldSpec(2)
    p_x = Distribution([1 - p1, p1])
    pk = Distribution.uniform(2)
    W = Channel.bsc(eps)
    E = ex.error_exponent_E(R, p_x)
    F = ex.F_exponent(R_A, R, pk, W).value
    rows = []
    for n in ns:
        m = rate_to_m(n, R, 2)
        adv = AdversaryEncoder.type_quantizer(n, 2).register(R_A)
        if n * m + m <= exhaustive_log2:
            gen, mode, count = exhaust_affine(n, m, spec), "exhaustive", 2 ** (n * m + m)
        else:
            rng = make_rng(seed, n)
            gen, mode, count = (random_affine(n, m, spec, rng) for _ in range(samples)), "sampled", samples
        best = None
        for A, b in gen:
            enc = AffineEncoder(A, b)
            pe = error_prob_exact(enc, p_x, policy)
            d = leakage_exact(SystemInstance(p_x, W, enc, adv), "reduced")
            if best is None or pe + d < best[0] - 1e-15:
                best = (pe + d, pe, d)
        (c1,), (c2,) = ex.finite_length_curves([n], 2, R, E, F)
        rows.append(TrendRow(n, m, count, mode, best[1], best[2], float(c1), float(c2)))
    return rows


def check_finite_n_trend(**kwargs) -> CheckResult:
    with _Timer() as tm:
        rows = finite_n_trend(**kwargs)
        pe = np.array([r.p_e for r in rows])
        lk = np.array([r.leakage for r in rows])
        mono_pe = bool(np.all(np.diff(pe) <= 1e-15))
        mono_lk = bool(np.all(np.diff(lk) <= 1e-15))
        below = all(r.p_e <= r.error_curve and r.leakage <= r.leakage_curve for r in rows)
        informative = [r.n for r in rows if r.error_curve < 1 or r.leakage_curve < 1]
        text = [f"n={r.n} m={r.m} ({r.mode}, {r.encoders}): p_e={r.p_e:.5f} leakage={r.leakage:.5f} "
                f"curves=({r.error_curve:.3g}, {r.leakage_curve:.3g})" for r in rows]
        text.append(f"p_e non-increasing: {mono_pe}; leakage non-increasing: {mono_lk}; "
                    f"below curves: {below}; n with a curve below 1: {informative or 'none'}")
        margin = min(float(-np.max(np.diff(pe), initial=0)), float(-np.max(np.diff(lk), initial=0)))
    return CheckResult("finite-length trend of best encoders", mono_pe and mono_lk and below, margin,
                       text, {"rows": [r.__dict__ for r in rows]}, tm.elapsed)


# --- umbrella ----------------------------------------------------------------------------------

def quick_suite(seed: int = 2024) -> List[CheckResult]:
    """Small-scale run of the exact suites, used by the default ``verify`` config."""
    return [
        check_collision_counts(budget_log2=12),
        check_leakage_bound(count=20, seed=seed, max_n=3),
        check_ensemble_leakage(ns=(2,)),
        check_tail_events(count=10, seed=seed, max_n=3),
        check_error_exponent(points=41),
        check_ensemble_error(max_n=3, mc_n=5, mc_m=2, samples=1000, seed=seed),
        check_tilde_bounds(count=200, seed=seed),
    ]
