"""Box parameterization of products of simplices and a deterministic multistart.

A point of the probability simplex on ``k`` symbols is written as
``k - 1`` stick-breaking fractions in ``[0, 1]``, so every vertex and face
is reachable and bound-constrained quasi-Newton can be used directly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np
from scipy.optimize import minimize

from .finite_field import make_rng


def stick_to_simplex(x: np.ndarray) -> np.ndarray:
    """Map ``(..., k-1)`` fractions to ``(..., k)`` probabilities."""
    x = np.clip(np.asarray(x, float), 0.0, 1.0)
    rem = np.cumprod(1.0 - x, axis=-1)
    prev = np.concatenate([np.ones(x.shape[:-1] + (1,)), rem[..., :-1]], axis=-1)
    return np.concatenate([x * prev, rem[..., -1:]], axis=-1)


def simplex_to_stick(p: np.ndarray) -> np.ndarray:
    p = np.asarray(p, float)
    left = 1.0 - np.concatenate([np.zeros(p.shape[:-1] + (1,)), np.cumsum(p, axis=-1)[..., :-2]], axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        x = np.where(left > 1e-15, p[..., :-1] / left, 0.5)
    return np.clip(x, 0.0, 1.0)


@dataclass(frozen=True)
class SimplexProduct:
    """``rows`` independent simplices of ``k`` symbols each, flattened."""

    rows: int
    k: int

    @property
    def dim(self) -> int:
        return self.rows * (self.k - 1)

    def to_probs(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, float)
        return stick_to_simplex(x.reshape(x.shape[:-1] + (self.rows, self.k - 1)))

    def to_box(self, probs: np.ndarray) -> np.ndarray:
        probs = np.asarray(probs, float)
        x = simplex_to_stick(probs)
        return x.reshape(x.shape[:-2] + (self.dim,))


@dataclass
class MultistartResult:
    x: np.ndarray
    value: float
    starts: int
    refined: int
    iterations: int
    pool: np.ndarray = field(repr=False)
    pool_values: np.ndarray = field(repr=False)


def multistart_minimize(fun_batch: Callable[[np.ndarray], np.ndarray], dim: int,
                        fixed_starts: Sequence[np.ndarray] = (), n_starts: int = 32,
                        seed: int = 0, refine: int = 3,
                        warm: Optional[np.ndarray] = None) -> MultistartResult:
    """Minimize over ``[0,1]^dim``.

    The pool holds ``fixed_starts``, the box centre and seeded uniform draws
    up to ``n_starts`` points. It is scored in one vectorized call, and the
    best ``refine`` pool points (plus ``warm``) are polished with L-BFGS-B.
    """
    pool = [np.asarray(s, float) for s in fixed_starts]
    pool.append(np.full(dim, 0.5))
    extra = max(n_starts - len(pool), 0)
    if extra:
        pool.extend(make_rng(seed, 7).random((extra, dim)))
    pool = np.vstack(pool)[: max(n_starts, len(fixed_starts) + 1)]
    vals = fun_batch(pool)
    order = np.argsort(vals, kind="stable")
    cands = [pool[i] for i in order[:refine]]
    if warm is not None:
        cands.append(np.asarray(warm, float))

    def f1(x):
        return float(fun_batch(x[None, :])[0])

    best_x, best_v = pool[order[0]].copy(), float(vals[order[0]])
    iters = 0
    for x0 in cands:
        res = minimize(f1, x0, method="L-BFGS-B", bounds=[(0.0, 1.0)] * dim,
                       options={"maxiter": 200, "ftol": 1e-13, "gtol": 1e-10})
        iters += int(res.nit)
        v = f1(res.x)
        if v < best_v:
            best_x, best_v = np.asarray(res.x, float), v
    return MultistartResult(best_x, best_v, len(pool), len(cands), iters, pool, vals)
