"""Where leakage can be driven to zero, and how fast.

For a uniform binary key seen through BSC(0.1) we trace the one-helper
region, compare it with the binary closed form, and evaluate the secrecy
exponent on both sides of the frontier. The exponent should be zero inside
the region and positive below it. The error exponent of the universal
decoder is printed alongside for a Bernoulli(0.05) source.

Run: python demos/region_and_exponents.py   (about a minute)
"""

import numpy as np

from privamp.exponents import F_exponent, error_exponent_E
from privamp.prob_types import Channel, Distribution
from privamp.rate_region import bsc_frontier, inner_bound_region, region_boundary

eps = 0.1
p_k, W = Distribution.uniform(2), Channel.bsc(eps)
p_x = Distribution([0.95, 0.05])

bnd = region_boundary(p_k, W, sweep=21)
ra = np.linspace(0.0, bnd.h_z, 6)
print("R_A      traced    closed form")
for a, f, c in zip(ra, bnd.frontier(ra), bsc_frontier(ra, eps)):
    print(f"{a:.3f}   {f:.5f}   {c:.5f}")

inner = inner_bound_region(p_x, p_k, W, boundary=bnd)
print(f"\nH(X) = {inner.h_x:.4f}; the secure region also needs R above it")
print("R_A     R      side      F        E")
for a in (0.1, 0.4):
    f = float(bnd.frontier(a))
    for r, side in ((f + 0.05, "inside"), (f - 0.05, "outside")):
        print(f"{a:.2f}  {r:.3f}  {side:>7}  {F_exponent(a, r, p_k, W).value:.5f}  "
              f"{error_exponent_E(r, p_x):.5f}")
