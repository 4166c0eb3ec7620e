"""Leakage of a compressed one-time pad when the adversary sees a noisy key.

A binary source block is encrypted with a uniform key, then squeezed through
an affine map before leaving the transmitter. The adversary holds the
compressed ciphertext and an encoded observation of the key through a BSC.
We compute the exact leakage two ways, compare it with the divergence bound
and with Theta, then average over every encoder of the ensemble.

Run: python demos/leakage_walkthrough.py
"""

import numpy as np

from privamp.affine_code import AffineEncoder
from privamp.cipher_sim import (AdversaryEncoder, SystemInstance, build_joint, ensemble_mean_leakage,
                                leakage_divergence_bound, leakage_exact, theta)
from privamp.finite_field import FieldMatrix, FieldSpec, FieldVector
from privamp.prob_types import Channel, Distribution

n, m, eps = 3, 2, 0.1
spec = FieldSpec(2)
p_x = Distribution([0.9, 0.1])
W = Channel.bsc(eps)

# a fixed encoder: two parity checks plus an offset
A = FieldMatrix(spec, np.array([[1, 0], [1, 1], [0, 1]]))
b = FieldVector(spec, np.array([1, 0]))
enc = AffineEncoder(A, b)

for adv in (AdversaryEncoder.constant(n, 2), AdversaryEncoder.type_quantizer(n, 2),
            AdversaryEncoder.identity(n, 2)):
    sys = SystemInstance(p_x, W, enc, adv)
    j = build_joint(sys)
    joint, reduced = leakage_exact(j, "joint"), leakage_exact(j, "reduced")
    bound = leakage_divergence_bound(j)
    R = m / n * np.log(2)
    print(f"{adv.name:>14}: leakage {joint:.6f} (reduced route {reduced:.6f}), "
          f"divergence bound {bound:.6f}, Theta {theta(j, R):.6f}")

# averaging over all 2^(nm + m) affine maps
sys = SystemInstance(p_x, W, enc, AdversaryEncoder.identity(n, 2))
mean = ensemble_mean_leakage(sys, "reduced")
print(f"ensemble mean leakage, identity adversary: {mean:.6f}")
