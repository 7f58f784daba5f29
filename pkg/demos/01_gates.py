"""
Charge-conserving two-site gates
================================

A two-site gate that conserves the number of up spins splits into three
blocks: both down, one up, both up.  Only the middle block can move a spin.
"""

import numpy as np

from u1floquet import (CouplingVector, gate_from_couplings, sample_haar_u1_two_site,
                       sample_perturbed_anderson, sample_perturbed_diagonal, sample_su2_lie_haar)
from u1floquet.gates import su2_exp, two_site_params_of

rng = np.random.default_rng(1)

# A Haar-random gate from the U(1) x U(2) x U(1) group.
g = sample_haar_u1_two_site(rng)
print("block sizes:", [b.shape[0] for b in g.blocks])
print("unitarity error:", g.unitarity_error())

# Every such gate is an exponential of six commuting-with-charge generators.
# Going gate -> parameters -> gate is exact to rounding.
c = CouplingVector((0.3, 1.1, 2.0, 0.4, -0.7, 0.2))
gate = gate_from_couplings(c)
print(two_site_params_of(gate))

# Lie-Haar sampling of SU(2): the hopping amplitude |sin psi|^2 comes out uniform.
samples = sample_su2_lie_haar(rng, size=20_000)
hop = np.array([abs(su2_exp(*row)[0, 1]) ** 2 for row in samples])
print("quartiles of |sin psi|^2:", np.round(np.quantile(hop, [0.25, 0.5, 0.75]), 3))

# The Anderson family at zero interaction is a free-fermion gate; the
# diagonal family at R = 0 never moves a spin.
print("free gate central block:\n", np.round(sample_perturbed_anderson(0.0, rng).blocks[1], 3))
print("R=0 central block:\n", np.round(sample_perturbed_diagonal(0.0, rng).blocks[1], 3))
