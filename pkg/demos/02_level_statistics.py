"""
Quasienergy level statistics
============================

The gap ratio r distinguishes chaotic spectra (mean close to 0.60 for the
unitary class) from uncorrelated ones (2 ln 2 - 1, about 0.386).
"""

import numpy as np

from u1floquet import ExperimentConfig, reference_mean
from u1floquet.spectral import level_statistics_experiment

print(f"references: GUE {reference_mean('GUE'):.4f}, Poisson {reference_mean('Poisson'):.4f}")

# Period-2 circuits are fully chaotic already at modest sizes.
# Period-1 circuits sit below, creeping up with L.
for T in (2, 1):
    for L in (8, 10):
        stats = level_statistics_experiment(ExperimentConfig(L=L, T=T, n_realizations=100, seed=0))
        print(f"T={T} L={L:2d}  <r> = {stats.mean_r:.4f} +- {stats.stderr_r:.4f}")

# Turning on the interaction in the Anderson family drives the spectrum
# from Poisson towards GUE.
for c2 in (0.0, np.pi / 8, np.pi / 4):
    cfg = ExperimentConfig(L=10, family="perturbed_anderson", parameter=c2, n_realizations=50, seed=1)
    print(f"c2 = {c2:.3f}  <r> = {level_statistics_experiment(cfg).mean_r:.4f}")
