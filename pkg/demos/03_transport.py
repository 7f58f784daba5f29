"""
Spin transport from a domain wall
=================================

Start with all up spins on the left and watch the spin autocorrelation C(t)
relax.  A log-log slope over a window gives an apparent transport exponent.
"""

from u1floquet import ExperimentConfig
from u1floquet.dynamics import autocorrelation, fit_power_law

for T in (2, 1):
    cfg = ExperimentConfig(experiment="transport", L=12, T=T, n_realizations=20, t_max=60, seed=3)
    series = autocorrelation(cfg)
    slope, err = fit_power_law(series.times, series.mean, (5, 40))
    print(f"T={T}: C(10) = {series.at(10)[0]:.3f}, C(60) = {series.at(60)[0]:.3f}, "
          f"slope on [5,40] = {slope:.2f} +- {err:.2f}")
