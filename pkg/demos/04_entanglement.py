"""
Entanglement growth from a Neel state
=====================================

Half-chain von Neumann entropy saturates below the Page value because charge
conservation restricts the accessible states.  The U(1) value is the average
over random states inside the half-filling sector.
"""

from u1floquet import ExperimentConfig
from u1floquet.dynamics import entanglement_experiment

common = dict(experiment="entanglement", L=10, initial_state="antiferromagnetic",
              n_realizations=10, t_max=60, u1_samples=300, seed=5)
runs = {
    "T=1": ExperimentConfig(T=1, **common),
    "T=2": ExperimentConfig(T=2, **common),
    "random in time": ExperimentConfig(T=1, random_in_time=True, **common),
}
for name, cfg in runs.items():
    s = entanglement_experiment(cfg)
    print(f"{name:15s} S(5) = {s.at(5)[0]:.3f}  S(60) = {s.at(60)[0]:.3f}  "
          f"U(1) value {s.s_u1:.3f}  Page {s.s_page:.3f}")
