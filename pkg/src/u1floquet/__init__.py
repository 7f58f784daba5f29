"""Exact simulation of U(1)-conserving Floquet random circuits."""

__version__ = "0.1.0"

from .basis import (ChainGeometry, ChargeSector, ConfigError, ResourceError, SiteSpace,
                    enumerate_sector, full_space, local_charge, total_charge)
from .circuit import (FloquetCircuit, apply_one_step, build_circuit, evolve, floquet_unitary,
                      snapshot_times)
from .config import ExperimentConfig, load_config
from .gates import (BlockGate, CouplingVector, TwoSiteParams, gate_from_couplings,
                    gate_from_two_site_params, sample_block_gate, sample_haar_u1_two_site,
                    sample_haar_unitary, sample_perturbed_anderson, sample_perturbed_diagonal,
                    sample_su2_lie_haar)
from .spectral import quasienergies, r_ratios, reference_mean, reference_pdf

__all__ = [
    "BlockGate", "ChainGeometry", "ChargeSector", "ConfigError", "CouplingVector",
    "ExperimentConfig", "FloquetCircuit", "ResourceError", "SiteSpace", "TwoSiteParams",
    "apply_one_step", "build_circuit", "enumerate_sector", "evolve", "floquet_unitary",
    "full_space", "gate_from_couplings", "gate_from_two_site_params", "load_config",
    "local_charge", "quasienergies", "r_ratios", "reference_mean", "reference_pdf",
    "sample_block_gate", "sample_haar_u1_two_site", "sample_haar_unitary",
    "sample_perturbed_anderson", "sample_perturbed_diagonal", "sample_su2_lie_haar",
    "snapshot_times", "total_charge",
]
