from imchaos.ising.lattice import BETA_C, SpinLattice, xor_field, encode_snapshot, decode_snapshot
from imchaos.ising.samplers import Chain, wolff_step, sample_critical, exact_gibbs, gibbs_gate, GibbsGate
from imchaos.ising.chi import spin_constant, chi_correlation, chi_small
from imchaos.ising.xor import (
    XorRunConfig,
    XorData,
    run_xor,
    xor_two_point,
    xor_pairing_moment,
    pairing_target,
    decay_exponent,
    magnetic_reweight,
    sine_gordon_comparison,
    spin_onsager_check,
)

__all__ = [
    "BETA_C",
    "SpinLattice",
    "xor_field",
    "encode_snapshot",
    "decode_snapshot",
    "Chain",
    "wolff_step",
    "sample_critical",
    "exact_gibbs",
    "gibbs_gate",
    "GibbsGate",
    "spin_constant",
    "chi_correlation",
    "chi_small",
    "XorRunConfig",
    "XorData",
    "run_xor",
    "xor_two_point",
    "xor_pairing_moment",
    "pairing_target",
    "decay_exponent",
    "magnetic_reweight",
    "sine_gordon_comparison",
    "spin_onsager_check",
]
