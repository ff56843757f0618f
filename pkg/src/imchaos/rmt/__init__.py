from imchaos.rmt.cue import CueSpectrum, CueFieldEval, sample_cue, eval_fields, field_X, field_Y, keating_snaith, normalizer_closed_form
from imchaos.rmt.cuechaos import CueChaosConfig, cue_pairings, chaos_ratio_pair, breakdown_probe, periodicity_probe, covariance_scan

__all__ = [
    "CueSpectrum",
    "CueFieldEval",
    "sample_cue",
    "eval_fields",
    "field_X",
    "field_Y",
    "keating_snaith",
    "normalizer_closed_form",
    "CueChaosConfig",
    "cue_pairings",
    "chaos_ratio_pair",
    "breakdown_probe",
    "periodicity_probe",
    "covariance_scan",
]
