"""Noise spectroscopy of pure-dephasing qubits.

Forward simulation of coherence decay under free evolution, spin echo and
evenly spaced pulse trains, and the inverse problem: reconstructing the
noise power spectrum from measured coherence traces, either through the
Fourier transform of the attenuation curvature (free decay and spin echo)
or through the harmonic sampling of long pulse trains.
"""

from .spectra import (
    Constant,
    Gaussian,
    Lorentzian,
    OneOverF,
    SpectrumModel,
    closed_form_chi,
    closed_form_tail_slope,
    model_from_dict,
    model_from_json,
    model_to_dict,
    model_to_json,
    y_n_coefficient,
)
from .forward import (
    CPMG,
    FID,
    CoherenceTrace,
    DivergentIntegralError,
    Mask,
    MeasurementPlan,
    PulseSequence,
    SpinEcho,
    attenuation,
    coherence,
    filter_value,
    load_trace,
    pulse_times,
    save_trace,
    simulate_trace,
    t2_from_trace,
)
from .traceprep import (
    AttenuationTrace,
    EarlyTimeFit,
    MitigationConfig,
    Source,
    fill_early_time,
    fit_early_time,
    mirror,
    mitigate,
    to_attenuation,
)
from .fid import (
    DerivativeTrace,
    ReconstructedSpectrum,
    fourier_to_spectrum,
    load_spectrum,
    reconstruct_fid,
    save_spectrum,
    second_derivative,
)
from .echo import (
    FitConvergenceError,
    MArray,
    OneOverFFit,
    extract_m,
    fit_one_over_f,
    reconstruct_se,
    reconstruct_with_one_over_f,
    recursion_s_from_m,
)
from .ddns import (
    CombCoefficients,
    DDNSPlan,
    comb_coefficients,
    design_matrix,
    run_alvarez_suter,
    single_delta_probe,
)

__version__ = "0.1.0"

__all__ = [
    "Constant",
    "Gaussian",
    "Lorentzian",
    "OneOverF",
    "SpectrumModel",
    "closed_form_chi",
    "closed_form_tail_slope",
    "model_from_dict",
    "model_from_json",
    "model_to_dict",
    "model_to_json",
    "y_n_coefficient",
    "CPMG",
    "FID",
    "CoherenceTrace",
    "DivergentIntegralError",
    "Mask",
    "MeasurementPlan",
    "PulseSequence",
    "SpinEcho",
    "attenuation",
    "coherence",
    "filter_value",
    "load_trace",
    "pulse_times",
    "save_trace",
    "simulate_trace",
    "t2_from_trace",
    "AttenuationTrace",
    "EarlyTimeFit",
    "MitigationConfig",
    "Source",
    "fill_early_time",
    "fit_early_time",
    "mirror",
    "mitigate",
    "to_attenuation",
    "DerivativeTrace",
    "ReconstructedSpectrum",
    "fourier_to_spectrum",
    "load_spectrum",
    "reconstruct_fid",
    "save_spectrum",
    "second_derivative",
    "FitConvergenceError",
    "MArray",
    "OneOverFFit",
    "extract_m",
    "fit_one_over_f",
    "reconstruct_se",
    "reconstruct_with_one_over_f",
    "recursion_s_from_m",
    "CombCoefficients",
    "DDNSPlan",
    "comb_coefficients",
    "design_matrix",
    "run_alvarez_suter",
    "single_delta_probe",
    "__version__",
]
