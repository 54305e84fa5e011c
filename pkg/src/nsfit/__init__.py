"""Neutral substitutional nitrogen (N_s0) in diamond from UV-Vis absorption spectra."""

__version__ = "0.1.0"

from .analysis import (  # noqa: E402
    SIGMA_DECADIC,
    SIGMA_NATURAL,
    TABLE1,
    CalibrationModel,
    CalibrationResult,
    ConcentrationEstimate,
    CrossSection,
    calibrate,
    concentration,
    cross_section_cm2,
    detectable_range,
)
from .fitter import FitConfig, FitMode, FitResult, fit, initial_guess, residual_spectrum  # noqa: E402
from .io import parse_spectrum_file, write_spectrum_file  # noqa: E402
from .model import (  # noqa: E402
    GaussianBand,
    ModelParams,
    ReferenceSpectrum,
    builtin_reference,
    eval_gaussian,
    eval_model,
    eval_ramp,
    jacobian,
)
from .spectrum import (  # noqa: E402
    Convention,
    Quantity,
    SampleMeta,
    Spectrum,
    crop,
    interpolate,
    resample,
    to_absorption,
)
from .pipeline import analyze, analyze_file  # noqa: E402
