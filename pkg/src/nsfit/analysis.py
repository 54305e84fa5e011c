"""Concentration from the 270 nm band height, cross-section constants and calibration."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import ConventionMismatch, DegenerateX, InsufficientPoints, InvalidLimits
from .spectrum import Convention

CARBON_ATOM_MASS_G = 1.99e-23
DIAMOND_DENSITY_G_CM3 = 3.51
DEFAULT_MU270_REL_ERR = 0.01

# instrument limits (absorbance, i.e. A*d) giving 0.01 ppm / ~39 ppm on a 300 um plate
DEFAULT_MIN_ABSORBANCE = 5.9e-4
DEFAULT_MAX_ABSORBANCE = 2.3

# EPR concentration (ppm) and fitted 270 nm band height (decadic, cm^-1) of six
# nitrogen-doped CVD plates
TABLE1 = (
    ("Cas-40", 3.2, 5.9),
    ("Cas-44", 9.5, 17.7),
    ("Cas-48", 5.2, 10.9),
    ("Cas-50", 19.3, 37.2),
    ("Cas-51", 11.2, 24.7),
    ("Cas-68", 7.8, 13.9),
)


@dataclass(frozen=True)
class CrossSection:
    """Band-height to concentration ratio in cm^-1 per ppm."""

    value: float
    uncertainty: float
    convention: Convention

    def __post_init__(self):
        if not self.value > 0:
            raise ValueError(f"cross-section must be positive, got {self.value}")
        if not self.uncertainty >= 0:
            raise ValueError(f"uncertainty must be non-negative, got {self.uncertainty}")
        object.__setattr__(self, "convention", Convention(self.convention))

    @property
    def rel_uncertainty(self) -> float:
        return self.uncertainty / self.value


SIGMA_DECADIC = CrossSection(1.96, 0.15, Convention.DECADIC)
SIGMA_NATURAL = CrossSection(4.51, 0.35, Convention.NATURAL)


def default_cross_section(convention: Convention) -> CrossSection:
    if Convention(convention) is Convention.DECADIC:
        return SIGMA_DECADIC
    return SIGMA_NATURAL


@dataclass(frozen=True)
class ConcentrationEstimate:
    ppm: float
    ppm_uncertainty: float
    mu270: float
    cross_section_used: CrossSection

    @property
    def rel_uncertainty(self) -> float:
        return self.ppm_uncertainty / self.ppm if self.ppm else math.inf


def concentration(
    mu270: float,
    mu270_rel_err: float = DEFAULT_MU270_REL_ERR,
    cs: CrossSection = SIGMA_DECADIC,
    convention: Convention | None = None,
) -> ConcentrationEstimate:
    """N_s0 concentration in ppm from the fitted 270 nm band height.

    ``convention`` is the logarithm base ``mu270`` was computed with; when
    given it must match the cross-section. Relative errors of the band height
    and the cross-section are combined in quadrature.
    """
    if convention is not None and Convention(convention) is not cs.convention:
        raise ConventionMismatch(
            f"band height is {Convention(convention).value} but cross-section is "
            f"{cs.convention.value}"
        )
    if not mu270 >= 0:
        raise ValueError(f"mu270 must be >= 0, got {mu270}")
    if not mu270_rel_err >= 0:
        raise ValueError(f"relative error must be >= 0, got {mu270_rel_err}")
    ppm = mu270 / cs.value
    rel = math.hypot(mu270_rel_err, cs.rel_uncertainty)
    return ConcentrationEstimate(ppm, ppm * rel, mu270, cs)


def cross_section_cm2(cs: CrossSection | float) -> float:
    """Convert cm^-1/ppm to an absorption cross-section in cm^2."""
    value = cs.value if isinstance(cs, CrossSection) else float(cs)
    return value * 1e6 * CARBON_ATOM_MASS_G / DIAMOND_DENSITY_G_CM3


class CalibrationModel(str, enum.Enum):
    THROUGH_ORIGIN = "through_origin"
    WITH_INTERCEPT = "with_intercept"


@dataclass(frozen=True)
class CalibrationResult:
    slope: float
    slope_ci95_half_width: float
    model: CalibrationModel
    intercept: float | None
    n_points: int
    residuals: tuple[float, ...]
    slope_stderr: float
    dof: int

    @property
    def ci_defined(self) -> bool:
        return math.isfinite(self.slope_ci95_half_width)

    def as_cross_section(self, convention: Convention = Convention.DECADIC) -> CrossSection:
        unc = self.slope_ci95_half_width if self.ci_defined else math.inf
        return CrossSection(self.slope, unc, convention)


def calibrate(pairs, model: CalibrationModel = CalibrationModel.THROUGH_ORIGIN) -> CalibrationResult:
    """Regress band height on reference concentration.

    ``pairs`` holds ``(ppm, mu270)``. The 95 % half-width uses the two-sided
    Student-t quantile with n-1 (through origin) or n-2 degrees of freedom;
    with no residual degrees of freedom it is reported as ``inf``.
    """
    model = CalibrationModel(model)
    data = np.asarray(pairs, dtype=np.float64).reshape(-1, 2)
    x, y = data[:, 0], data[:, 1]
    n = x.size
    min_points = 1 if model is CalibrationModel.THROUGH_ORIGIN else 2
    if n < min_points:
        raise InsufficientPoints(f"{model.value} needs at least {min_points} points, got {n}")
    if np.any(x <= 0):
        raise ValueError("reference concentrations must be positive")

    if model is CalibrationModel.THROUGH_ORIGIN:
        sxx = float(x @ x)
        if sxx == 0:
            raise DegenerateX("sum of squared concentrations is zero")
        slope = float(x @ y) / sxx
        intercept = None
        resid = y - slope * x
        dof = n - 1
        spread = sxx
    else:
        xm = x.mean()
        sxx = float(((x - xm) ** 2).sum())
        if sxx == 0:
            raise DegenerateX("all concentrations are identical")
        slope = float(((x - xm) * (y - y.mean())).sum()) / sxx
        intercept = float(y.mean() - slope * xm)
        resid = y - (intercept + slope * x)
        dof = n - 2
        spread = sxx

    if dof > 0:
        s2 = float(resid @ resid) / dof
        stderr = math.sqrt(s2 / spread)
        half = float(stats.t.ppf(0.975, dof)) * stderr
    else:
        stderr = math.inf
        half = math.inf
    return CalibrationResult(
        slope=slope,
        slope_ci95_half_width=half,
        model=model,
        intercept=intercept,
        n_points=n,
        residuals=tuple(float(r) for r in resid),
        slope_stderr=stderr,
        dof=dof,
    )


def detectable_range(
    thickness_cm: float,
    min_detectable_absorbance: float = DEFAULT_MIN_ABSORBANCE,
    max_measurable_absorbance: float = DEFAULT_MAX_ABSORBANCE,
    cs: CrossSection = SIGMA_DECADIC,
) -> tuple[float, float]:
    """Concentration window (ppm) whose band height stays within the instrument limits.

    Limits are absorbances (coefficient times thickness) in the cross-section's
    convention.
    """
    if not thickness_cm > 0:
        raise InvalidLimits(f"thickness must be positive, got {thickness_cm}")
    if not 0 < min_detectable_absorbance < max_measurable_absorbance:
        raise InvalidLimits(
            "need 0 < min_detectable_absorbance < max_measurable_absorbance, got "
            f"{min_detectable_absorbance}, {max_measurable_absorbance}"
        )
    per_ppm = thickness_cm * cs.value
    return min_detectable_absorbance / per_ppm, max_measurable_absorbance / per_ppm
