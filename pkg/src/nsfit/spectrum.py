"""Spectrum container, Lambert-Beer conversion, resampling and cropping."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    AlreadyAbsorption,
    EmptyResult,
    GridOutOfRange,
    InvalidMeta,
    InvalidSpectrum,
    MissingThickness,
    NonPositiveTransmission,
)

LN10 = math.log(10.0)


class Quantity(str, enum.Enum):
    TRANSMISSION_FRACTION = "transmission_fraction"
    TRANSMISSION_PERCENT = "transmission_percent"
    ABSORPTION_DECADIC = "absorption_decadic"
    ABSORPTION_NATURAL = "absorption_natural"

    @property
    def is_transmission(self) -> bool:
        return self in (Quantity.TRANSMISSION_FRACTION, Quantity.TRANSMISSION_PERCENT)

    @property
    def is_absorption(self) -> bool:
        return not self.is_transmission

    @property
    def convention(self) -> "Convention | None":
        if self is Quantity.ABSORPTION_DECADIC:
            return Convention.DECADIC
        if self is Quantity.ABSORPTION_NATURAL:
            return Convention.NATURAL
        return None


class Convention(str, enum.Enum):
    """Logarithm base used for absorption coefficients."""

    DECADIC = "decadic"
    NATURAL = "natural"

    @property
    def quantity(self) -> Quantity:
        if self is Convention.DECADIC:
            return Quantity.ABSORPTION_DECADIC
        return Quantity.ABSORPTION_NATURAL


def _readonly(values) -> np.ndarray:
    arr = np.array(values, dtype=np.float64, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Immutable sampled spectrum on a strictly increasing wavelength grid (nm)."""

    wavelengths_nm: np.ndarray
    values: np.ndarray
    quantity: Quantity

    def __post_init__(self):
        wl = _readonly(self.wavelengths_nm)
        vals = _readonly(self.values)
        quantity = Quantity(self.quantity)
        if wl.ndim != 1 or vals.ndim != 1:
            raise InvalidSpectrum("wavelengths and values must be one-dimensional")
        if wl.size < 2:
            raise InvalidSpectrum("a spectrum needs at least two points")
        if wl.size != vals.size:
            raise InvalidSpectrum(
                f"length mismatch: {wl.size} wavelengths, {vals.size} values"
            )
        if not np.all(np.isfinite(wl)):
            raise InvalidSpectrum("wavelengths must be finite")
        if np.any(np.diff(wl) <= 0):
            raise InvalidSpectrum("wavelengths must be strictly increasing")
        if not np.all(np.isfinite(vals)):
            raise InvalidSpectrum("values must be finite")
        if quantity is Quantity.TRANSMISSION_FRACTION and (
            vals.min() < 0 or vals.max() > 1
        ):
            raise InvalidSpectrum("transmission fraction must lie in [0, 1]")
        if quantity is Quantity.TRANSMISSION_PERCENT and (
            vals.min() < 0 or vals.max() > 100
        ):
            raise InvalidSpectrum("transmission percent must lie in [0, 100]")
        object.__setattr__(self, "wavelengths_nm", wl)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "quantity", quantity)

    def __len__(self) -> int:
        return self.wavelengths_nm.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, Spectrum):
            return NotImplemented
        return (
            self.quantity is other.quantity
            and np.array_equal(self.wavelengths_nm, other.wavelengths_nm)
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None

    @property
    def convention(self) -> Convention | None:
        return self.quantity.convention

    @property
    def span(self) -> tuple[float, float]:
        return float(self.wavelengths_nm[0]), float(self.wavelengths_nm[-1])

    def with_values(self, values, quantity: Quantity | None = None) -> "Spectrum":
        return Spectrum(self.wavelengths_nm, values, quantity or self.quantity)

    def scaled(self, factor: float) -> "Spectrum":
        return self.with_values(self.values * factor)


@dataclass(frozen=True)
class SampleMeta:
    sample_id: str
    thickness_cm: float | None = None
    epr_ppm: float | None = None
    epr_rel_err: float = 0.06

    def __post_init__(self):
        if self.thickness_cm is not None and not self.thickness_cm > 0:
            raise InvalidMeta(f"thickness must be positive, got {self.thickness_cm}")
        if self.epr_ppm is not None and not self.epr_ppm > 0:
            raise InvalidMeta(f"EPR concentration must be positive, got {self.epr_ppm}")
        if not 0 < self.epr_rel_err < 1:
            raise InvalidMeta(f"EPR relative error must be in (0, 1), got {self.epr_rel_err}")


def to_absorption(
    spec: Spectrum, meta: SampleMeta, convention: Convention = Convention.DECADIC
) -> Spectrum:
    """Convert a transmission spectrum to an absorption coefficient in cm^-1.

    Percent input is divided by 100 first. The decadic coefficient is
    ``-log10(T) / d``; the natural one is ``-ln(T) / d``.
    """
    if not spec.quantity.is_transmission:
        raise AlreadyAbsorption(f"spectrum is already {spec.quantity.value}")
    if meta.thickness_cm is None:
        raise MissingThickness(f"sample {meta.sample_id!r} has no thickness")
    convention = Convention(convention)
    t = spec.values
    if spec.quantity is Quantity.TRANSMISSION_PERCENT:
        t = t / 100.0
    bad = np.flatnonzero(t <= 0)
    if bad.size:
        i = bad[0]
        raise NonPositiveTransmission(spec.wavelengths_nm[i], spec.values[i])
    if convention is Convention.DECADIC:
        a = -np.log10(t) / meta.thickness_cm
    else:
        a = -np.log(t) / meta.thickness_cm
    return Spectrum(spec.wavelengths_nm, a, convention.quantity)


def to_transmission(spec: Spectrum, thickness_cm: float) -> Spectrum:
    """Inverse of :func:`to_absorption`, returning a transmission fraction."""
    if not spec.quantity.is_absorption:
        raise InvalidSpectrum(f"expected an absorption spectrum, got {spec.quantity.value}")
    if not thickness_cm > 0:
        raise InvalidMeta(f"thickness must be positive, got {thickness_cm}")
    if spec.quantity is Quantity.ABSORPTION_DECADIC:
        t = np.power(10.0, -spec.values * thickness_cm)
    else:
        t = np.exp(-spec.values * thickness_cm)
    return Spectrum(spec.wavelengths_nm, t, Quantity.TRANSMISSION_FRACTION)


def convert_convention(spec: Spectrum, convention: Convention) -> Spectrum:
    """Rescale an absorption spectrum between decadic and natural coefficients."""
    convention = Convention(convention)
    current = spec.convention
    if current is None:
        raise InvalidSpectrum("convention conversion needs an absorption spectrum")
    if current is convention:
        return spec
    factor = LN10 if convention is Convention.NATURAL else 1.0 / LN10
    return Spectrum(spec.wavelengths_nm, spec.values * factor, convention.quantity)


def interpolate(spec: Spectrum, points) -> np.ndarray:
    """Linearly interpolated values at ``points``; extrapolation is refused."""
    pts = np.atleast_1d(np.asarray(points, dtype=np.float64))
    lo, hi = spec.span
    if pts.size and (pts.min() < lo or pts.max() > hi):
        raise GridOutOfRange(
            f"query [{pts.min():g}, {pts.max():g}] nm exceeds data range [{lo:g}, {hi:g}] nm"
        )
    return interp_values(spec, pts)


def resample(spec: Spectrum, target_grid) -> Spectrum:
    """Place ``spec`` on ``target_grid`` by linear interpolation."""
    grid = np.asarray(target_grid, dtype=np.float64)
    if grid.ndim != 1 or grid.size == 0:
        raise InvalidSpectrum("target grid must be a non-empty 1-D sequence")
    if np.any(np.diff(grid) <= 0):
        raise InvalidSpectrum("target grid must be strictly increasing")
    return Spectrum(grid, interpolate(spec, grid), spec.quantity)


def interp_values(spec: Spectrum, grid: np.ndarray) -> np.ndarray:
    wl = spec.wavelengths_nm
    vals = spec.values
    idx = np.searchsorted(wl, grid, side="left")
    out = np.empty(grid.shape, dtype=np.float64)
    exact = (idx < wl.size) & (wl[np.minimum(idx, wl.size - 1)] == grid)
    out[exact] = vals[idx[exact]]
    rest = ~exact
    if np.any(rest):
        j = np.clip(idx[rest], 1, wl.size - 1)
        x0, x1 = wl[j - 1], wl[j]
        y0, y1 = vals[j - 1], vals[j]
        t = (grid[rest] - x0) / (x1 - x0)
        out[rest] = y0 + t * (y1 - y0)
    return out


def crop(spec: Spectrum, lo_nm: float, hi_nm: float) -> Spectrum:
    """Keep the points with ``lo_nm <= wavelength <= hi_nm``."""
    if not lo_nm < hi_nm:
        raise InvalidSpectrum(f"crop bounds must satisfy lo < hi, got ({lo_nm}, {hi_nm})")
    wl = spec.wavelengths_nm
    keep = (wl >= lo_nm) & (wl <= hi_nm)
    n = int(np.count_nonzero(keep))
    if n == 0:
        raise EmptyResult(f"no points between {lo_nm:g} and {hi_nm:g} nm")
    if n == wl.size:
        return spec
    if n < 2:
        raise EmptyResult(f"only one point between {lo_nm:g} and {hi_nm:g} nm")
    return Spectrum(wl[keep], spec.values[keep], spec.quantity)
