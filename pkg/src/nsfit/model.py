"""Five-component absorption model: three Gaussian bands, a ramp and a reference.

The model evaluated on a wavelength grid is::

    g270 + g360 [+ g520] + R / lambda**3 + ref_weight * e(lambda)

where each band is ``a * exp(-(lambda - b)**2 / (2 c**2))`` and ``e`` is the
absorption of an electronic-grade (defect-free) diamond. Dropping ``g520``
gives the four-component variant.
"""

from __future__ import annotations

import enum
import os
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import GridOutOfRange, InvalidSpectrum
from .spectrum import Convention, Quantity, Spectrum, interp_values

BAND_NAMES = ("g270", "g360", "g520")

PARAM_NAMES_FIVE = (
    "a270", "b270", "c270",
    "a360", "b360", "c360",
    "a520", "b520", "c520",
    "R", "ref_weight",
)
PARAM_NAMES_FOUR = PARAM_NAMES_FIVE[:6] + PARAM_NAMES_FIVE[9:]


def param_names(five_component: bool) -> tuple[str, ...]:
    """Jacobian column order for the given mode."""
    return PARAM_NAMES_FIVE if five_component else PARAM_NAMES_FOUR


@dataclass(frozen=True)
class GaussianBand:
    amplitude_a: float
    center_b: float
    width_c: float

    def __post_init__(self):
        if not self.amplitude_a >= 0:
            raise ValueError(f"band amplitude must be >= 0, got {self.amplitude_a}")
        if not self.width_c > 0:
            raise ValueError(f"band width must be > 0, got {self.width_c}")

    def __call__(self, wavelength_nm):
        return eval_gaussian(self, wavelength_nm)


@dataclass(frozen=True)
class ModelParams:
    g270: GaussianBand
    g360: GaussianBand
    g520: GaussianBand | None
    ramp_R: float
    ref_weight: float

    def __post_init__(self):
        if not self.ramp_R >= 0:
            raise ValueError(f"ramp factor must be >= 0, got {self.ramp_R}")
        if not self.ref_weight >= 0:
            raise ValueError(f"reference weight must be >= 0, got {self.ref_weight}")

    @property
    def five_component(self) -> bool:
        return self.g520 is not None

    @property
    def bands(self) -> tuple[GaussianBand, ...]:
        if self.g520 is None:
            return (self.g270, self.g360)
        return (self.g270, self.g360, self.g520)

    @property
    def names(self) -> tuple[str, ...]:
        return param_names(self.five_component)

    def to_vector(self) -> np.ndarray:
        vec = []
        for band in self.bands:
            vec.extend((band.amplitude_a, band.center_b, band.width_c))
        vec.extend((self.ramp_R, self.ref_weight))
        return np.array(vec, dtype=np.float64)

    @classmethod
    def from_vector(cls, vec) -> "ModelParams":
        vec = [float(v) for v in vec]
        if len(vec) not in (8, 11):
            raise ValueError(f"expected 8 or 11 parameters, got {len(vec)}")
        bands = [GaussianBand(*vec[i : i + 3]) for i in range(0, len(vec) - 2, 3)]
        return cls(
            g270=bands[0],
            g360=bands[1],
            g520=bands[2] if len(bands) == 3 else None,
            ramp_R=vec[-2],
            ref_weight=vec[-1],
        )

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.names, (float(v) for v in self.to_vector())))

    @classmethod
    def from_dict(cls, values: dict, five_component: bool | None = None) -> "ModelParams":
        if five_component is None:
            five_component = "a520" in values
        return cls.from_vector([values[k] for k in param_names(five_component)])

    def four_component(self) -> "ModelParams":
        return ModelParams(self.g270, self.g360, None, self.ramp_R, self.ref_weight)

    def with_g520(self, band: GaussianBand) -> "ModelParams":
        return ModelParams(self.g270, self.g360, band, self.ramp_R, self.ref_weight)


class ReferenceOrigin(str, enum.Enum):
    USER_FILE = "user_file"
    BUILT_IN_PARAMETRIC = "built_in_parametric"


@dataclass(frozen=True)
class ReferenceSpectrum:
    """Electronic-grade diamond absorption used as offset and baseline."""

    spectrum: Spectrum
    origin: ReferenceOrigin = ReferenceOrigin.USER_FILE

    def __post_init__(self):
        if not self.spectrum.quantity.is_absorption:
            raise InvalidSpectrum("reference must be an absorption spectrum")
        if self.spectrum.values.min() < 0:
            raise InvalidSpectrum("reference absorption must be non-negative")
        object.__setattr__(self, "origin", ReferenceOrigin(self.origin))

    @property
    def convention(self) -> Convention:
        return self.spectrum.convention

    def on_grid(self, grid) -> np.ndarray:
        grid = np.asarray(grid, dtype=np.float64)
        lo, hi = self.spectrum.span
        if grid.size and (grid[0] < lo or grid[-1] > hi):
            raise GridOutOfRange(
                f"reference covers [{lo:g}, {hi:g}] nm but grid spans "
                f"[{grid[0]:g}, {grid[-1]:g}] nm"
            )
        return interp_values(self.spectrum, grid)

    def scaled(self, factor: float) -> "ReferenceSpectrum":
        return ReferenceSpectrum(self.spectrum.scaled(factor), self.origin)


@dataclass(frozen=True)
class EdgeParams:
    """Logistic absorption edge ``height / (1 + exp((lam - edge) / width)) + floor``."""

    edge_nm: float = 230.0
    width_nm: float = 3.0
    height: float = 20.0
    floor: float = 0.0

    @classmethod
    def from_env(cls, var: str = "NSFIT_BUILTIN_REF_PARAMS") -> "EdgeParams":
        raw = os.environ.get(var, "").strip()
        if not raw:
            return cls()
        try:
            fields = [float(x) for x in raw.split(",")]
        except ValueError as exc:
            raise ValueError(f"{var} must be comma-separated numbers: {raw!r}") from exc
        if len(fields) != 4:
            raise ValueError(f"{var} needs 4 values (edge,width,height,floor), got {raw!r}")
        return cls(*fields)


def builtin_reference(
    grid=None,
    params: EdgeParams | None = None,
    convention: Convention = Convention.DECADIC,
) -> ReferenceSpectrum:
    """Parametric stand-in for a measured electronic-grade reference.

    The edge parameters are read as decadic coefficients; asking for the
    natural convention rescales them by ln 10. Defaults come from
    ``NSFIT_BUILTIN_REF_PARAMS`` when set.
    """
    if params is None:
        params = EdgeParams.from_env()
    if params.width_nm <= 0 or params.height < 0 or params.floor < 0:
        raise ValueError(f"invalid reference edge parameters: {params}")
    if grid is None:
        grid = np.arange(190.0, 1000.0 + 0.5, 0.5)
    grid = np.asarray(grid, dtype=np.float64)
    z = np.clip((grid - params.edge_nm) / params.width_nm, -700.0, 700.0)
    values = params.height / (1.0 + np.exp(z)) + params.floor
    spec = Spectrum(grid, values, Quantity.ABSORPTION_DECADIC)
    if Convention(convention) is Convention.NATURAL:
        from .spectrum import convert_convention

        spec = convert_convention(spec, Convention.NATURAL)
    return ReferenceSpectrum(spec, ReferenceOrigin.BUILT_IN_PARAMETRIC)


def eval_gaussian(band: GaussianBand, wavelength_nm):
    lam = np.asarray(wavelength_nm, dtype=np.float64)
    u = (lam - band.center_b) / band.width_c
    out = band.amplitude_a * np.exp(-0.5 * u * u)
    return float(out) if out.ndim == 0 else out


def eval_ramp(R: float, wavelength_nm):
    lam = np.asarray(wavelength_nm, dtype=np.float64)
    out = R / lam**3
    return float(out) if out.ndim == 0 else out


def _prepare(params: ModelParams, grid, ref: ReferenceSpectrum):
    grid = np.ascontiguousarray(grid, dtype=np.float64)
    ref_vals = np.ascontiguousarray(ref.on_grid(grid))
    return params.to_vector(), grid, ref_vals, len(params.bands)


def eval_model(params: ModelParams, grid, ref: ReferenceSpectrum) -> np.ndarray:
    p, grid, ref_vals, n_bands = _prepare(params, grid, ref)
    return kernels.model_values(p, grid, ref_vals, n_bands)


def jacobian(params: ModelParams, grid, ref: ReferenceSpectrum) -> np.ndarray:
    """Analytic partial derivatives, columns ordered as :func:`param_names`."""
    p, grid, ref_vals, n_bands = _prepare(params, grid, ref)
    return kernels.model_and_jacobian(p, grid, ref_vals, n_bands)[1]


def components(params: ModelParams, grid, ref: ReferenceSpectrum) -> dict[str, np.ndarray]:
    """Each additive term of the model on ``grid``; absent bands are zeros."""
    grid = np.asarray(grid, dtype=np.float64)
    zeros = np.zeros_like(grid)
    out = {
        "g270": eval_gaussian(params.g270, grid),
        "g360": eval_gaussian(params.g360, grid),
        "g520": eval_gaussian(params.g520, grid) if params.g520 is not None else zeros,
        "ramp": eval_ramp(params.ramp_R, grid),
        "offset": params.ref_weight * ref.on_grid(grid),
    }
    return out
