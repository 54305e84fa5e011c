"""Box-constrained least-squares decomposition of an absorption spectrum.

The solver is a projected Levenberg-Marquardt iteration: parameters sitting
on a bound whose gradient points outward are frozen for the step, the
remaining ones take a damped Gauss-Newton step in column-normalised
coordinates, and the trial point is clipped back into the box.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from types import MappingProxyType

import numpy as np
from scipy.linalg import solve_triangular
from scipy.optimize import nnls

from . import kernels
from .errors import (
    ConventionMismatch,
    DegenerateInput,
    DidNotConverge,
    EmptyResult,
    NotAbsorption,
    WindowTooNarrow,
)
from .model import GaussianBand, ModelParams, ReferenceSpectrum, param_names
from .spectrum import Convention, Spectrum, crop

CUTOFF_NM = 650.0

DEFAULT_BOUNDS = MappingProxyType({
    "a270": (0.0, math.inf),
    "b270": (268.0, 272.0),
    "c270": (13.0, 27.0),
    "a360": (0.0, math.inf),
    "b360": (340.0, 380.0),
    "c360": (20.0, 80.0),
    "a520": (0.0, math.inf),
    "b520": (490.0, 550.0),
    "c520": (20.0, 90.0),
    "R": (0.0, math.inf),
    "ref_weight": (0.0, math.inf),
})

# nominal (center, width) of each band, and widths tried for the starting point
NOMINAL_SHAPES = {"270": (270.0, 20.0), "360": (360.0, 40.0), "520": (520.0, 40.0)}
CANDIDATE_CENTERS = {
    "270": (268.5, 269.25, 270.0, 270.75, 271.5),
    "360": (345.0, 352.5, 360.0, 367.5, 375.0),
    "520": (495.0, 507.5, 520.0, 532.5, 545.0),
}
CANDIDATE_WIDTHS = {
    "270": (14.0, 17.0, 20.0, 23.0, 26.0),
    "360": (25.0, 32.0, 40.0, 50.0, 62.0, 76.0),
    "520": (25.0, 32.0, 40.0, 50.0, 62.0, 76.0),
}

_ROUNDOFF_RSS = (64 * np.finfo(float).eps) ** 2


class FitMode(str, enum.Enum):
    FIVE_COMPONENT = "five"
    FOUR_COMPONENT = "four"


@dataclass(frozen=True)
class FitConfig:
    mode: FitMode = FitMode.FIVE_COMPONENT
    fit_window_nm: tuple[float, float] = (200.0, 800.0)
    cutoff_650: bool = False
    bounds: dict = field(default_factory=lambda: dict(DEFAULT_BOUNDS))
    max_iterations: int = 200
    step_tolerance: float = 1e-10
    residual_tolerance: float = 1e-12
    boundary_epsilon: float = 1e-6

    def __post_init__(self):
        object.__setattr__(self, "mode", FitMode(self.mode))
        merged = dict(DEFAULT_BOUNDS)
        merged.update({k: (float(v[0]), float(v[1])) for k, v in dict(self.bounds).items()})
        unknown = set(merged) - set(DEFAULT_BOUNDS)
        if unknown:
            raise ValueError(f"unknown parameters in bounds: {sorted(unknown)}")
        for name, (lo, hi) in merged.items():
            if not lo < hi:
                raise ValueError(f"bounds for {name} must satisfy lo < hi, got ({lo}, {hi})")
        object.__setattr__(self, "bounds", MappingProxyType(merged))
        lo, hi = self.fit_window_nm
        if not lo < hi:
            raise ValueError(f"fit window must satisfy lo < hi, got {self.fit_window_nm}")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")

    @property
    def five_component(self) -> bool:
        return self.mode is FitMode.FIVE_COMPONENT

    @property
    def window(self) -> tuple[float, float]:
        lo, hi = self.fit_window_nm
        if self.cutoff_650:
            hi = min(hi, CUTOFF_NM)
        return float(lo), float(hi)

    @property
    def names(self) -> tuple[str, ...]:
        return param_names(self.five_component)

    def bound_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        lo = np.array([self.bounds[n][0] for n in self.names])
        hi = np.array([self.bounds[n][1] for n in self.names])
        return lo, hi


@dataclass(frozen=True)
class FitResult:
    params: ModelParams
    converged: bool
    iterations: int
    rss: float
    rmse: float
    boundary_hits: tuple[tuple[str, str], ...]
    mu270: float
    reliable: bool
    convention: Convention
    window: tuple[float, float]
    n_points: int
    initial: ModelParams
    bounds: MappingProxyType

    def hit(self, name: str) -> bool:
        return any(n == name for n, _ in self.boundary_hits)


def _window_data(spec: Spectrum, ref: ReferenceSpectrum, config: FitConfig):
    if not spec.quantity.is_absorption:
        raise NotAbsorption(
            f"fit needs an absorption spectrum, got {spec.quantity.value}; convert first"
        )
    if ref.convention is not spec.convention:
        raise ConventionMismatch(
            f"spectrum is {spec.convention.value} but reference is {ref.convention.value}"
        )
    lo, hi = config.window
    try:
        windowed = crop(spec, lo, hi)
    except EmptyResult as exc:
        raise WindowTooNarrow(str(exc)) from exc
    wl = windowed.wavelengths_nm
    anchors = ["270", "360"] + (["520"] if config.five_component else [])
    missing = [k for k in anchors if not wl[0] <= NOMINAL_SHAPES[k][0] <= wl[-1]]
    if missing:
        raise WindowTooNarrow(
            f"window [{wl[0]:g}, {wl[-1]:g}] nm lacks anchor wavelengths "
            + ", ".join(f"{k} nm" for k in missing)
        )
    ref_vals = np.ascontiguousarray(ref.on_grid(wl))
    return windowed, ref_vals


def _guess_vector(grid, data, ref_vals, config: FitConfig) -> np.ndarray:
    lo, hi = config.bound_arrays()
    keys = ["270", "360"] + (["520"] if config.five_component else [])
    shapes, offsets, nominal = [], [], []
    columns = [grid**-3.0, ref_vals]
    for i, k in enumerate(keys):
        b_lo, b_hi = lo[3 * i + 1], hi[3 * i + 1]
        c_lo, c_hi = lo[3 * i + 2], hi[3 * i + 2]
        band = sorted({
            (float(np.clip(b, b_lo, b_hi)), float(np.clip(c, c_lo, c_hi)))
            for b in CANDIDATE_CENTERS[k] for c in CANDIDATE_WIDTHS[k]
        })
        offsets.append(len(columns))
        columns += [np.exp(-0.5 * ((grid - b) / c) ** 2) for b, c in band]
        nominal.append(band.index(min(band, key=lambda s: _shape_distance(s, NOMINAL_SHAPES[k]))))
        shapes.append(band)
    C = np.column_stack(columns)
    norms = np.linalg.norm(C, axis=0)
    norms[norms == 0] = 1.0
    C = C / norms
    # every trial reuses the Gram matrix of all candidate columns
    gram = C.T @ C
    cty = C.T @ data
    yty = float(data @ data)
    ridge = 1e-12 * np.eye(len(keys) + 2)

    def solve(choice):
        ix = [offsets[j] + c for j, c in enumerate(choice)] + [0, 1]
        L = np.linalg.cholesky(gram[np.ix_(ix, ix)] + ridge)
        z = solve_triangular(L, cty[ix], lower=True)
        coef, rnorm = nnls(L.T, z)
        return yty - float(z @ z) + rnorm**2, coef / norms[ix]

    # coordinate search over band shapes; amplitudes, ramp and reference
    # weight come from a non-negative linear solve at each trial
    choice = list(nominal)
    best_r, best_coef = solve(choice)
    # ties within roundoff keep the earlier choice
    tie = 1e-10 * yty
    for _ in range(2):
        improved = False
        for j, band in enumerate(shapes):
            for c in range(len(band)):
                if c == choice[j]:
                    continue
                trial = choice[:j] + [c] + choice[j + 1:]
                r, coef = solve(trial)
                if r < best_r - tie:
                    best_r, best_coef, choice, improved = r, coef, trial, True
        if not improved:
            break
    scale = float(np.max(np.abs(data))) if data.size else 0.0
    floor = 1e-3 * scale if scale > 0 else 1e-12
    vec = []
    for j, band in enumerate(shapes):
        b, c = band[choice[j]]
        vec.extend((max(best_coef[j], floor), b, c))
    vec.extend((best_coef[-2], best_coef[-1]))
    return np.clip(np.array(vec), lo, hi)


def _shape_distance(shape, target):
    return abs(shape[0] - target[0]) + abs(shape[1] - target[1])


def initial_guess(spec: Spectrum, ref: ReferenceSpectrum, config: FitConfig | None = None) -> ModelParams:
    """Deterministic starting point for :func:`fit`.

    Band centres and widths start at their nominal values; amplitudes, ramp
    factor and reference weight come from a non-negative linear solve with
    those shapes held fixed. Band amplitudes are raised to a small positive
    floor so their centre and width stay identifiable.
    """
    config = config or FitConfig()
    windowed, ref_vals = _window_data(spec, ref, config)
    vec = _guess_vector(windowed.wavelengths_nm, windowed.values, ref_vals, config)
    return ModelParams.from_vector(vec)


def _lm_box(residual_jac, p0, lo, hi, max_iter, xtol, ftol, rss_floor):
    """Projected Levenberg-Marquardt. Returns (p, rss, iterations, converged)."""
    p = np.clip(p0, lo, hi)
    f, J = residual_jac(p)
    rss = float(f @ f)
    mu = 1e-3
    nu = 2.0
    if rss <= rss_floor:
        return p, rss, 0, True
    for it in range(1, max_iter + 1):
        g = J.T @ f
        pinned = ((p <= lo) & (g > 0)) | ((p >= hi) & (g < 0))
        free = ~pinned
        if not np.any(free):
            return p, rss, it, True
        Jf = J[:, free]
        d = np.linalg.norm(Jf, axis=0)
        d[d == 0] = 1.0
        Js = Jf / d
        k = Js.shape[1]
        aug = np.vstack([Js, math.sqrt(mu) * np.eye(k)])
        rhs = np.concatenate([-f, np.zeros(k)])
        step_s = np.linalg.lstsq(aug, rhs, rcond=None)[0]
        step = np.zeros_like(p)
        step[free] = step_s / d
        trial = np.clip(p + step, lo, hi)
        delta = trial - p

        lin = f + J @ delta
        predicted = rss - float(lin @ lin)
        f_new, J_new = residual_jac(trial)
        rss_new = float(f_new @ f_new)
        actual = rss - rss_new

        scaled_step = np.linalg.norm(delta[free] * d)
        scaled_p = np.linalg.norm(p[free] * d)

        if predicted > 0 and actual > 0:
            rho = actual / predicted
            p, f, J, rss = trial, f_new, J_new, rss_new
            mu *= max(1.0 / 3.0, 1.0 - (2.0 * rho - 1.0) ** 3)
            nu = 2.0
            if rss <= rss_floor:
                return p, rss, it, True
            if actual <= ftol * (rss + actual) and predicted <= ftol * (rss + actual):
                return p, rss, it, True
        else:
            mu *= nu
            nu *= 2.0
        if scaled_step <= xtol * (scaled_p + xtol):
            return p, rss, it, True
    return p, rss, max_iter, False


def _boundary_hits(p, names, lo, hi, eps):
    hits = []
    for name, v, l, h in zip(names, p, lo, hi):
        tol = eps * (h - l) if math.isfinite(h - l) else 0.0
        if v - l <= tol:
            hits.append((name, "lower"))
        elif h - v <= tol:
            hits.append((name, "upper"))
    return tuple(hits)


def fit(
    spec: Spectrum,
    ref: ReferenceSpectrum,
    config: FitConfig | None = None,
    init: ModelParams | None = None,
) -> FitResult:
    """Fit the component model to ``spec`` inside the configured window.

    Residuals are unweighted. A fit that exhausts ``max_iterations`` is
    returned with ``converged=False`` and a :class:`DidNotConverge` warning.
    """
    config = config or FitConfig()
    windowed, ref_vals = _window_data(spec, ref, config)
    grid = np.ascontiguousarray(windowed.wavelengths_nm)
    data = np.ascontiguousarray(windowed.values)
    names = config.names
    n_bands = 3 if config.five_component else 2
    if grid.size < len(names):
        raise DegenerateInput(
            f"{grid.size} points in window but {len(names)} parameters to fit"
        )
    lo, hi = config.bound_arrays()
    if init is None:
        p0 = _guess_vector(grid, data, ref_vals, config)
    else:
        if init.five_component and not config.five_component:
            init = init.four_component()
        elif config.five_component and not init.five_component:
            b, c = NOMINAL_SHAPES["520"]
            init = init.with_g520(GaussianBand(0.0, b, c))
        p0 = np.clip(init.to_vector(), lo, hi)

    def residual_jac(p):
        model, jac = kernels.model_and_jacobian(p, grid, ref_vals, n_bands)
        return model - data, jac

    rss_floor = _ROUNDOFF_RSS * float(data @ data)
    p, rss, iterations, converged = _lm_box(
        residual_jac, p0, lo, hi,
        config.max_iterations, config.step_tolerance, config.residual_tolerance, rss_floor,
    )
    if not converged:
        warnings.warn(
            f"fit stopped after {iterations} iterations without meeting tolerance",
            DidNotConverge,
            stacklevel=2,
        )
    hits = _boundary_hits(p, names, lo, hi, config.boundary_epsilon)
    shape_hit = any(n in ("b270", "c270") for n, _ in hits)
    params = ModelParams.from_vector(p)
    return FitResult(
        params=params,
        converged=converged,
        iterations=iterations,
        rss=rss,
        rmse=math.sqrt(rss / grid.size),
        boundary_hits=hits,
        mu270=params.g270.amplitude_a,
        reliable=converged and not shape_hit,
        convention=spec.convention,
        window=(float(grid[0]), float(grid[-1])),
        n_points=int(grid.size),
        initial=ModelParams.from_vector(p0),
        bounds=config.bounds,
    )


def residual_spectrum(spec: Spectrum, result: FitResult, ref: ReferenceSpectrum) -> Spectrum:
    """Data minus model over the window the result was fitted on."""
    windowed = crop(spec, *result.window)
    grid = np.ascontiguousarray(windowed.wavelengths_nm)
    ref_vals = np.ascontiguousarray(ref.on_grid(grid))
    p = result.params.to_vector()
    model = kernels.model_values(p, grid, ref_vals, len(result.params.bands))
    return windowed.with_values(windowed.values - model)
