"""Synthetic spectra with known parameters, used as the fitter's test oracle."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import GaussianBand, ModelParams, ReferenceSpectrum, builtin_reference, eval_gaussian, eval_model
from .spectrum import Convention, Spectrum, to_transmission

DEFAULT_GRID = np.arange(200.0, 801.0, 1.0)


@dataclass(frozen=True)
class SynthSpec:
    truth: ModelParams
    ref: ReferenceSpectrum = field(default_factory=builtin_reference)
    grid: np.ndarray = field(default_factory=lambda: DEFAULT_GRID.copy())
    noise_sigma: float = 0.0
    rng_seed: int = 0
    extra_bands: tuple[GaussianBand, ...] = ()

    def __post_init__(self):
        grid = np.array(self.grid, dtype=np.float64)
        if grid.ndim != 1 or grid.size < 2 or np.any(np.diff(grid) <= 0):
            raise ValueError("grid must be strictly increasing with at least two points")
        if not self.noise_sigma >= 0:
            raise ValueError(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        grid.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "extra_bands", tuple(self.extra_bands))


def generate_absorption(s: SynthSpec) -> Spectrum:
    """Model + contaminant bands + seeded white noise, in the reference's convention."""
    values = eval_model(s.truth, s.grid, s.ref)
    for band in s.extra_bands:
        values = values + eval_gaussian(band, s.grid)
    if s.noise_sigma > 0:
        rng = np.random.default_rng(s.rng_seed)
        values = values + rng.normal(0.0, s.noise_sigma, size=s.grid.size)
    return Spectrum(s.grid, values, s.ref.convention.quantity)


def generate_transmission(
    s: SynthSpec, thickness_cm: float, convention: Convention = Convention.DECADIC
) -> Spectrum:
    """Transmission fraction of a plate whose absorption is ``generate_absorption(s)``.

    ``convention`` states how the synthetic absorption values are to be read,
    i.e. ``10**(-A d)`` for decadic and ``exp(-A d)`` for natural.
    """
    absorption = generate_absorption(s)
    quantity = Convention(convention).quantity
    return to_transmission(absorption.with_values(absorption.values, quantity), thickness_cm)


def random_truth(rng: np.random.Generator, five_component: bool = True) -> ModelParams:
    """Draw physically plausible parameters strictly inside the default bounds."""
    g270 = GaussianBand(rng.uniform(1.0, 40.0), rng.uniform(269.0, 271.0), rng.uniform(16.0, 24.0))
    g360 = GaussianBand(rng.uniform(0.5, 10.0), rng.uniform(350.0, 370.0), rng.uniform(30.0, 60.0))
    g520 = GaussianBand(rng.uniform(0.2, 5.0), rng.uniform(505.0, 535.0), rng.uniform(30.0, 70.0))
    ramp_at_200 = rng.uniform(0.5, 5.0)
    return ModelParams(
        g270=g270,
        g360=g360,
        g520=g520 if five_component else None,
        ramp_R=ramp_at_200 * 200.0**3,
        ref_weight=rng.uniform(0.5, 2.0),
    )


