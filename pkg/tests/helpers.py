import dataclasses
import warnings

import numpy as np

from nsfit.fitter import fit
from nsfit.model import GaussianBand


def max_rel_error(fitted, truth):
    f, t = fitted.to_vector(), truth.to_vector()
    return float(np.max(np.abs(f - t) / np.abs(t)))


def with_center_270(truth, center):
    g = truth.g270
    return dataclasses.replace(truth, g270=GaussianBand(g.amplitude_a, center, g.width_c))


def quiet_fit(*args, **kwargs):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return fit(*args, **kwargs)
