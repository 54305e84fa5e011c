"""Independent reference computations used by the tests."""

import math

import numpy as np

from nsfit.model import ModelParams, eval_model


def brute_force_model(params: ModelParams, grid, ref_values):
    """Point-by-point evaluation with the math module only."""
    out = []
    for lam, e in zip(grid, ref_values):
        total = params.ramp_R / lam**3 + params.ref_weight * e
        for band in params.bands:
            total += band.amplitude_a * math.exp(
                -((lam - band.center_b) ** 2) / (2.0 * band.width_c**2)
            )
        out.append(total)
    return np.array(out)


def central_difference_jacobian(params: ModelParams, grid, ref, rel_step=1e-6):
    """Columns by central differences of ``eval_model``, step scaled per parameter."""
    p = params.to_vector()
    cols = []
    for i, v in enumerate(p):
        h = rel_step * max(abs(v), 1e-3)
        up, down = p.copy(), p.copy()
        up[i] += h
        down[i] -= h
        f_up = eval_model(ModelParams.from_vector(up), grid, ref)
        f_down = eval_model(ModelParams.from_vector(down), grid, ref)
        cols.append((f_up - f_down) / (2 * h))
    return np.column_stack(cols)


def max_column_rel_error(analytic, numeric):
    scale = np.max(np.abs(numeric), axis=0)
    scale[scale == 0] = 1.0
    return float(np.max(np.max(np.abs(analytic - numeric), axis=0) / scale))
