"""Numpy implementation of the model kernels (fallback for the Cython build)."""

import numpy as np


def model_values(p, grid, ref, n_bands):
    out = p[3 * n_bands] / grid**3 + p[3 * n_bands + 1] * ref
    for k in range(n_bands):
        a, b, c = p[3 * k : 3 * k + 3]
        out = out + a * np.exp(-0.5 * ((grid - b) / c) ** 2)
    return out


def model_and_jacobian(p, grid, ref, n_bands):
    """Return the summed model and its Jacobian with respect to ``p``.

    Column layout is ``[a, b, c] * n_bands + [R, ref_weight]``.
    """
    grid = np.asarray(grid, dtype=np.float64)
    n = grid.size
    jac = np.empty((n, 3 * n_bands + 2), dtype=np.float64)
    inv_cube = 1.0 / grid**3
    r_col = 3 * n_bands
    out = p[r_col] * inv_cube + p[r_col + 1] * ref
    for k in range(n_bands):
        a, b, c = p[3 * k : 3 * k + 3]
        u = (grid - b) / c
        e = np.exp(-0.5 * u * u)
        g = a * e
        out = out + g
        jac[:, 3 * k] = e
        jac[:, 3 * k + 1] = g * u / c
        jac[:, 3 * k + 2] = g * u * u / c
    jac[:, r_col] = inv_cube
    jac[:, r_col + 1] = ref
    return out, jac
