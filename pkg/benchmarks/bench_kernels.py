"""Time the compiled and numpy model kernels, then a full fit with each.

Run with ``python3 benchmarks/bench_kernels.py``. The numpy backend is always
available; the compiled one only if the extension was built.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from nsfit import _kernels_py
from nsfit import fitter, kernels
from nsfit.model import builtin_reference
from nsfit.synth import DEFAULT_GRID, SynthSpec, generate_absorption, random_truth

try:
    from nsfit import _kernels_cy
except ImportError:
    _kernels_cy = None


def backends():
    out = {"numpy": _kernels_py}
    if _kernels_cy is not None:
        out["cython"] = _kernels_cy
    return out


def best_of(fn, number, repeat):
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def bench_kernel(mod, p, grid, ref, number, repeat):
    return (
        best_of(lambda: mod.model_values(p, grid, ref, 3), number, repeat),
        best_of(lambda: mod.model_and_jacobian(p, grid, ref, 3), number, repeat),
    )


def bench_fit(mod, spectra, ref, repeat):
    # the fitter looks the kernel up through ``kernels`` at call time
    saved = kernels.model_and_jacobian
    kernels.model_and_jacobian = mod.model_and_jacobian
    try:
        return best_of(lambda: [fitter.fit(s, ref) for s in spectra], 1, repeat) / len(spectra)
    finally:
        kernels.model_and_jacobian = saved


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--number", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--fits", type=int, default=20)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(0)
    ref = builtin_reference()
    grid = np.asarray(DEFAULT_GRID, dtype=np.float64)
    ref_vals = ref.on_grid(grid)
    p = random_truth(rng).to_vector()
    spectra = [
        generate_absorption(SynthSpec(random_truth(rng), ref, DEFAULT_GRID))
        for _ in range(args.fits)
    ]

    print(f"grid points: {grid.size}; active backend: {kernels.BACKEND}")
    print(f"{'backend':<8} {'model (us)':>11} {'model+jac (us)':>15} {'fit (ms)':>9}")
    for name, mod in backends().items():
        t_model, t_jac = bench_kernel(mod, p, grid, ref_vals, args.number, args.repeat)
        t_fit = bench_fit(mod, spectra, ref, args.repeat)
        print(f"{name:<8} {t_model * 1e6:>11.1f} {t_jac * 1e6:>15.1f} {t_fit * 1e3:>9.2f}")


if __name__ == "__main__":
    main()
