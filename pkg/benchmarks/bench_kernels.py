#!/usr/bin/env python3
"""Time the compiled focal-field kernels against the numpy fallback.

Builds one realistic pupil (1 mm sapphire, NA 0.45, 442 nm) and times
radial_sums and axial_sums at a few problem sizes with both backends.
Each row also reports the worst relative disagreement between the two,
which should sit at rounding level (BLAS and the extension accumulate
in different orders, so bitwise equality is not expected).

Usage: python3 benchmarks/bench_kernels.py [--rings 256] [--repeats 5]
"""

import argparse
import time

import numpy as np

from birefocus import _kernels_py, psf
from birefocus.birefringence import Layer, LayerStack
from birefocus.materials import builtin_catalog
from birefocus.wavefront import FocusingConfig

try:
    from birefocus import _kernels
except ImportError:
    _kernels = None


def best_of(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def rel_diff(a, b):
    scale = max(float(np.abs(a).max()), float(np.abs(b).max()), 1e-300)
    return float(np.abs(a - b).max()) / scale


def radial_args(pupil, n_r):
    r = np.linspace(0.0, 2.5, n_r)
    g_o = pupil.base_o * np.exp(1j * 1.3 * pupil.dkz_o)
    g_e = pupil.base_e * np.exp(1j * 1.3 * pupil.dkz_e)
    return (
        np.ascontiguousarray(pupil.k0 * pupil.s),
        np.ascontiguousarray(pupil.weights),
        np.ascontiguousarray(pupil.cos_f),
        np.ascontiguousarray(pupil.sin_f),
        np.ascontiguousarray(g_o, dtype=complex),
        np.ascontiguousarray(g_e, dtype=complex),
        r,
    )


def axial_args(pupil, n_z):
    z = np.linspace(-8.0, 8.0, n_z)
    return (
        pupil.weights,
        pupil.cos_f,
        pupil.base_o,
        pupil.base_e,
        pupil.dkz_o,
        pupil.dkz_e,
        z,
    )


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rings", type=int, default=256)
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()

    cfg = FocusingConfig(
        numerical_aperture=0.45, wavelength_nm=442.0, pupil_rings=args.rings
    )
    stack = LayerStack((Layer(builtin_catalog()["sapphire"], 1.0),))
    pupil = psf.build_pupil(stack, cfg)

    if _kernels is None:
        print("compiled extension not importable; timing the fallback only")
    header = (
        f"{'kernel':<12} {'points':>7} {'rings':>6} {'python ms':>10} "
        f"{'compiled ms':>12} {'speedup':>8} {'max rel diff':>13}"
    )
    print(header)
    print("-" * len(header))

    cases = [("radial_sums", radial_args, (512, 4096, 16384)),
             ("axial_sums", axial_args, (801, 8001, 64001))]
    for name, make_args, sizes in cases:
        for n in sizes:
            call_args = make_args(pupil, n)
            py_fn = getattr(_kernels_py, name)
            ref = py_fn(*call_args)
            t_py = best_of(lambda: py_fn(*call_args), args.repeats)
            if _kernels is None:
                print(f"{name:<12} {n:>7} {args.rings:>6} {1e3 * t_py:>10.3f}")
                continue
            ext_fn = getattr(_kernels, name)
            out = ext_fn(*call_args)
            t_ext = best_of(lambda: ext_fn(*call_args), args.repeats)
            print(
                f"{name:<12} {n:>7} {args.rings:>6} {1e3 * t_py:>10.3f} "
                f"{1e3 * t_ext:>12.3f} {t_py / t_ext:>7.2f}x "
                f"{rel_diff(out, ref):>13.2e}"
            )


if __name__ == "__main__":
    main()
