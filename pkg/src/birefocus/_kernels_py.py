"""Vectorized fallback for the focal-field accumulation sums.

Same contract as the compiled extension; see kernels.py for selection.
Point blocks are chunked so the (points x rings) Bessel workspaces stay a
few megabytes regardless of grid size.
"""

from __future__ import annotations

import numpy as np
from scipy.special import j0, j1

_CHUNK = 4096
_SMALL_X = 1e-4


def _j2_from(x: np.ndarray, j0x: np.ndarray, j1x: np.ndarray) -> np.ndarray:
    """J2 by downward recurrence, with a series patch near x = 0."""
    out = np.empty_like(x)
    small = np.abs(x) < _SMALL_X
    xs = x[small]
    x2 = xs * xs
    out[small] = x2 / 8.0 * (1.0 - x2 / 12.0)
    big = ~small
    out[big] = 2.0 * j1x[big] / x[big] - j0x[big]
    return out


def radial_sums(x_scale, w, cos_f, sin_f, g_o, g_e, r):
    """Quadrature sums of the five radial field integrals.

    Per lateral radius r[k] (with x = x_scale * r the Bessel argument):
    columns are C0o, C0e, C1e, C2o, C2e where
      C0o = sum w g_o J0,  C0e = sum w cos_f g_e J0,
      C1e = sum w sin_f g_e J1,
      C2o = sum w g_o J2,  C2e = sum w cos_f g_e J2.
    """
    x_scale = np.ascontiguousarray(x_scale, dtype=float)
    r = np.atleast_1d(np.asarray(r, dtype=float))
    w_o = np.asarray(w) * np.asarray(g_o)
    w_ec = np.asarray(w) * np.asarray(cos_f) * np.asarray(g_e)
    w_es = np.asarray(w) * np.asarray(sin_f) * np.asarray(g_e)
    out = np.empty((r.size, 5), dtype=complex)
    for start in range(0, r.size, _CHUNK):
        block = r[start:start + _CHUNK]
        x = block[:, None] * x_scale[None, :]
        j0x = j0(x)
        j1x = j1(x)
        j2x = _j2_from(x, j0x, j1x)
        sl = slice(start, start + block.size)
        out[sl, 0] = j0x @ w_o
        out[sl, 1] = j0x @ w_ec
        out[sl, 2] = j1x @ w_es
        out[sl, 3] = j2x @ w_o
        out[sl, 4] = j2x @ w_ec
    return out


def axial_sums(w, cos_f, base_o, base_e, dkz_o, dkz_e, z):
    """On-axis amplitudes versus focal displacement z (columns C0o, C0e).

    dkz_* is the phase slope in rad per unit z; base_* carries the static
    pupil phase of each mode.
    """
    z = np.atleast_1d(np.asarray(z, dtype=float))
    w_o = np.asarray(w) * np.asarray(base_o)
    w_ec = np.asarray(w) * np.asarray(cos_f) * np.asarray(base_e)
    out = np.empty((z.size, 2), dtype=complex)
    for start in range(0, z.size, _CHUNK):
        block = z[start:start + _CHUNK]
        sl = slice(start, start + block.size)
        out[sl, 0] = np.exp(1j * block[:, None] * np.asarray(dkz_o)[None, :]) @ w_o
        out[sl, 1] = np.exp(1j * block[:, None] * np.asarray(dkz_e)[None, :]) @ w_ec
    return out
