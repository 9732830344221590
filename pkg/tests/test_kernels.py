"""Parity between the compiled accumulation kernels and the pure fallback."""

import math
import os
import subprocess
import sys

import numpy as np
import pytest
from scipy.special import jv

from birefocus import _kernels_py, kernels


def _have_compiled():
    try:
        from birefocus import _kernels  # noqa: F401
    except ImportError:
        return False
    return True


needs_ext = pytest.mark.skipif(
    not _have_compiled(), reason="compiled extension not built"
)


def _random_pupil(rng, n=257):
    theta = np.sort(rng.uniform(0.01, 0.45, size=n))
    x_scale = np.sin(theta) * 8.9
    w = rng.uniform(0.1, 1.0, size=n)
    cos_f = np.cos(theta / 1.7)
    sin_f = np.sin(theta / 1.7)
    g_o = np.exp(1j * rng.uniform(-3.0, 3.0, size=n))
    g_e = np.exp(1j * rng.uniform(-3.0, 3.0, size=n))
    return x_scale, w, cos_f, sin_f, g_o, g_e


def test_pure_radial_sums_against_direct_loop():
    rng = np.random.default_rng(42)
    x_scale, w, cos_f, sin_f, g_o, g_e = _random_pupil(rng, n=64)
    r = np.array([0.0, 0.31, 1.7])
    out = _kernels_py.radial_sums(x_scale, w, cos_f, sin_f, g_o, g_e, r)
    assert out.shape == (3, 5)
    for k, rk in enumerate(r):
        x = x_scale * rk
        expect = [
            np.sum(w * g_o * jv(0, x)),
            np.sum(w * cos_f * g_e * jv(0, x)),
            np.sum(w * sin_f * g_e * jv(1, x)),
            np.sum(w * g_o * jv(2, x)),
            np.sum(w * cos_f * g_e * jv(2, x)),
        ]
        np.testing.assert_allclose(out[k], expect, rtol=1e-11, atol=1e-13)


def test_pure_axial_sums_against_direct_loop():
    rng = np.random.default_rng(43)
    n = 96
    w = rng.uniform(0.1, 1.0, size=n)
    cos_f = rng.uniform(0.8, 1.0, size=n)
    base_o = np.exp(1j * rng.uniform(-2.0, 2.0, size=n))
    base_e = np.exp(1j * rng.uniform(-2.0, 2.0, size=n))
    dkz_o = rng.uniform(0.0, 0.4, size=n)
    dkz_e = rng.uniform(0.0, 0.4, size=n)
    z = np.array([-5.0, 0.0, 2.5])
    out = _kernels_py.axial_sums(w, cos_f, base_o, base_e, dkz_o, dkz_e, z)
    assert out.shape == (3, 2)
    for k, zk in enumerate(z):
        expect_o = np.sum(w * base_o * np.exp(1j * zk * dkz_o))
        expect_e = np.sum(w * cos_f * base_e * np.exp(1j * zk * dkz_e))
        np.testing.assert_allclose(out[k, 0], expect_o, rtol=1e-12)
        np.testing.assert_allclose(out[k, 1], expect_e, rtol=1e-12)


def test_j2_series_accurate_at_the_switch():
    # the recurrence loses ~7 digits to cancellation near x = 0 (absolute
    # error stays ~1e-15, which the sums tolerate); the series patch is
    # what keeps the relative error small below the threshold
    eps = 1e-4
    series = _kernels_py._j2_from(
        np.array([0.999999 * eps]),
        jv(0, np.array([0.999999 * eps])),
        jv(1, np.array([0.999999 * eps])),
    )[0]
    assert series == pytest.approx(float(jv(2, 0.999999 * eps)), rel=1e-12)
    recurrence = _kernels_py._j2_from(
        np.array([1.000001 * eps]),
        jv(0, np.array([1.000001 * eps])),
        jv(1, np.array([1.000001 * eps])),
    )[0]
    assert recurrence == pytest.approx(float(jv(2, 1.000001 * eps)), abs=1e-14)
    assert _kernels_py._j2_from(np.zeros(1), np.ones(1), np.zeros(1))[0] == 0.0


def test_radial_sums_chunking_seamless():
    # one long call crosses the chunk boundary; point-by-point calls do not.
    # BLAS may reorder the accumulation between shapes, hence the tolerance.
    rng = np.random.default_rng(44)
    x_scale, w, cos_f, sin_f, g_o, g_e = _random_pupil(rng, n=33)
    r = np.linspace(0.0, 4.0, _kernels_py._CHUNK + 7)
    out = _kernels_py.radial_sums(x_scale, w, cos_f, sin_f, g_o, g_e, r)
    again = np.vstack(
        [
            _kernels_py.radial_sums(x_scale, w, cos_f, sin_f, g_o, g_e, rk)
            for rk in r
        ]
    )
    np.testing.assert_allclose(out, again, rtol=1e-13, atol=1e-14)


@needs_ext
def test_compiled_radial_sums_match_pure():
    from birefocus import _kernels

    rng = np.random.default_rng(45)
    x_scale, w, cos_f, sin_f, g_o, g_e = _random_pupil(rng)
    r = np.linspace(0.0, 6.0, 400)
    a = _kernels.radial_sums(x_scale, w, cos_f, sin_f, g_o, g_e, r)
    b = _kernels_py.radial_sums(x_scale, w, cos_f, sin_f, g_o, g_e, r)
    scale = np.abs(b).max()
    np.testing.assert_allclose(a, b, rtol=0.0, atol=1e-12 * scale)


@needs_ext
def test_compiled_axial_sums_match_pure():
    from birefocus import _kernels

    rng = np.random.default_rng(46)
    n = 256
    w = rng.uniform(0.1, 1.0, size=n)
    cos_f = rng.uniform(0.8, 1.0, size=n)
    base_o = np.exp(1j * rng.uniform(-math.pi, math.pi, size=n))
    base_e = np.exp(1j * rng.uniform(-math.pi, math.pi, size=n))
    dkz_o = rng.uniform(0.0, 0.5, size=n)
    dkz_e = rng.uniform(0.0, 0.5, size=n)
    z = np.linspace(-30.0, 30.0, 1501)
    a = _kernels.axial_sums(w, cos_f, base_o, base_e, dkz_o, dkz_e, z)
    b = _kernels_py.axial_sums(w, cos_f, base_o, base_e, dkz_o, dkz_e, z)
    scale = np.abs(b).max()
    np.testing.assert_allclose(a, b, rtol=0.0, atol=1e-12 * scale)


def test_backend_report_is_consistent():
    assert kernels.BACKEND in ("compiled", "python")
    if _have_compiled():
        assert kernels.BACKEND == "compiled"
    assert kernels.radial_sums is not None
    assert kernels.axial_sums is not None


def test_pure_python_env_override():
    code = (
        "from birefocus import kernels\n"
        "print(kernels.BACKEND)\n"
    )
    env = dict(os.environ, BIREFOCUS_PURE="1")
    out = subprocess.run(
        [sys.executable, "-c", code], env=env, capture_output=True, text=True
    )
    assert out.returncode == 0, out.stderr
    assert out.stdout.strip() == "python"


def test_deterministic_across_calls():
    rng = np.random.default_rng(47)
    x_scale, w, cos_f, sin_f, g_o, g_e = _random_pupil(rng)
    r = np.linspace(0.0, 3.0, 64)
    a = kernels.radial_sums(x_scale, w, cos_f, sin_f, g_o, g_e, r)
    b = kernels.radial_sums(x_scale, w, cos_f, sin_f, g_o, g_e, r)
    np.testing.assert_array_equal(a, b)
