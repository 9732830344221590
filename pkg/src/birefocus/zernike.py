"""Zernike basis on the unit disk, with a disk quadrature to match.

Modes use the single-index convention j = (n(n+2) + m) / 2 over radial
order n and azimuthal frequency m (m < 0 selects the sine mode). The
mapping for orders up to 12 is also shipped as ``data/zernike_indices.csv``
so downstream files can reference modes without importing this package.

Values are RMS-normalized: the pupil-averaged square of every mode is 1,
so a coefficient is directly the RMS contribution of its mode.

Inner products use Gauss-Legendre nodes in radius crossed with a uniform
azimuthal grid. For band-limited integrands (products of basis modes up to
order 12) this quadrature is exact, which is what makes the discrete
Parseval identity hold to near machine precision rather than to mere
grid-convergence accuracy.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

import numpy as np

from .errors import InputError, NumericalError

MAX_RADIAL_ORDER = 12


def osa_index(n: int, m: int) -> int:
    """Single index of the (n, m) mode."""
    if n < 0 or abs(m) > n or (n - m) % 2:
        raise InputError(f"invalid Zernike orders (n={n}, m={m})")
    return (n * (n + 2) + m) // 2


def osa_orders(j: int) -> tuple[int, int]:
    """Inverse of :func:`osa_index`."""
    if j < 0:
        raise InputError(f"invalid Zernike index {j}")
    n = (math.isqrt(8 * j + 1) - 1) // 2
    m = 2 * j - n * (n + 2)
    return n, m


def mode_count(max_radial_order: int) -> int:
    return (max_radial_order + 1) * (max_radial_order + 2) // 2


_MODE_NAMES = {
    0: "piston",
    1: "tilt-y",
    2: "tilt-x",
    3: "astigmatism-oblique",
    4: "defocus",
    5: "astigmatism-vertical",
    6: "trefoil-vertical",
    7: "coma-vertical",
    8: "coma-horizontal",
    9: "trefoil-oblique",
    12: "spherical-primary",
    24: "spherical-secondary",
}


def index_table(max_radial_order: int = MAX_RADIAL_ORDER):
    """(j, n, m, name) rows for every mode up to the given order."""
    rows = []
    for n in range(max_radial_order + 1):
        for m in range(-n, n + 1, 2):
            j = osa_index(n, m)
            rows.append((j, n, m, _MODE_NAMES.get(j, "")))
    rows.sort()
    return rows


def load_index_table():
    """Read the shipped index-mapping CSV (used by tests as a cross-check)."""
    with resources.files("birefocus.data").joinpath("zernike_indices.csv").open() as fh:
        reader = csv.DictReader(fh)
        return [
            (int(r["index"]), int(r["n"]), int(r["m"]), r["name"])
            for r in reader
        ]


@lru_cache(maxsize=None)
def radial_coefficients(n: int, m_abs: int) -> tuple[int, ...]:
    """Integer coefficients of R_n^|m|, constant term first.

    Entry p is the coefficient of rho**p; odd/even gaps are zeros.
    """
    coeffs = [0] * (n + 1)
    for k in range((n - m_abs) // 2 + 1):
        num = math.factorial(n - k)
        den = (
            math.factorial(k)
            * math.factorial((n + m_abs) // 2 - k)
            * math.factorial((n - m_abs) // 2 - k)
        )
        coeffs[n - 2 * k] = (-1) ** k * (num // den)
    return tuple(coeffs)


def radial_polynomial(n: int, m: int, rho):
    """R_n^|m| evaluated by Horner's rule."""
    rho = np.asarray(rho, dtype=float)
    acc = np.zeros_like(rho)
    for c in reversed(radial_coefficients(n, abs(m))):
        acc = acc * rho + c
    return acc


def normalization(n: int, m: int) -> float:
    return math.sqrt(2.0 * (n + 1) / (2.0 if m == 0 else 1.0))


def zernike_value(n: int, m: int, rho, theta):
    """RMS-normalized mode value at polar pupil coordinates."""
    osa_index(n, m)  # validates the pair
    r = normalization(n, m) * radial_polynomial(n, m, rho)
    if m > 0:
        return r * np.cos(m * np.asarray(theta))
    if m < 0:
        return r * np.sin(-m * np.asarray(theta))
    return r * np.ones_like(np.asarray(theta, dtype=float))


@dataclass(frozen=True)
class DiskGrid:
    """Quadrature grid over the unit disk.

    ``rho`` holds Gauss-Legendre nodes mapped to (0, 1); ``radial_weights``
    already include the rho area factor, so the pupil average of a sampled
    field f[ring, spoke] is ``2/len(theta) * sum_ij w_i f_ij``.
    """

    rho: np.ndarray
    theta: np.ndarray
    radial_weights: np.ndarray

    @classmethod
    def make(cls, n_rings: int, n_spokes: int) -> "DiskGrid":
        if n_rings < 2 or n_spokes < 4:
            raise InputError(
                f"disk grid too coarse: {n_rings} rings x {n_spokes} spokes"
            )
        x, w = np.polynomial.legendre.leggauss(n_rings)
        rho = 0.5 * (x + 1.0)
        theta = 2.0 * np.pi * np.arange(n_spokes) / n_spokes
        return cls(rho=rho, theta=theta, radial_weights=0.5 * w * rho)

    @property
    def n_rings(self) -> int:
        return self.rho.size

    @property
    def n_spokes(self) -> int:
        return self.theta.size

    def average(self, values_2d: np.ndarray) -> float:
        """Pupil-averaged value of a field sampled on this grid."""
        ring_means = np.asarray(values_2d).mean(axis=1)
        return float(2.0 * np.dot(self.radial_weights, ring_means))

    def average_radial(self, values_1d: np.ndarray) -> float:
        return float(2.0 * np.dot(self.radial_weights, np.asarray(values_1d)))


@dataclass(frozen=True)
class ZernikeSpectrum:
    """Coefficients (in the map's units) plus the round-trip residual."""

    coefficients: np.ndarray
    max_radial_order: int
    reconstruction_rms: float
    index_orders: tuple[tuple[int, int], ...] = field(repr=False, default=())

    def coefficient(self, n: int, m: int) -> float:
        j = osa_index(n, m)
        if n > self.max_radial_order:
            raise InputError(
                f"mode (n={n}, m={m}) beyond max order {self.max_radial_order}"
            )
        return float(self.coefficients[j])

    def rms(self, exclude_piston: bool = True) -> float:
        c = self.coefficients[1:] if exclude_piston else self.coefficients
        return float(np.sqrt(np.sum(c * c)))


def _check_order(max_radial_order: int) -> None:
    if not (0 <= max_radial_order <= MAX_RADIAL_ORDER):
        raise InputError(
            f"max radial order {max_radial_order} outside [0, {MAX_RADIAL_ORDER}]"
        )


def _radial_matrix(grid: DiskGrid, max_radial_order: int) -> np.ndarray:
    """normalization * R_n^|m| at the grid radii, one row per mode."""
    rows = []
    for n in range(max_radial_order + 1):
        for m in range(-n, n + 1, 2):
            rows.append((osa_index(n, m), normalization(n, m) *
                         radial_polynomial(n, m, grid.rho)))
    rows.sort(key=lambda t: t[0])
    return np.vstack([r for _, r in rows])


def _trig_matrix(grid: DiskGrid, max_radial_order: int) -> np.ndarray:
    rows = []
    for n in range(max_radial_order + 1):
        for m in range(-n, n + 1, 2):
            if m > 0:
                rows.append((osa_index(n, m), np.cos(m * grid.theta)))
            elif m < 0:
                rows.append((osa_index(n, m), np.sin(-m * grid.theta)))
            else:
                rows.append((osa_index(n, m), np.ones_like(grid.theta)))
    rows.sort(key=lambda t: t[0])
    return np.vstack([r for _, r in rows])


def _orders_tuple(max_radial_order: int) -> tuple[tuple[int, int], ...]:
    return tuple(
        (n, m)
        for n in range(max_radial_order + 1)
        for m in range(-n, n + 1, 2)
    )


def decompose_disk(values_2d: np.ndarray, grid: DiskGrid,
                   max_radial_order: int) -> ZernikeSpectrum:
    """Project a pupil field sampled on ``grid`` onto the basis.

    ``values_2d`` has shape (n_rings, n_spokes).
    """
    _check_order(max_radial_order)
    values = np.asarray(values_2d, dtype=float)
    if values.shape != (grid.n_rings, grid.n_spokes):
        raise InputError(
            f"map shape {values.shape} does not match grid "
            f"({grid.n_rings}, {grid.n_spokes})"
        )
    if not np.isfinite(values).all():
        raise NumericalError("pupil map contains non-finite samples")
    radial = _radial_matrix(grid, max_radial_order)
    trig = _trig_matrix(grid, max_radial_order)
    # c_j = (1/pi) \int W Z_j dA on the quadrature grid
    azim = values @ trig.T / grid.n_spokes          # (rings, modes)
    coeffs = 2.0 * np.sum(radial * grid.radial_weights * azim.T, axis=1)
    recon = (radial.T * coeffs) @ trig
    err2 = grid.average((values - recon) ** 2)
    return ZernikeSpectrum(
        coefficients=np.asarray(coeffs, dtype=float),
        max_radial_order=max_radial_order,
        reconstruction_rms=math.sqrt(max(err2, 0.0)),
        index_orders=_orders_tuple(max_radial_order),
    )


def decompose_radial(values_1d: np.ndarray, grid: DiskGrid,
                     max_radial_order: int) -> ZernikeSpectrum:
    """Decompose a rotationally symmetric profile W(rho).

    Only m = 0 coefficients can be nonzero; the returned spectrum still
    spans all modes so its indexing matches :func:`decompose_disk`.
    """
    _check_order(max_radial_order)
    values = np.asarray(values_1d, dtype=float)
    if values.shape != (grid.n_rings,):
        raise InputError(
            f"profile length {values.shape} does not match grid ({grid.n_rings},)"
        )
    if not np.isfinite(values).all():
        raise NumericalError("radial profile contains non-finite samples")
    coeffs = np.zeros(mode_count(max_radial_order))
    recon = np.zeros_like(values)
    for n in range(0, max_radial_order + 1, 2):
        zn = normalization(n, 0) * radial_polynomial(n, 0, grid.rho)
        c = 2.0 * np.dot(grid.radial_weights, values * zn)
        coeffs[osa_index(n, 0)] = c
        recon += c * zn
    err2 = grid.average_radial((values - recon) ** 2)
    return ZernikeSpectrum(
        coefficients=coeffs,
        max_radial_order=max_radial_order,
        reconstruction_rms=math.sqrt(max(err2, 0.0)),
        index_orders=_orders_tuple(max_radial_order),
    )


def reconstruct_disk(spectrum: ZernikeSpectrum, grid: DiskGrid) -> np.ndarray:
    """Evaluate the modal sum back onto a grid; shape (n_rings, n_spokes)."""
    radial = _radial_matrix(grid, spectrum.max_radial_order)
    trig = _trig_matrix(grid, spectrum.max_radial_order)
    return (radial.T * spectrum.coefficients) @ trig


def parseval_relative_error(spectrum: ZernikeSpectrum, grid: DiskGrid) -> float:
    """Relative gap between sum-of-squares (piston excluded) and the
    pupil variance of the reconstructed map."""
    recon = reconstruct_disk(spectrum, grid)
    mean = grid.average(recon)
    variance = grid.average((recon - mean) ** 2)
    ssq = float(np.sum(spectrum.coefficients[1:] ** 2))
    scale = max(ssq, variance, 1e-300)
    return abs(ssq - variance) / scale
