"""Pupil aberration maps for focusing through a uniaxial layer stack.

A converging beam of numerical aperture NA is parameterized by the pupil
radius rho in (0, 1], with transverse direction cosine s = NA * rho
conserved through every flat layer. Replacing an air gap of thickness h by
a material adds, per mode m,

    W_m(rho) = h * [kz_m(s) - kz_air(s)] - h * [kz_m(0) - 1]

of optical path (the on-axis term is subtracted so W_m(0) = 0). An air
layer therefore contributes exactly nothing, and an isotropic slab loads
both modes identically. Profiles are stored in waves at the configured
wavelength on the Gauss-Legendre radial grid shared with the Zernike
quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import birefringence as bi
from .errors import EvanescentWaveError, InputError
from .zernike import (
    DiskGrid,
    ZernikeSpectrum,
    decompose_disk,
    decompose_radial,
    normalization,
    radial_polynomial,
)

MIN_WAVELENGTH_NM = 150.0
MAX_WAVELENGTH_NM = 2000.0

APODIZATIONS = ("aplanatic", "uniform")
LENS_REFERENCES = ("mean", "ordinary", "none")


@dataclass(frozen=True)
class FocusingConfig:
    """Focusing geometry plus the pupil sampling used everywhere downstream."""

    numerical_aperture: float
    wavelength_nm: float
    input_polarization: str = "circular"
    pupil_rings: int = 256
    pupil_spokes: int = 512
    apodization: str = "aplanatic"

    def __post_init__(self) -> None:
        if not (0.0 < self.numerical_aperture < 1.0):
            raise InputError(
                f"numerical aperture {self.numerical_aperture!r} outside (0, 1)"
            )
        if not (MIN_WAVELENGTH_NM <= self.wavelength_nm <= MAX_WAVELENGTH_NM):
            raise InputError(
                f"wavelength {self.wavelength_nm!r} nm outside "
                f"[{MIN_WAVELENGTH_NM}, {MAX_WAVELENGTH_NM}]"
            )
        if self.input_polarization not in bi.POLARIZATIONS:
            raise InputError(
                f"unknown polarization {self.input_polarization!r}; "
                f"expected one of {bi.POLARIZATIONS}"
            )
        if self.pupil_rings < 64:
            raise InputError(f"pupil_rings {self.pupil_rings} < 64")
        if self.pupil_spokes < 128:
            raise InputError(f"pupil_spokes {self.pupil_spokes} < 128")
        if self.apodization not in APODIZATIONS:
            raise InputError(
                f"unknown apodization {self.apodization!r}; "
                f"expected one of {APODIZATIONS}"
            )

    @property
    def wavelength_um(self) -> float:
        return self.wavelength_nm * 1e-3

    @property
    def grid(self) -> DiskGrid:
        return _shared_grid(self.pupil_rings, self.pupil_spokes)


@lru_cache(maxsize=32)
def _shared_grid(n_rings: int, n_spokes: int) -> DiskGrid:
    return DiskGrid.make(n_rings, n_spokes)


@dataclass(frozen=True)
class WavefrontMap:
    """Per-mode radial OPD profiles, in waves, on the config's pupil grid."""

    grid: DiskGrid
    numerical_aperture: float
    wavelength_nm: float
    w_ordinary: np.ndarray
    w_extraordinary: np.ndarray

    def __post_init__(self) -> None:
        for arr in (self.w_ordinary, self.w_extraordinary):
            if np.asarray(arr).shape != (self.grid.n_rings,):
                raise InputError("profile length does not match the pupil grid")
            if not np.isfinite(arr).all():
                raise InputError("wavefront profile contains non-finite samples")

    @property
    def delta(self) -> np.ndarray:
        """ΔW = W_extraordinary − W_ordinary, in waves."""
        return self.w_extraordinary - self.w_ordinary

    def mode(self, mode: str) -> np.ndarray:
        if mode == "ordinary":
            return self.w_ordinary
        if mode == "extraordinary":
            return self.w_extraordinary
        raise InputError(f"unknown mode {mode!r}")


def _mode_profile_um(stack: bi.LayerStack, s: np.ndarray, mode: str) -> np.ndarray:
    """Sum of per-layer vacuum-replacement OPDs, micrometres."""
    kz_air = np.sqrt(1.0 - s * s)
    total = np.zeros_like(s)
    for position, layer in enumerate(stack.layers):
        try:
            kz = bi.kz_mode(layer.material, s, mode)
        except EvanescentWaveError as exc:
            raise InputError(
                f"layer {position} ({layer.material.name!r}): {exc}"
            ) from None
        kz0 = bi.kz_mode(layer.material, 0.0, mode)
        total = total + 1000.0 * layer.thickness_mm * (kz - kz_air - kz0 + 1.0)
    return total


def stack_aberration(stack: bi.LayerStack, cfg: FocusingConfig, mode: str) -> np.ndarray:
    """Radial OPD profile of one mode, in waves, on the config grid."""
    s = cfg.numerical_aperture * cfg.grid.rho
    return _mode_profile_um(stack, s, mode) / cfg.wavelength_um


def compute_wavefront(stack: bi.LayerStack, cfg: FocusingConfig) -> WavefrontMap:
    return WavefrontMap(
        grid=cfg.grid,
        numerical_aperture=cfg.numerical_aperture,
        wavelength_nm=cfg.wavelength_nm,
        w_ordinary=stack_aberration(stack, cfg, "ordinary"),
        w_extraordinary=stack_aberration(stack, cfg, "extraordinary"),
    )


def aberration_difference(stack: bi.LayerStack, cfg: FocusingConfig) -> np.ndarray:
    """ΔW(ρ) = W_e − W_o in waves. Identically zero for isotropic stacks."""
    return compute_wavefront(stack, cfg).delta


def lens_reference_profile(wmap: WavefrontMap, reference: str = "mean") -> np.ndarray:
    """Profile the objective is assumed to pre-correct.

    "mean" models a lens figured for the polarization-averaged load,
    "ordinary" one figured for the ordinary mode only, "none" a plain
    air-design objective.
    """
    if reference == "mean":
        return 0.5 * (wmap.w_ordinary + wmap.w_extraordinary)
    if reference == "ordinary":
        return np.array(wmap.w_ordinary, copy=True)
    if reference == "none":
        return np.zeros_like(wmap.w_ordinary)
    raise InputError(
        f"unknown lens reference {reference!r}; expected one of {LENS_REFERENCES}"
    )


def referenced_profiles(
    wmap: WavefrontMap, reference: str = "mean"
) -> tuple[np.ndarray, np.ndarray]:
    """(W_o, W_e) with the lens-corrected part subtracted."""
    ref = lens_reference_profile(wmap, reference)
    return wmap.w_ordinary - ref, wmap.w_extraordinary - ref


_REMOVABLE = ("piston", "defocus")
_REMOVE_ORDERS = {"piston": (0, 0), "defocus": (2, 0)}


def _removal_basis(grid: DiskGrid, remove) -> list[np.ndarray]:
    basis = []
    for name in remove:
        if name not in _REMOVABLE:
            raise InputError(
                f"cannot remove {name!r}; supported modes: {_REMOVABLE}"
            )
        n, m = _REMOVE_ORDERS[name]
        basis.append(normalization(n, m) * radial_polynomial(n, m, grid.rho))
    return basis


def rms_wavefront(values, grid: DiskGrid, remove=()) -> float:
    """Area-weighted RMS over the unit disk after projecting out modes.

    ``values`` may be a radial profile (n_rings,) or a full pupil map
    (n_rings, n_spokes); ``remove`` is a subset of {"piston", "defocus"}.
    Both removable modes are rotationally symmetric, so removal acts on the
    ring means and leaves any azimuthal structure untouched.
    """
    arr = np.asarray(values, dtype=float)
    radial_input = arr.ndim == 1
    if radial_input:
        if arr.shape != (grid.n_rings,):
            raise InputError("profile length does not match the grid")
        work = arr.copy()
        ring_means = work
    elif arr.ndim == 2:
        if arr.shape != (grid.n_rings, grid.n_spokes):
            raise InputError("map shape does not match the grid")
        work = arr.copy()
        ring_means = work.mean(axis=1)
    else:
        raise InputError(f"expected a 1-D or 2-D pupil array, got ndim={arr.ndim}")
    for mode in _removal_basis(grid, remove):
        c = grid.average_radial(ring_means * mode)
        if radial_input:
            work -= c * mode
            ring_means = work
        else:
            work -= c * mode[:, None]
            ring_means = work.mean(axis=1)
    if radial_input:
        mean_sq = grid.average_radial(work * work)
    else:
        mean_sq = grid.average(work * work)
    return math.sqrt(max(mean_sq, 0.0))


def zernike_decompose(values, grid: DiskGrid, max_radial_order: int) -> ZernikeSpectrum:
    """Decompose a radial profile or a full 2-D pupil map.

    Radial input (shape (n_rings,)) only excites m = 0 modes; 2-D input
    (n_rings, n_spokes) is projected onto the full basis.
    """
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 1:
        return decompose_radial(arr, grid, max_radial_order)
    if arr.ndim == 2:
        return decompose_disk(arr, grid, max_radial_order)
    raise InputError(f"expected a 1-D or 2-D pupil array, got ndim={arr.ndim}")


def best_focus_residual(stack: bi.LayerStack, cfg: FocusingConfig) -> float:
    """RMS of ΔW after piston and defocus removal, in waves.

    The part of ΔW a common refocus cannot touch; a diagnostic for how much
    of the mode split survives at the compromise focus.
    """
    return rms_wavefront(
        aberration_difference(stack, cfg), cfg.grid, remove=("piston", "defocus")
    )


def split_rms(stack: bi.LayerStack, cfg: FocusingConfig) -> float:
    """RMS of ΔW after piston removal only, in waves.

    This keeps the ρ²-like part of the mode split, which no common refocus
    can compensate (for linear input it appears as astigmatism; for any
    input it sets the distance between the two foci), so it is the merit
    the compensator design minimizes.
    """
    return rms_wavefront(aberration_difference(stack, cfg), cfg.grid, remove=("piston",))


def final_medium(stack: bi.LayerStack):
    """Material the beam converges in after the stack (air when empty)."""
    from .materials import AIR

    mat = stack.final_material
    return mat if mat is not None else AIR


def defocus_slope_waves_per_um(
    stack: bi.LayerStack, cfg: FocusingConfig, mode: str
) -> np.ndarray:
    """d(OPD)/dz per micrometre of focal displacement inside the final medium."""
    mat = final_medium(stack)
    s = cfg.numerical_aperture * cfg.grid.rho
    kz = bi.kz_mode(mat, s, mode)
    kz0 = bi.kz_mode(mat, 0.0, mode)
    return (kz - kz0) / cfg.wavelength_um


def mode_focus_shifts_um(
    stack: bi.LayerStack, cfg: FocusingConfig, reference: str = "mean"
) -> tuple[float, float]:
    """Least-squares focus displacement of each mode in the final medium.

    Fits the referenced per-mode profile to that mode's defocus slope
    (free piston allowed); the displacement that flattens the fit is the
    stationary-phase focus. Returns (z_ordinary, z_extraordinary) in µm.
    """
    wmap = compute_wavefront(stack, cfg)
    profiles = dict(zip(bi.MODES, referenced_profiles(wmap, reference)))
    grid = cfg.grid
    shifts = []
    for mode in bi.MODES:
        w = profiles[mode]
        d = defocus_slope_waves_per_um(stack, cfg, mode)
        wc = w - grid.average_radial(w)
        dc = d - grid.average_radial(d)
        denom = grid.average_radial(dc * dc)
        if denom <= 0.0:
            shifts.append(0.0)
            continue
        shifts.append(-grid.average_radial(wc * dc) / denom)
    return (shifts[0], shifts[1])


def mode_focus_split_um(
    stack: bi.LayerStack, cfg: FocusingConfig, reference: str = "mean"
) -> float:
    """z_extraordinary − z_ordinary from :func:`mode_focus_shifts_um`."""
    z_o, z_e = mode_focus_shifts_um(stack, cfg, reference)
    return z_e - z_o


def synthesize_pupil_map(
    wmap: WavefrontMap, polarization: str, reference: str = "none"
) -> np.ndarray:
    """Power-weighted effective 2-D pupil map, shape (n_rings, n_spokes).

    Each pupil point sees W_o and W_e weighted by the power the input
    polarization couples into each mode there. Linear input turns the
    ρ²-like part of ΔW into a cos 2φ (astigmatic) pattern; circular input
    gives back the rotationally symmetric mean load.
    """
    w_o, w_e = referenced_profiles(wmap, reference)
    grid = wmap.grid
    p_o = np.empty(grid.n_spokes)
    for k, phi in enumerate(grid.theta):
        a_o, _ = bi.pupil_polarization_split(polarization, float(phi))
        p_o[k] = abs(a_o) ** 2
    p_e = 1.0 - p_o
    return w_o[:, None] * p_o[None, :] + w_e[:, None] * p_e[None, :]
