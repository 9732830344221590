"""Plane-wave propagation through plane-parallel uniaxial layers.

All layers have their optic axis normal to the surfaces and are surrounded
by air, so the transverse direction cosine ``s = sin(theta_air)`` is
conserved through the whole stack. For a given ``s`` each layer carries two
independent eigenmodes:

* ordinary: field azimuthal (s-polarized), axial wavenumber
  ``kz_o(s) = sqrt(n_o^2 - s^2)`` in units of the vacuum wavenumber;
* extraordinary: field in the meridional plane (p-polarized),
  ``kz_e(s) = n_o * sqrt(1 - s^2 / n_e^2)``.

Both reduce to ``n_o`` at normal incidence, so the modes accumulate a
relative phase only for oblique components. The model is pure phase: Fresnel
amplitude factors at the interfaces are ignored throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import EvanescentWaveError, InputError, StackFileError
from .materials import UniaxialMaterial

MAX_LAYER_MM = 10.0
MAX_STACK_MM = 20.0

Mode = str  # "ordinary" | "extraordinary"
MODES = ("ordinary", "extraordinary")


def _check_s(s, bound: float, mode: Mode, name: str):
    arr = np.asarray(s, dtype=float)
    if np.any(arr < 0) or np.any(arr >= bound):
        raise EvanescentWaveError(
            f"direction cosine out of range for the {mode} mode in {name!r}: "
            f"need 0 <= s < {bound!r}"
        )
    return arr


def kz_ordinary(material: UniaxialMaterial, s):
    """Normalized axial wavenumber of the ordinary mode.

    Written as ``n_o * sqrt(1 - (s/n_o)^2)`` so that for an isotropic
    material it is bit-identical to :func:`kz_extraordinary`.
    """
    arr = _check_s(s, material.n_o, "ordinary", material.name)
    out = material.n_o * np.sqrt(1.0 - (arr / material.n_o) ** 2)
    return float(out) if np.isscalar(s) else out


def kz_extraordinary(material: UniaxialMaterial, s):
    """Normalized axial wavenumber of the extraordinary mode."""
    arr = _check_s(s, material.n_e, "extraordinary", material.name)
    out = material.n_o * np.sqrt(1.0 - (arr / material.n_e) ** 2)
    return float(out) if np.isscalar(s) else out


def kz_mode(material: UniaxialMaterial, s, mode: Mode):
    if mode == "ordinary":
        return kz_ordinary(material, s)
    if mode == "extraordinary":
        return kz_extraordinary(material, s)
    raise InputError(f"unknown mode {mode!r}; expected one of {MODES}")


@dataclass(frozen=True)
class Layer:
    """One plane-parallel plate: a material plus a thickness in mm."""

    material: UniaxialMaterial
    thickness_mm: float

    def __post_init__(self) -> None:
        if not (0.0 < self.thickness_mm <= MAX_LAYER_MM):
            raise InputError(
                f"layer thickness {self.thickness_mm!r} mm outside "
                f"(0, {MAX_LAYER_MM}] for {self.material.name!r}"
            )


@dataclass(frozen=True)
class LayerStack:
    """Ordered layers between the objective and the focal region.

    May be empty (bare focusing in air). Total thickness is capped at
    20 mm as a sanity bound.
    """

    layers: tuple[Layer, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "layers", tuple(self.layers))
        if self.total_thickness_mm > MAX_STACK_MM:
            raise InputError(
                f"stack thickness {self.total_thickness_mm} mm exceeds {MAX_STACK_MM} mm"
            )

    @property
    def total_thickness_mm(self) -> float:
        return sum(l.thickness_mm for l in self.layers)

    @property
    def final_material(self) -> UniaxialMaterial | None:
        """Material of the layer adjacent to the focal region (None if empty)."""
        return self.layers[-1].material if self.layers else None

    def is_isotropic(self) -> bool:
        return all(l.material.is_isotropic() for l in self.layers)


def layer_phase(layer: Layer, s, mode: Mode):
    """Optical path ``h * kz`` through one layer, in micrometres.

    This is the phase divided by the vacuum wavenumber, i.e. a length.
    """
    return 1000.0 * layer.thickness_mm * kz_mode(layer.material, s, mode)


def focal_split_um(thickness_mm: float, material: UniaxialMaterial) -> float:
    """Axial distance between the two polarization foci, inside the medium.

    ``2 h |delta_n| / n_o`` for a plate of thickness ``h``; zero for an
    isotropic material. Micrometres.
    """
    if thickness_mm <= 0:
        raise InputError("thickness must be positive")
    return 2000.0 * thickness_mm * abs(material.delta_n) / material.n_o


def focal_split_in_air_um(thickness_mm: float, material: UniaxialMaterial) -> float:
    """The same focus separation expressed as defocus in air: ``2 h |dn| / n_o^2``."""
    return focal_split_um(thickness_mm, material) / material.n_o


POLARIZATIONS = ("linear-x", "linear-y", "circular")


def jones_vector(polarization: str) -> tuple[complex, complex]:
    """Input Jones vector (unit power) for a named polarization state."""
    if polarization == "linear-x":
        return (1.0 + 0.0j, 0.0j)
    if polarization == "linear-y":
        return (0.0j, 1.0 + 0.0j)
    if polarization == "circular":
        r = 1.0 / math.sqrt(2.0)
        return (r + 0.0j, 1j * r)
    raise InputError(f"unknown polarization {polarization!r}; expected {POLARIZATIONS}")


def pupil_polarization_split(polarization: str, phi: float) -> tuple[complex, complex]:
    """Amplitudes coupled into the (ordinary, extraordinary) modes at pupil
    azimuth ``phi``.

    The ordinary mode picks up the azimuthal component of the input field and
    the extraordinary mode the radial one, so for linear-x input the pair is
    ``(-sin phi, cos phi)``. Satisfies |a_o|^2 + |a_e|^2 = 1 for any phi.
    """
    ex, ey = jones_vector(polarization)
    a_o = -ex * math.sin(phi) + ey * math.cos(phi)
    a_e = ex * math.cos(phi) + ey * math.sin(phi)
    return (a_o, a_e)


def stack_phase_um(stack: LayerStack, s, mode: Mode):
    """Total optical path of one mode through the whole stack, micrometres."""
    total = 0.0
    for layer in stack.layers:
        total = total + layer_phase(layer, s, mode)
    return total


def parse_stack_text(
    text: str,
    catalog: Mapping[str, UniaxialMaterial],
    source: str = "<string>",
) -> LayerStack:
    """Parse stack text: one ``layer: <material-name> <thickness_mm>`` per line.

    Blank lines and ``#`` comments are allowed. Unknown material names and bad
    thickness values raise :class:`StackFileError` naming the line.
    """
    layers: list[Layer] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if not line.startswith("layer:"):
            raise StackFileError(
                f"{source}:{lineno}: expected 'layer: <material> <thickness_mm>', "
                f"got {raw!r}"
            )
        fields = line[len("layer:"):].split()
        if len(fields) != 2:
            raise StackFileError(
                f"{source}:{lineno}: expected exactly a material name and a "
                f"thickness, got {raw!r}"
            )
        name, thick = fields
        if name not in catalog:
            raise StackFileError(f"{source}:{lineno}: unknown material {name!r}")
        try:
            thickness = float(thick)
        except ValueError:
            raise StackFileError(
                f"{source}:{lineno}: bad thickness {thick!r}"
            ) from None
        try:
            layers.append(Layer(catalog[name], thickness))
        except InputError as exc:
            raise StackFileError(f"{source}:{lineno}: {exc}") from None
    try:
        return LayerStack(tuple(layers))
    except InputError as exc:
        raise StackFileError(f"{source}: {exc}") from None


def load_stack(path: str, catalog: Mapping[str, UniaxialMaterial]) -> LayerStack:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise StackFileError(f"cannot read stack file {path!r}: {exc}") from None
    return parse_stack_text(text, catalog, source=str(path))


def format_stack(stack: LayerStack) -> str:
    return "".join(
        f"layer: {l.material.name} {l.thickness_mm!r}\n" for l in stack.layers
    )
