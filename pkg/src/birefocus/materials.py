"""Uniaxial optical materials and the flat-file catalog format.

A material is fully described here by its two principal refractive indices:
``n_o`` for the ordinary ray and ``n_e`` for the extraordinary ray, both
quoted at a single reference wavelength (no dispersion model is carried).
Isotropic media are represented by setting ``n_e == n_o``.

Catalog files are plain text, one record per material, records separated by
blank lines::

    # comment
    name = sapphire
    n_o = 1.78038
    n_e = 1.77206
    ref_wavelength_nm = 442

Keys other than the four above are kept verbatim in ``metadata``.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Mapping

from .errors import CatalogError, InputError

# Validation window for refractive indices. The lower bound is inclusive so
# that vacuum/air (n = 1.0) is representable.
_N_MIN = 1.0
_N_MAX = 3.0

#: Tolerance below which |n_e - n_o| is treated as zero (isotropic).
SIGN_TOLERANCE = 1e-9


@dataclass(frozen=True)
class UniaxialMaterial:
    """A uniaxial (or isotropic) optical material at one wavelength.

    Parameters
    ----------
    name : str
        Identifier used in catalogs and stack files.
    n_o, n_e : float
        Principal refractive indices (ordinary, extraordinary). Must lie in
        [1.0, 3.0). Equal values describe an isotropic medium.
    ref_wavelength_nm : float or None
        Wavelength at which the indices were measured, if known.
    metadata : mapping
        Free-form key/value strings (hardness, thermal data, ...). Inert.
    """

    name: str
    n_o: float
    n_e: float
    ref_wavelength_nm: float | None = None
    metadata: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.name or not str(self.name).strip():
            raise InputError("material name must be a non-empty string")
        for label, value in (("n_o", self.n_o), ("n_e", self.n_e)):
            if not (_N_MIN <= float(value) < _N_MAX):
                raise InputError(
                    f"{self.name}: {label} = {value!r} outside the physical "
                    f"range [{_N_MIN}, {_N_MAX})"
                )
        if self.ref_wavelength_nm is not None and self.ref_wavelength_nm <= 0:
            raise InputError(f"{self.name}: ref_wavelength_nm must be positive")

    @property
    def delta_n(self) -> float:
        """Signed birefringence ``n_e - n_o``.

        Negative for a negative crystal (sapphire), positive for a positive
        one (quartz), zero for isotropic media.
        """
        return self.n_e - self.n_o

    def is_isotropic(self, tol: float = SIGN_TOLERANCE) -> bool:
        return abs(self.delta_n) <= tol

    def optical_sign(self, tol: float = SIGN_TOLERANCE) -> int:
        """-1 for a negative crystal, +1 for a positive one, 0 if isotropic."""
        d = self.delta_n
        if abs(d) <= tol:
            return 0
        return -1 if d < 0 else 1


def _builtin_materials() -> dict[str, UniaxialMaterial]:
    sapphire = UniaxialMaterial(
        "sapphire",
        n_o=1.78038,
        n_e=1.77206,
        ref_wavelength_nm=442.0,
        metadata={
            "formula": "Al2O3",
            "optical_type": "negative",
            "mohs_hardness": "9",
            "fusing_temperature_k": "2300",
            "thermal_conductivity_w_mk": "34",
            "thermal_expansion_1e-6_k": "5.6",
            "uv_resistance": "not degraded",
            "transparency_um": "0.17-5.5",
        },
    )
    quartz = UniaxialMaterial(
        "quartz",
        n_o=1.5443,
        n_e=1.5534,
        # The source data for the quartz indices does not state a wavelength;
        # left unset rather than guessed.
        ref_wavelength_nm=None,
        metadata={
            "formula": "SiO2",
            "optical_type": "positive",
            "mohs_hardness": "7",
            "fusing_temperature_k": "1960",
            "thermal_conductivity_w_mk": "3",
            "thermal_expansion_1e-6_k": "0.55",
            "uv_resistance": "not degraded",
        },
    )
    fused_silica = UniaxialMaterial(
        "fused-silica",
        n_o=1.4585,
        n_e=1.4585,
        ref_wavelength_nm=None,
        metadata={
            "formula": "SiO2",
            "state": "amorphous",
            "mohs_hardness": "5.3-6.5",
            "softening_temperature_k": "1350",
            "uv_resistance": "degraded",
        },
    )
    air = UniaxialMaterial("air", n_o=1.0, n_e=1.0)
    return {m.name: m for m in (sapphire, quartz, fused_silica, air)}


def builtin_catalog() -> dict[str, UniaxialMaterial]:
    """Fresh copy of the built-in material table."""
    return _builtin_materials()


AIR = _builtin_materials()["air"]


_KNOWN_KEYS = ("name", "n_o", "n_e", "ref_wavelength_nm")


def parse_catalog(text: str, source: str = "<string>") -> dict[str, UniaxialMaterial]:
    """Parse catalog text into materials, without the built-ins.

    Raises :class:`CatalogError` naming the offending line and record on any
    syntax error, unknown structure, or out-of-range index.
    """
    materials: dict[str, UniaxialMaterial] = {}
    record: dict[str, str] = {}
    meta: dict[str, str] = {}
    record_start = 0

    def finish(end_line: int) -> None:
        if not record and not meta:
            return
        where = f"{source}: record starting at line {record_start}"
        if "name" not in record:
            raise CatalogError(f"{where}: missing 'name'")
        name = record["name"]
        for key in ("n_o", "n_e"):
            if key not in record:
                raise CatalogError(f"{where} ({name!r}): missing '{key}'")
        try:
            n_o = float(record["n_o"])
            n_e = float(record["n_e"])
            ref = (
                float(record["ref_wavelength_nm"])
                if "ref_wavelength_nm" in record
                else None
            )
        except ValueError as exc:
            raise CatalogError(f"{where} ({name!r}): bad number: {exc}") from None
        try:
            materials[name] = UniaxialMaterial(
                name, n_o=n_o, n_e=n_e, ref_wavelength_nm=ref, metadata=dict(meta)
            )
        except InputError as exc:
            raise CatalogError(f"{where}: {exc}") from None
        record.clear()
        meta.clear()

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            finish(lineno)
            continue
        if "=" not in line:
            raise CatalogError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not record and not meta:
            record_start = lineno
        if key in _KNOWN_KEYS:
            if key in record:
                raise CatalogError(f"{source}:{lineno}: duplicate key {key!r} in record")
            record[key] = value
        else:
            meta[key] = value
    finish(0)
    return materials


def load_catalog(path: str | None = None) -> dict[str, UniaxialMaterial]:
    """Built-in materials, with entries from ``path`` (if given) layered on top.

    A user record whose name matches a built-in replaces it.
    """
    catalog = builtin_catalog()
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise CatalogError(f"cannot read catalog {path!r}: {exc}") from None
        catalog.update(parse_catalog(text, source=str(path)))
    return catalog


def format_catalog(materials: Mapping[str, UniaxialMaterial]) -> str:
    """Serialize materials to catalog text.

    Numbers are written with :func:`repr`, which round-trips every float
    bit-for-bit through :func:`parse_catalog`.
    """
    out = io.StringIO()
    for i, m in enumerate(materials.values()):
        if i:
            out.write("\n")
        out.write(f"name = {m.name}\n")
        out.write(f"n_o = {m.n_o!r}\n")
        out.write(f"n_e = {m.n_e!r}\n")
        if m.ref_wavelength_nm is not None:
            out.write(f"ref_wavelength_nm = {m.ref_wavelength_nm!r}\n")
        for key, value in m.metadata.items():
            out.write(f"{key} = {value}\n")
    return out.getvalue()


def save_catalog(materials: Mapping[str, UniaxialMaterial], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_catalog(materials))
