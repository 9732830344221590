"""Focusing through birefringent plane-parallel substrates.

Models the polarization-split focus produced by uniaxial layers with the
optic axis normal to the surfaces, quantifies the resulting aberrations
and focal-spot degradation, and designs opposite-sign compensator plates
that cancel most of the split.
"""

from .birefringence import (
    Layer,
    LayerStack,
    focal_split_in_air_um,
    focal_split_um,
    kz_extraordinary,
    kz_ordinary,
    load_stack,
    parse_stack_text,
    pupil_polarization_split,
)
from .compensator import (
    DesignResult,
    ResidualReport,
    design_closed_form,
    generalized_ratio,
    max_allowable_thickness,
    optimize_thickness,
    residual_ratio,
)
from .errors import (
    BirefocusError,
    CatalogError,
    EvanescentWaveError,
    InputError,
    NumericalError,
    StackFileError,
)
from .materials import UniaxialMaterial, builtin_catalog, load_catalog
from .psf import (
    AxialProfile,
    FieldGrid,
    ResolutionReport,
    axial_profile,
    depth_of_focus_um,
    resolution_factor,
    resolution_report,
    strehl,
    vector_psf,
)
from .wavefront import (
    FocusingConfig,
    WavefrontMap,
    aberration_difference,
    best_focus_residual,
    compute_wavefront,
    mode_focus_split_um,
    rms_wavefront,
    split_rms,
    stack_aberration,
    zernike_decompose,
)
from .zernike import ZernikeSpectrum

__version__ = "0.1.0"

__all__ = [
    "AxialProfile",
    "BirefocusError",
    "CatalogError",
    "DesignResult",
    "EvanescentWaveError",
    "FieldGrid",
    "FocusingConfig",
    "InputError",
    "Layer",
    "LayerStack",
    "NumericalError",
    "ResidualReport",
    "ResolutionReport",
    "StackFileError",
    "UniaxialMaterial",
    "WavefrontMap",
    "ZernikeSpectrum",
    "aberration_difference",
    "axial_profile",
    "best_focus_residual",
    "builtin_catalog",
    "compute_wavefront",
    "depth_of_focus_um",
    "design_closed_form",
    "focal_split_in_air_um",
    "focal_split_um",
    "generalized_ratio",
    "kz_extraordinary",
    "kz_ordinary",
    "load_catalog",
    "load_stack",
    "max_allowable_thickness",
    "mode_focus_split_um",
    "optimize_thickness",
    "parse_stack_text",
    "pupil_polarization_split",
    "residual_ratio",
    "resolution_factor",
    "resolution_report",
    "rms_wavefront",
    "split_rms",
    "stack_aberration",
    "strehl",
    "vector_psf",
    "zernike_decompose",
]
