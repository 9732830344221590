"""Pairing a negative-uniaxial substrate with a positive-uniaxial plate.

A plate of the opposite optical sign loads the two polarization modes
with the opposite relative phase, so a suitable thickness cancels most of
the substrate's mode split. The leading (rho^2) term of the split scales
as thickness * |delta_n| / n_o^2, giving the closed-form thickness ratio;
the numerical optimizer instead minimizes the full split merit, trading
the rho^2 null against the residual rho^4 mismatch.

The merit minimized here is the RMS of the mode-split profile with only
its mean removed (wavefront.split_rms). The rho^2-like part stays in on
purpose: a common refocus shifts both foci together and cannot shrink the
distance between them (for linear input the same term shows up as
astigmatism), so dropping it would let the optimizer hide exactly the
error the plate exists to fix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import birefringence as bi
from .errors import InputError, NumericalError
from .materials import UniaxialMaterial
from .wavefront import FocusingConfig, split_rms

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0

# Index quadruple for which the fixed 0.68 thickness ratio is used
# instead of the generalized formula (it is the pair the ratio was
# originally quoted for).
_REFERENCE_PAIR = (1.78038, 1.77206, 1.5443, 1.5534)
_REFERENCE_RATIO = 0.68
_PAIR_TOL = 1e-9

THICKNESS_TOL_MM = 1e-4      # golden-section tolerance, 0.1 um
BISECTION_TOL_MM = 1e-3      # max-thickness tolerance, 1 um
DEFAULT_CRITERION_WAVES = 1.0 / 14.0


@dataclass(frozen=True)
class DesignResult:
    """A substrate/compensator thickness pair and how it was obtained."""

    substrate: UniaxialMaterial
    compensator: UniaxialMaterial
    substrate_mm: float
    compensator_mm: float
    method: str  # "closed_form" | "optimized"

    def __post_init__(self) -> None:
        if self.substrate_mm <= 0.0:
            raise InputError(f"substrate thickness {self.substrate_mm!r} mm not positive")
        if self.compensator_mm < 0.0:
            raise InputError(
                f"compensator thickness {self.compensator_mm!r} mm negative"
            )
        if self.method not in ("closed_form", "optimized"):
            raise InputError(f"unknown design method {self.method!r}")

    @property
    def ratio(self) -> float:
        """compensator thickness / substrate thickness."""
        return self.compensator_mm / self.substrate_mm

    @property
    def total_mm(self) -> float:
        return self.substrate_mm + self.compensator_mm

    def stack(self) -> bi.LayerStack:
        layers = [bi.Layer(self.substrate, self.substrate_mm)]
        if self.compensator_mm > 0.0:
            layers.append(bi.Layer(self.compensator, self.compensator_mm))
        return bi.LayerStack(tuple(layers))


@dataclass(frozen=True)
class ResidualReport:
    """Compensated vs uncompensated mode-split RMS, in waves."""

    residual_rms: float
    uncompensated_rms: float
    ratio_percent: float
    config: FocusingConfig


def _require_opposite_signs(substrate: UniaxialMaterial,
                            compensator: UniaxialMaterial) -> None:
    s_sign = substrate.optical_sign()
    c_sign = compensator.optical_sign()
    if s_sign == 0:
        raise InputError(
            f"substrate {substrate.name!r} is isotropic; nothing to compensate"
        )
    if c_sign == 0:
        raise InputError(
            f"compensator {compensator.name!r} is isotropic and cannot "
            f"offset a mode split"
        )
    if s_sign == c_sign:
        raise InputError(
            f"{substrate.name!r} and {compensator.name!r} have the same "
            f"optical sign; their mode splits add instead of cancelling"
        )


def _split_strength(material: UniaxialMaterial) -> float:
    """Leading-order mode-split power per unit thickness: |delta_n| / n_o^2."""
    return abs(material.delta_n) / material.n_o ** 2


def generalized_ratio(substrate: UniaxialMaterial,
                      compensator: UniaxialMaterial) -> float:
    """Compensator/substrate thickness ratio cancelling the rho^2 split term."""
    _require_opposite_signs(substrate, compensator)
    return _split_strength(substrate) / _split_strength(compensator)


def _is_reference_pair(substrate: UniaxialMaterial,
                       compensator: UniaxialMaterial) -> bool:
    values = (substrate.n_o, substrate.n_e, compensator.n_o, compensator.n_e)
    return all(
        abs(a - b) <= _PAIR_TOL for a, b in zip(values, _REFERENCE_PAIR)
    )


def design_closed_form(total_mm: float, substrate: UniaxialMaterial,
                       compensator: UniaxialMaterial) -> DesignResult:
    """Split a total thickness budget by the closed-form ratio.

    The fixed ratio 0.68 is used for the reference sapphire/quartz pair;
    any other opposite-sign pair gets the generalized |delta_n|/n_o^2
    ratio. The two thicknesses always sum to ``total_mm`` exactly.
    """
    if total_mm <= 0.0:
        raise InputError(f"total thickness {total_mm!r} mm not positive")
    _require_opposite_signs(substrate, compensator)
    if _is_reference_pair(substrate, compensator):
        ratio = _REFERENCE_RATIO
    else:
        ratio = generalized_ratio(substrate, compensator)
    substrate_mm = total_mm / (1.0 + ratio)
    return DesignResult(
        substrate=substrate,
        compensator=compensator,
        substrate_mm=substrate_mm,
        compensator_mm=total_mm - substrate_mm,
        method="closed_form",
    )


def compensation_merit(stack: bi.LayerStack, cfg: FocusingConfig) -> float:
    """Mode-split RMS (waves, mean removed) the designs minimize."""
    return split_rms(stack, cfg)


def _merit_vs_thickness(substrate_layer: bi.Layer,
                        compensator_material: UniaxialMaterial,
                        cfg: FocusingConfig):
    def merit(t_mm: float) -> float:
        layers = [substrate_layer]
        if t_mm > 0.0:
            layers.append(bi.Layer(compensator_material, t_mm))
        return compensation_merit(bi.LayerStack(tuple(layers)), cfg)

    return merit


def optimize_thickness(
    substrate_layer: bi.Layer,
    compensator_material: UniaxialMaterial,
    cfg: FocusingConfig,
    bounds_mm: tuple[float, float],
) -> tuple[DesignResult, "ResidualReport"]:
    """Best compensator thickness inside ``bounds_mm`` by direct search.

    A coarse scan must place the minimum strictly inside the bounds
    (otherwise the bracket is wrong and the failure carries the scan on
    its ``scan`` attribute); golden-section then refines to 0.1 um.
    """
    _require_opposite_signs(substrate_layer.material, compensator_material)
    lo, hi = bounds_mm
    if not (0.0 < lo < hi <= bi.MAX_LAYER_MM):
        raise InputError(
            f"bounds {bounds_mm!r} mm must satisfy 0 < lo < hi <= {bi.MAX_LAYER_MM}"
        )
    merit = _merit_vs_thickness(substrate_layer, compensator_material, cfg)
    n_scan = min(201, max(41, int(round((hi - lo) / 0.01)) + 1))
    ts = [lo + (hi - lo) * i / (n_scan - 1) for i in range(n_scan)]
    ms = [merit(t) for t in ts]
    k = min(range(n_scan), key=ms.__getitem__)
    if k == 0 or k == n_scan - 1:
        err = NumericalError(
            f"no interior merit minimum in bounds {bounds_mm!r} mm; "
            f"endpoint values {ms[0]:.6g} and {ms[-1]:.6g} waves"
        )
        err.scan = tuple(zip(ts, ms))
        raise err

    a, b = ts[k - 1], ts[k + 1]
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = merit(c), merit(d)
    while (b - a) > THICKNESS_TOL_MM:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = merit(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = merit(d)
    t_best = c if fc <= fd else d
    design = DesignResult(
        substrate=substrate_layer.material,
        compensator=compensator_material,
        substrate_mm=substrate_layer.thickness_mm,
        compensator_mm=float(t_best),
        method="optimized",
    )
    return design, residual_ratio(substrate_layer, design, cfg)


def residual_ratio(substrate_layer: bi.Layer, design: DesignResult,
                   cfg: FocusingConfig) -> ResidualReport:
    """Residual split of the compensated stack relative to the bare substrate.

    ``ratio_percent`` is the Table-style 100 * residual / uncompensated.
    A zero-thickness compensator is the identity case and returns exactly
    100. A substrate with no split at all has no meaningful ratio.
    """
    uncompensated = compensation_merit(bi.LayerStack((substrate_layer,)), cfg)
    if uncompensated == 0.0:
        raise InputError(
            f"substrate {substrate_layer.material.name!r} has zero mode "
            f"split; the residual ratio is undefined"
        )
    if design.compensator_mm == 0.0:
        return ResidualReport(
            residual_rms=uncompensated,
            uncompensated_rms=uncompensated,
            ratio_percent=100.0,
            config=cfg,
        )
    stack = bi.LayerStack(
        (substrate_layer, bi.Layer(design.compensator, design.compensator_mm))
    )
    residual = compensation_merit(stack, cfg)
    return ResidualReport(
        residual_rms=residual,
        uncompensated_rms=uncompensated,
        ratio_percent=100.0 * residual / uncompensated,
        config=cfg,
    )


def max_allowable_thickness(
    material: UniaxialMaterial,
    cfg: FocusingConfig,
    criterion_waves: float = DEFAULT_CRITERION_WAVES,
) -> float:
    """Largest single-layer thickness whose mode-split RMS stays under the
    criterion (waves). Returns ``math.inf`` for isotropic materials (no
    split at any thickness).

    Bisection to 1 um. The merit is exactly linear in thickness, so when
    the allowed thickness exceeds the per-layer bound the value is scaled
    from an in-bounds evaluation instead of evaluated directly.
    """
    if criterion_waves <= 0.0:
        raise InputError(f"criterion {criterion_waves!r} waves must be positive")
    if material.is_isotropic():
        return math.inf

    def merit(h_mm: float) -> float:
        return compensation_merit(
            bi.LayerStack((bi.Layer(material, h_mm),)), cfg
        )

    probe_mm = 1.0
    per_mm = merit(probe_mm) / probe_mm
    if per_mm <= 0.0:
        return math.inf
    estimate = criterion_waves / per_mm
    if estimate > bi.MAX_LAYER_MM:
        return estimate
    lo, hi = 0.0, min(2.0 * estimate, bi.MAX_LAYER_MM)
    if merit(hi) <= criterion_waves:
        return hi
    while hi - lo > BISECTION_TOL_MM:
        mid = 0.5 * (lo + hi)
        if mid <= 0.0:
            break
        if merit(mid) <= criterion_waves:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
