import dataclasses
import math

import pytest

from birefocus import birefringence as bi
from birefocus import compensator as comp
from birefocus.errors import InputError, NumericalError
from birefocus.materials import UniaxialMaterial
from birefocus.wavefront import FocusingConfig


@pytest.fixture(scope="module")
def cfg_cd():
    return FocusingConfig(numerical_aperture=0.45, wavelength_nm=442.0)


def test_closed_form_reference_budgets(sapphire, quartz):
    d12 = comp.design_closed_form(1.2, sapphire, quartz)
    assert d12.substrate_mm == pytest.approx(0.7142857142857142, rel=1e-14)
    assert d12.compensator_mm == pytest.approx(0.48571428571428577, rel=1e-14)
    assert round(d12.substrate_mm, 3) == 0.714
    assert round(d12.compensator_mm, 3) == 0.486
    d06 = comp.design_closed_form(0.6, sapphire, quartz)
    assert round(d06.substrate_mm, 3) == 0.357
    assert round(d06.compensator_mm, 3) == 0.243
    for d in (d12, d06):
        assert d.substrate_mm + d.compensator_mm == d.total_mm  # exact
        assert d.ratio == pytest.approx(0.68, rel=1e-12)
        assert d.method == "closed_form"


def test_closed_form_rejects_bad_total(sapphire, quartz):
    with pytest.raises(InputError):
        comp.design_closed_form(0.0, sapphire, quartz)
    with pytest.raises(InputError):
        comp.design_closed_form(-1.0, sapphire, quartz)


def test_generalized_ratio_value(sapphire, quartz):
    r = comp.generalized_ratio(sapphire, quartz)
    assert r == pytest.approx(0.6878913730469447, rel=1e-12)
    assert r == pytest.approx(0.688, abs=0.002)
    # reciprocal when the roles swap
    assert comp.generalized_ratio(quartz, sapphire) == pytest.approx(1.0 / r, rel=1e-12)


def test_reference_pair_uses_fixed_ratio_others_do_not(sapphire, quartz):
    d = comp.design_closed_form(1.0, sapphire, quartz)
    assert d.ratio == pytest.approx(0.68, rel=1e-12)
    # nudge one index beyond the pair tolerance: the generalized ratio kicks in
    nudged = dataclasses.replace(quartz, n_e=quartz.n_e + 1e-6)
    d2 = comp.design_closed_form(1.0, sapphire, nudged)
    assert d2.ratio == pytest.approx(comp.generalized_ratio(sapphire, nudged), rel=1e-12)
    assert d2.ratio != pytest.approx(0.68, abs=1e-4)


def test_sign_requirements(sapphire, quartz, fused_silica):
    with pytest.raises(InputError, match="isotropic"):
        comp.generalized_ratio(fused_silica, quartz)
    with pytest.raises(InputError, match="isotropic"):
        comp.generalized_ratio(sapphire, fused_silica)
    with pytest.raises(InputError, match="same"):
        comp.design_closed_form(1.0, sapphire, sapphire)
    with pytest.raises(InputError, match="same"):
        comp.design_closed_form(1.0, quartz, quartz)


def test_design_result_validation(sapphire, quartz):
    with pytest.raises(InputError):
        comp.DesignResult(sapphire, quartz, -0.1, 0.2, "closed_form")
    with pytest.raises(InputError):
        comp.DesignResult(sapphire, quartz, 0.5, -0.2, "closed_form")
    with pytest.raises(InputError):
        comp.DesignResult(sapphire, quartz, 0.5, 0.2, "guessed")
    d = comp.DesignResult(sapphire, quartz, 0.5, 0.0, "closed_form")
    assert d.stack().layers[-1].material is sapphire  # no zero-thickness layer


def test_design_stack_layer_order(sapphire, quartz):
    d = comp.design_closed_form(1.2, sapphire, quartz)
    stack = d.stack()
    assert [l.material.name for l in stack.layers] == ["sapphire", "quartz"]
    assert stack.total_thickness_mm == pytest.approx(1.2, rel=1e-15)


def test_optimize_thickness_cd_case(sapphire, quartz, cfg_cd):
    layer = bi.Layer(sapphire, 0.714286)
    design, report = comp.optimize_thickness(layer, quartz, cfg_cd, (0.1, 1.0))
    assert design.method == "optimized"
    assert design.compensator_mm == pytest.approx(0.4938151290739632, abs=2e-4)
    assert design.ratio == pytest.approx(0.6913411807035486, abs=3e-4)
    assert 0.67 <= design.ratio <= 0.70
    assert report.ratio_percent == pytest.approx(0.28748091809247067, abs=0.02)
    assert report.residual_rms < report.uncompensated_rms


def test_optimizer_beats_closed_form(sapphire, quartz, cfg_cd):
    layer = bi.Layer(sapphire, 0.714286)
    _, optimized = comp.optimize_thickness(layer, quartz, cfg_cd, (0.1, 1.0))
    closed = comp.design_closed_form(
        0.714286 * 1.68, sapphire, quartz
    )  # same substrate, 0.68 plate
    fixed = comp.residual_ratio(
        layer,
        comp.DesignResult(sapphire, quartz, 0.714286, 0.714286 * 0.68, "closed_form"),
        cfg_cd,
    )
    assert optimized.residual_rms < fixed.residual_rms
    assert closed.ratio == pytest.approx(0.68, rel=1e-12)


def test_optimum_matches_brute_force_scan(sapphire, quartz, cfg_cd):
    layer = bi.Layer(sapphire, 0.714286)
    design, _ = comp.optimize_thickness(layer, quartz, cfg_cd, (0.4, 0.6))
    merit = comp._merit_vs_thickness(layer, quartz, cfg_cd)
    ts = [0.4 + 0.001 * i for i in range(201)]
    best = min(ts, key=merit)
    assert abs(design.compensator_mm - best) <= 0.002


def test_optimum_scales_with_substrate(sapphire, quartz, cfg_cd):
    # merit is linear in layer thicknesses, so the optimum thickness is
    # proportional to the substrate thickness
    a, _ = comp.optimize_thickness(bi.Layer(sapphire, 0.4), quartz, cfg_cd, (0.1, 0.6))
    b, _ = comp.optimize_thickness(bi.Layer(sapphire, 0.8), quartz, cfg_cd, (0.2, 1.2))
    assert b.compensator_mm == pytest.approx(2.0 * a.compensator_mm, rel=0.01)


def test_optimum_nearly_wavelength_independent(sapphire, quartz):
    # the merit scales by 1/lambda overall, so the argmin does not move
    layer = bi.Layer(sapphire, 0.5)
    cfg_a = FocusingConfig(0.45, 442.0)
    cfg_b = FocusingConfig(0.45, 780.0)
    da, _ = comp.optimize_thickness(layer, quartz, cfg_a, (0.2, 0.5))
    db, _ = comp.optimize_thickness(layer, quartz, cfg_b, (0.2, 0.5))
    assert da.compensator_mm == pytest.approx(db.compensator_mm, abs=3e-4)


def test_merit_grows_away_from_optimum(sapphire, quartz, cfg_cd):
    layer = bi.Layer(sapphire, 0.714286)
    design, _ = comp.optimize_thickness(layer, quartz, cfg_cd, (0.1, 1.0))
    merit = comp._merit_vs_thickness(layer, quartz, cfg_cd)
    t0 = design.compensator_mm
    m0 = merit(t0)
    for dt in (0.01, 0.05, 0.15):
        assert merit(t0 + dt) > m0
        assert merit(t0 - dt) > m0
    # and monotone on each side over these samples
    assert merit(t0 + 0.15) > merit(t0 + 0.05) > merit(t0 + 0.01)
    assert merit(t0 - 0.15) > merit(t0 - 0.05) > merit(t0 - 0.01)


def test_same_sign_material_never_helps(sapphire, cfg_cd):
    # adding more of the same sign only grows the split
    base = comp.compensation_merit(
        bi.LayerStack((bi.Layer(sapphire, 0.5),)), cfg_cd
    )
    for extra in (0.1, 0.3):
        grown = comp.compensation_merit(
            bi.LayerStack((bi.Layer(sapphire, 0.5), bi.Layer(sapphire, extra))),
            cfg_cd,
        )
        assert grown > base


def test_optimizer_bounds_validation(sapphire, quartz, cfg_cd):
    layer = bi.Layer(sapphire, 0.714286)
    for bad in ((0.0, 1.0), (-0.1, 1.0), (0.5, 0.5), (0.8, 0.2), (0.1, 11.0)):
        with pytest.raises(InputError):
            comp.optimize_thickness(layer, quartz, cfg_cd, bad)


def test_optimizer_requires_interior_minimum(sapphire, quartz, cfg_cd):
    layer = bi.Layer(sapphire, 0.714286)
    # true optimum is near 0.49 mm, well outside these bounds
    with pytest.raises(NumericalError) as err:
        comp.optimize_thickness(layer, quartz, cfg_cd, (0.05, 0.2))
    assert hasattr(err.value, "scan")
    ts, ms = zip(*err.value.scan)
    assert len(ts) >= 41
    assert min(ms) == ms[-1]  # merit still falling at the upper bound


def test_residual_ratio_identity_and_errors(sapphire, quartz, fused_silica, cfg_cd):
    layer = bi.Layer(sapphire, 0.714286)
    null_design = comp.DesignResult(sapphire, quartz, 0.714286, 0.0, "optimized")
    report = comp.residual_ratio(layer, null_design, cfg_cd)
    assert report.ratio_percent == 100.0
    assert report.residual_rms == report.uncompensated_rms
    with pytest.raises(InputError, match="zero mode split"):
        comp.residual_ratio(
            bi.Layer(fused_silica, 1.0), null_design, cfg_cd
        )


def test_max_allowable_thickness_reference_value(sapphire):
    cfg = FocusingConfig(0.4, 442.0)
    h = comp.max_allowable_thickness(sapphire, cfg)
    assert h == pytest.approx(0.2514769760354867, abs=2e-3)
    # the merit is linear in h, so the analytic inverse agrees
    per_mm = comp.compensation_merit(
        bi.LayerStack((bi.Layer(sapphire, 1.0),)), cfg
    )
    assert h == pytest.approx((1.0 / 14.0) / per_mm, abs=2e-3)


def test_max_allowable_thickness_scalings(sapphire):
    cfg = FocusingConfig(0.4, 442.0)
    h14 = comp.max_allowable_thickness(sapphire, cfg, criterion_waves=1.0 / 14.0)
    h28 = comp.max_allowable_thickness(sapphire, cfg, criterion_waves=1.0 / 28.0)
    assert h28 == pytest.approx(0.5 * h14, abs=2e-3)
    # doubled birefringence halves the budget
    strong = dataclasses.replace(
        sapphire, n_e=sapphire.n_o + 2.0 * (sapphire.n_e - sapphire.n_o)
    )
    h_strong = comp.max_allowable_thickness(strong, cfg)
    assert h_strong == pytest.approx(0.5 * h14, rel=0.02)


def test_max_allowable_thickness_edge_cases(sapphire, fused_silica):
    cfg = FocusingConfig(0.4, 442.0)
    assert comp.max_allowable_thickness(fused_silica, cfg) == math.inf
    with pytest.raises(InputError):
        comp.max_allowable_thickness(sapphire, cfg, criterion_waves=0.0)
    # an almost isotropic crystal is allowed to exceed the layer bound;
    # the linear scaling is returned instead of a clamped value
    faint = UniaxialMaterial("faint", n_o=1.5, n_e=1.5 + 1e-6)
    h = comp.max_allowable_thickness(faint, cfg)
    assert h > bi.MAX_LAYER_MM
