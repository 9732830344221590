"""Command-line front end writing reproducible file outputs.

Four subcommands: ``materials`` (catalog listing), ``aberration`` (pupil
maps + Zernike table), ``psf`` (lateral/axial intensity grids + metrics),
``design`` (compensator thickness design + residual report).

Every run that writes files also writes ``manifest.txt`` recording the
resolved parameters, SHA-256 digests of the input files, the tool version
and a timestamp. The manifest is the only output containing a timestamp;
all data files are byte-identical across repeated identical runs. Floats
in data files are rendered with %.12g.

Exit codes: 0 success, 2 bad input or configuration, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import os
import sys
from datetime import datetime, timezone

import numpy as np

from . import __version__
from . import birefringence as bi
from . import compensator as comp
from . import psf as psf_mod
from . import wavefront as wf
from .errors import InputError, NumericalError
from .materials import load_catalog
from .zernike import osa_orders


def _fmt(value) -> str:
    if isinstance(value, float):
        return "%.12g" % value
    return str(value)


def _sha256(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            digest.update(block)
    return digest.hexdigest()


def _write_lines(path: str, lines) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in lines:
            fh.write(line + "\n")


def _write_csv(path: str, header: str, rows) -> None:
    lines = [header]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    _write_lines(path, lines)


def _write_pairs_csv(path: str, pairs) -> None:
    _write_csv(path, "key,value", pairs)


def _write_pgm(path: str, intensity: np.ndarray) -> None:
    """16-bit binary portable graymap, peak-normalized, big-endian rows."""
    arr = np.asarray(intensity, dtype=float)
    peak = float(arr.max())
    if peak <= 0.0:
        raise NumericalError("cannot normalize an all-zero image")
    scaled = np.rint(arr / peak * 65535.0).astype(">u2")
    height, width = scaled.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{width} {height}\n65535\n".encode("ascii"))
        fh.write(scaled.tobytes())


class _Manifest:
    def __init__(self, subcommand: str) -> None:
        self.lines = [
            f"subcommand={subcommand}",
            f"version={__version__}",
        ]

    def param(self, key: str, value) -> None:
        self.lines.append(f"param.{key}={_fmt(value)}")

    def input_file(self, label: str, path: str) -> None:
        self.lines.append(f"input.{label}.path={path}")
        self.lines.append(f"input.{label}.sha256={_sha256(path)}")

    def output(self, name: str) -> None:
        self.lines.append(f"output={name}")

    def write(self, out_dir: str) -> None:
        stamp = datetime.now(timezone.utc).isoformat()
        _write_lines(
            os.path.join(out_dir, "manifest.txt"),
            self.lines + [f"timestamp_utc={stamp}"],
        )


def _resolve_material(catalog, name: str):
    try:
        return catalog[name]
    except KeyError:
        raise InputError(
            f"unknown material {name!r}; catalog has {sorted(catalog)}"
        ) from None


def _load_stack(args) -> bi.LayerStack:
    catalog = load_catalog(args.catalog)
    return bi.load_stack(args.stack, catalog)


def _config(args) -> wf.FocusingConfig:
    return wf.FocusingConfig(
        numerical_aperture=args.na,
        wavelength_nm=args.wavelength_nm,
        input_polarization=getattr(args, "polarization", "circular"),
        pupil_rings=args.pupil_rings,
        pupil_spokes=args.pupil_spokes,
        apodization=getattr(args, "apodization", "aplanatic"),
    )


def _common_manifest(manifest: _Manifest, args, cfg: wf.FocusingConfig) -> None:
    manifest.param("na", cfg.numerical_aperture)
    manifest.param("wavelength_nm", cfg.wavelength_nm)
    manifest.param("pupil_rings", cfg.pupil_rings)
    manifest.param("pupil_spokes", cfg.pupil_spokes)
    manifest.param("apodization", cfg.apodization)
    manifest.input_file("stack", args.stack)
    if args.catalog:
        manifest.input_file("catalog", args.catalog)


def cmd_materials(args) -> int:
    catalog = load_catalog(args.catalog)
    signs = {-1: "negative", 0: "isotropic", 1: "positive"}
    if args.format == "machine":
        print("name,n_o,n_e,sign,delta_n")
        for name in sorted(catalog):
            m = catalog[name]
            print(
                f"{m.name},{_fmt(m.n_o)},{_fmt(m.n_e)},"
                f"{signs[m.optical_sign()]},{_fmt(m.delta_n)}"
            )
        return 0
    width = max(len(n) for n in catalog)
    print(f"{'name':<{width}}  {'n_o':>9}  {'n_e':>9}  {'sign':<9}  delta_n")
    for name in sorted(catalog):
        m = catalog[name]
        print(
            f"{m.name:<{width}}  {m.n_o:>9.5f}  {m.n_e:>9.5f}  "
            f"{signs[m.optical_sign()]:<9}  {m.delta_n:+.5f}"
        )
    return 0


def cmd_aberration(args) -> int:
    stack = _load_stack(args)
    cfg = _config(args)
    os.makedirs(args.out_dir, exist_ok=True)
    wmap = wf.compute_wavefront(stack, cfg)
    delta = wmap.delta
    grid = cfg.grid

    rows = zip(grid.rho, wmap.w_ordinary, wmap.w_extraordinary, delta)
    _write_csv(
        os.path.join(args.out_dir, "wavefront.csv"),
        "rho,w_ordinary_waves,w_extraordinary_waves,delta_w_waves",
        ([float(a), float(b), float(c), float(d)] for a, b, c, d in rows),
    )

    spectrum = wf.zernike_decompose(delta, grid, args.max_order)
    zrows = []
    for j, c in enumerate(spectrum.coefficients):
        n, m = osa_orders(j)
        zrows.append([j, n, m, float(c)])
    _write_csv(
        os.path.join(args.out_dir, "zernike.csv"),
        "index,n,m,coefficient_waves",
        zrows,
    )

    pairs: list[tuple[str, object]] = [
        ("numerical_aperture", cfg.numerical_aperture),
        ("wavelength_nm", cfg.wavelength_nm),
        ("total_thickness_mm", stack.total_thickness_mm),
        ("split_rms_waves", wf.split_rms(stack, cfg)),
        ("best_focus_residual_waves", wf.best_focus_residual(stack, cfg)),
        ("max_abs_delta_w_waves", float(np.max(np.abs(delta)))),
        ("zernike_defocus_waves", spectrum.coefficient(2, 0)),
        ("zernike_primary_spherical_waves", spectrum.coefficient(4, 0)),
        ("mode_focus_split_um", wf.mode_focus_split_um(stack, cfg)),
    ]
    split_total = 0.0
    for i, layer in enumerate(stack.layers):
        if layer.material.is_isotropic():
            continue
        split = bi.focal_split_um(layer.thickness_mm, layer.material)
        split_total += split
        pairs.append((f"focal_split_layer_{i}_{layer.material.name}_um", split))
    pairs.append(("focal_split_total_um", split_total))

    _write_pairs_csv(os.path.join(args.out_dir, "summary.csv"), pairs)
    _write_lines(
        os.path.join(args.out_dir, "summary.txt"),
        [f"{key} = {_fmt(value)}" for key, value in pairs],
    )

    manifest = _Manifest("aberration")
    _common_manifest(manifest, args, cfg)
    manifest.param("max_order", args.max_order)
    for name in ("wavefront.csv", "zernike.csv", "summary.csv", "summary.txt"):
        manifest.output(name)
    manifest.write(args.out_dir)
    return 0


def cmd_psf(args) -> int:
    stack = _load_stack(args)
    cfg = _config(args)
    os.makedirs(args.out_dir, exist_ok=True)

    report = psf_mod.resolution_report(stack, cfg, args.lens_reference)
    defocus = args.defocus_um if args.defocus_um is not None else report.best_focus_um

    grid = psf_mod.vector_psf(
        stack,
        cfg,
        half_width_um=args.half_width_um,
        n_points=args.points,
        defocus_um=defocus,
        lens_reference=args.lens_reference,
    )
    lateral_rows = []
    for iy, y in enumerate(grid.coords_rows_um):
        for ix, x in enumerate(grid.coords_cols_um):
            lateral_rows.append([float(x), float(y), float(grid.intensity[iy, ix])])
    _write_csv(
        os.path.join(args.out_dir, "lateral.csv"),
        "x_um,y_um,intensity",
        lateral_rows,
    )
    _write_pgm(os.path.join(args.out_dir, "lateral.pgm"), grid.intensity)

    profile = psf_mod.axial_profile(
        stack,
        cfg,
        z_min_um=args.z_min_um,
        z_max_um=args.z_max_um,
        n_z=args.z_points,
        lens_reference=args.lens_reference,
    )
    _write_csv(
        os.path.join(args.out_dir, "axial.csv"),
        "z_um,intensity,intensity_ordinary,intensity_extraordinary",
        (
            [float(z), float(t), float(o), float(e)]
            for z, t, o, e in zip(
                profile.z_um,
                profile.intensity,
                profile.intensity_ordinary,
                profile.intensity_extraordinary,
            )
        ),
    )

    pairs: list[tuple[str, object]] = [
        ("numerical_aperture", cfg.numerical_aperture),
        ("wavelength_nm", cfg.wavelength_nm),
        ("polarization", cfg.input_polarization),
        ("lens_reference", args.lens_reference),
        ("strehl", report.strehl),
        ("best_focus_um", report.best_focus_um),
        ("lateral_plane_um", defocus),
        ("fwhm_unaberrated_um", report.fwhm_unaberrated_um),
        ("fwhm_best_focus_um", report.fwhm_best_focus_um),
        ("fwhm_ratio", report.fwhm_ratio),
        ("resolution_factor", report.factor),
        ("mode_separation_um", report.mode_separation_um),
        ("geometric_spread_um", report.geometric_spread_um),
        ("depth_of_focus_um", profile.depth_of_focus_um),
        ("grid_spacing_nm", grid.spacing_nm),
        ("axial_peak_count", len(profile.peaks_um)),
    ]
    for i, z in enumerate(profile.peaks_um):
        pairs.append((f"axial_peak_{i}_um", z))

    _write_pairs_csv(os.path.join(args.out_dir, "metrics.csv"), pairs)
    _write_lines(
        os.path.join(args.out_dir, "summary.txt"),
        [f"{key} = {_fmt(value)}" for key, value in pairs],
    )

    manifest = _Manifest("psf")
    _common_manifest(manifest, args, cfg)
    manifest.param("polarization", cfg.input_polarization)
    manifest.param("lens_reference", args.lens_reference)
    manifest.param("half_width_um", args.half_width_um)
    manifest.param("points", args.points)
    manifest.param("lateral_plane_um", defocus)
    manifest.param("z_points", args.z_points)
    for name in ("lateral.csv", "lateral.pgm", "axial.csv", "metrics.csv", "summary.txt"):
        manifest.output(name)
    manifest.write(args.out_dir)
    return 0


def cmd_design(args) -> int:
    catalog = load_catalog(args.catalog)
    substrate = _resolve_material(catalog, args.substrate)
    compensator_mat = _resolve_material(catalog, args.compensator)
    cfg = wf.FocusingConfig(
        numerical_aperture=args.na,
        wavelength_nm=args.wavelength_nm,
        pupil_rings=args.pupil_rings,
        pupil_spokes=args.pupil_spokes,
    )
    os.makedirs(args.out_dir, exist_ok=True)

    if args.mode == "closed":
        if args.total_mm is None:
            raise InputError("--total-mm is required with --mode closed")
        design = comp.design_closed_form(args.total_mm, substrate, compensator_mat)
        layer = bi.Layer(substrate, design.substrate_mm)
    else:
        if args.substrate_mm is None:
            raise InputError("--substrate-mm is required with --mode optimize")
        layer = bi.Layer(substrate, args.substrate_mm)
        bounds = (args.bounds_mm[0], args.bounds_mm[1])
        design, _ = comp.optimize_thickness(layer, compensator_mat, cfg, bounds)
    report = comp.residual_ratio(layer, design, cfg)

    pairs: list[tuple[str, object]] = [
        ("method", design.method),
        ("substrate", design.substrate.name),
        ("compensator", design.compensator.name),
        ("substrate_mm", design.substrate_mm),
        ("compensator_mm", design.compensator_mm),
        ("thickness_ratio", design.ratio),
        ("total_mm", design.total_mm),
        ("numerical_aperture", cfg.numerical_aperture),
        ("wavelength_nm", cfg.wavelength_nm),
        ("residual_rms_waves", report.residual_rms),
        ("uncompensated_rms_waves", report.uncompensated_rms),
        ("residual_percent", report.ratio_percent),
    ]
    _write_pairs_csv(os.path.join(args.out_dir, "design.csv"), pairs)
    _write_lines(
        os.path.join(args.out_dir, "summary.txt"),
        [f"{key} = {_fmt(value)}" for key, value in pairs],
    )

    manifest = _Manifest("design")
    manifest.param("mode", args.mode)
    manifest.param("substrate", args.substrate)
    manifest.param("compensator", args.compensator)
    manifest.param("na", cfg.numerical_aperture)
    manifest.param("wavelength_nm", cfg.wavelength_nm)
    if args.total_mm is not None:
        manifest.param("total_mm", args.total_mm)
    if args.substrate_mm is not None:
        manifest.param("substrate_mm", args.substrate_mm)
    if args.mode == "optimize":
        manifest.param("bounds_mm", f"{args.bounds_mm[0]},{args.bounds_mm[1]}")
    if args.catalog:
        manifest.input_file("catalog", args.catalog)
    for name in ("design.csv", "summary.txt"):
        manifest.output(name)
    manifest.write(args.out_dir)
    return 0


def _parse_bounds(text: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("expected LO,HI in mm")
    try:
        return (float(parts[0]), float(parts[1]))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--na", type=float, required=True,
                        help="numerical aperture, (0, 1)")
    parser.add_argument("--wavelength-nm", type=float, required=True,
                        help="vacuum wavelength in nm")
    parser.add_argument("--pupil-rings", type=int, default=256)
    parser.add_argument("--pupil-spokes", type=int, default=512)
    parser.add_argument("--catalog", default=None,
                        help="material catalog file merged over the built-ins")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="birefocus",
        description="Birefringent-substrate focusing analysis and "
                    "compensator design.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_mat = sub.add_parser("materials", help="list the material catalog")
    p_mat.add_argument("--catalog", default=None)
    p_mat.add_argument("--format", choices=("human", "machine"), default="human")
    p_mat.set_defaults(func=cmd_materials)

    p_ab = sub.add_parser("aberration", help="pupil aberration maps and Zernike table")
    p_ab.add_argument("--stack", required=True, help="layer stack file")
    _add_config_flags(p_ab)
    p_ab.add_argument("--max-order", type=int, default=12)
    p_ab.add_argument("--out-dir", required=True)
    p_ab.set_defaults(func=cmd_aberration)

    p_psf = sub.add_parser("psf", help="focal intensity grids and metrics")
    p_psf.add_argument("--stack", required=True)
    _add_config_flags(p_psf)
    p_psf.add_argument("--polarization", choices=bi.POLARIZATIONS,
                       default="circular")
    p_psf.add_argument("--apodization", choices=wf.APODIZATIONS,
                       default="aplanatic")
    p_psf.add_argument("--lens-reference", choices=wf.LENS_REFERENCES,
                       default="mean")
    p_psf.add_argument("--half-width-um", type=float, default=2.0)
    p_psf.add_argument("--points", type=int, default=121)
    p_psf.add_argument("--defocus-um", type=float, default=None,
                       help="lateral plane position; default: best focus")
    p_psf.add_argument("--z-min-um", type=float, default=None)
    p_psf.add_argument("--z-max-um", type=float, default=None)
    p_psf.add_argument("--z-points", type=int, default=801)
    p_psf.add_argument("--out-dir", required=True)
    p_psf.set_defaults(func=cmd_psf)

    p_des = sub.add_parser("design", help="compensator thickness design")
    p_des.add_argument("--substrate", default="sapphire")
    p_des.add_argument("--compensator", default="quartz")
    p_des.add_argument("--mode", choices=("closed", "optimize"), default="closed")
    p_des.add_argument("--total-mm", type=float, default=None,
                       help="total thickness budget (closed mode)")
    p_des.add_argument("--substrate-mm", type=float, default=None,
                       help="fixed substrate thickness (optimize mode)")
    p_des.add_argument("--bounds-mm", type=_parse_bounds, default=(0.05, 2.0),
                       help="compensator search interval LO,HI in mm")
    p_des.add_argument("--na", type=float, required=True)
    p_des.add_argument("--wavelength-nm", type=float, required=True)
    p_des.add_argument("--pupil-rings", type=int, default=256)
    p_des.add_argument("--pupil-spokes", type=int, default=512)
    p_des.add_argument("--catalog", default=None)
    p_des.add_argument("--out-dir", required=True)
    p_des.set_defaults(func=cmd_design)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
