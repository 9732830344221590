"""End-to-end checks of the command line tool via its main() entry point."""

import filecmp
import os

import numpy as np
import pytest

from birefocus import cli
from birefocus.zernike import mode_count

FAST = ["--pupil-rings", "64", "--pupil-spokes", "128"]


@pytest.fixture()
def stack_file(tmp_path):
    path = tmp_path / "stack.txt"
    path.write_text("layer: sapphire 1.0\n", encoding="utf-8")
    return str(path)


@pytest.fixture()
def cd_stack_file(tmp_path):
    path = tmp_path / "cd.txt"
    path.write_text(
        "layer: sapphire 0.714286\nlayer: quartz 0.485714\n", encoding="utf-8"
    )
    return str(path)


def _read_pairs(path):
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        assert fh.readline().strip() == "key,value"
        for line in fh:
            key, _, value = line.strip().partition(",")
            out[key] = value
    return out


def test_materials_human_format(capsys):
    assert cli.main(["materials"]) == 0
    out = capsys.readouterr().out
    assert "sapphire" in out and "quartz" in out
    assert "negative" in out and "positive" in out and "isotropic" in out


def test_materials_machine_format(capsys):
    assert cli.main(["materials", "--format", "machine"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "name,n_o,n_e,sign,delta_n"
    rows = {l.split(",")[0]: l.split(",") for l in lines[1:]}
    assert rows["sapphire"][3] == "negative"
    assert float(rows["sapphire"][1]) == 1.78038
    assert rows["air"][3] == "isotropic"


def test_materials_with_custom_catalog(tmp_path, capsys):
    cat = tmp_path / "extra.txt"
    cat.write_text("name = calcite\nn_o = 1.658\nn_e = 1.486\n", encoding="utf-8")
    assert cli.main(["materials", "--catalog", str(cat)]) == 0
    assert "calcite" in capsys.readouterr().out


def test_materials_bad_catalog_exit_code(tmp_path):
    cat = tmp_path / "bad.txt"
    cat.write_text("name = broken\nn_o = not a number\nn_e = 1.5\n", encoding="utf-8")
    assert cli.main(["materials", "--catalog", str(cat)]) == 2


def test_aberration_outputs(tmp_path, stack_file):
    out = tmp_path / "ab"
    rc = cli.main(
        ["aberration", "--stack", stack_file, "--na", "0.4",
         "--wavelength-nm", "442", "--out-dir", str(out)] + FAST
    )
    assert rc == 0
    for name in ("wavefront.csv", "zernike.csv", "summary.csv", "summary.txt",
                 "manifest.txt"):
        assert (out / name).exists()

    wavefront = (out / "wavefront.csv").read_text().splitlines()
    assert wavefront[0] == "rho,w_ordinary_waves,w_extraordinary_waves,delta_w_waves"
    assert len(wavefront) == 1 + 64  # header + one row per ring

    zernike = (out / "zernike.csv").read_text().splitlines()
    assert len(zernike) == 1 + mode_count(12)

    pairs = _read_pairs(out / "summary.csv")
    assert float(pairs["split_rms_waves"]) * 442.0 == pytest.approx(
        125.29880914646263, rel=1e-6
    )
    assert float(pairs["focal_split_total_um"]) == pytest.approx(9.3463, abs=1e-3)
    assert float(pairs["mode_focus_split_um"]) == pytest.approx(-9.4913, abs=1e-2)
    assert "focal_split_layer_0_sapphire_um" in pairs

    manifest = (out / "manifest.txt").read_text()
    assert "subcommand=aberration" in manifest
    assert "param.na=0.4" in manifest
    assert "input.stack.sha256=" in manifest
    assert "timestamp_utc=" in manifest


def test_aberration_isotropic_stack(tmp_path):
    stack = tmp_path / "iso.txt"
    stack.write_text("layer: fused-silica 1.0\n", encoding="utf-8")
    out = tmp_path / "iso_out"
    rc = cli.main(
        ["aberration", "--stack", str(stack), "--na", "0.4",
         "--wavelength-nm", "442", "--out-dir", str(out)] + FAST
    )
    assert rc == 0
    pairs = _read_pairs(out / "summary.csv")
    assert float(pairs["split_rms_waves"]) == 0.0
    assert float(pairs["focal_split_total_um"]) == 0.0


def test_psf_outputs(tmp_path, stack_file):
    out = tmp_path / "psf"
    rc = cli.main(
        ["psf", "--stack", stack_file, "--na", "0.4", "--wavelength-nm", "442",
         "--half-width-um", "0.5", "--points", "41", "--z-points", "101",
         "--out-dir", str(out)] + FAST
    )
    assert rc == 0
    for name in ("lateral.csv", "lateral.pgm", "axial.csv", "metrics.csv",
                 "summary.txt", "manifest.txt"):
        assert (out / name).exists()

    lateral = (out / "lateral.csv").read_text().splitlines()
    assert lateral[0] == "x_um,y_um,intensity"
    assert len(lateral) == 1 + 41 * 41

    axial = (out / "axial.csv").read_text().splitlines()
    assert axial[0] == "z_um,intensity,intensity_ordinary,intensity_extraordinary"
    assert len(axial) == 1 + 101

    metrics = _read_pairs(out / "metrics.csv")
    assert float(metrics["strehl"]) < 0.7  # heavily aberrated plate
    assert float(metrics["resolution_factor"]) == pytest.approx(3.98, abs=0.15)
    assert float(metrics["mode_separation_um"]) == pytest.approx(-9.49, abs=0.05)
    assert int(metrics["axial_peak_count"]) >= 2
    assert "axial_peak_0_um" in metrics
    # the lateral plane defaults to the best focus
    assert float(metrics["lateral_plane_um"]) == pytest.approx(
        float(metrics["best_focus_um"])
    )

    pgm = (out / "lateral.pgm").read_bytes()
    assert pgm.startswith(b"P5\n41 41\n65535\n")
    header_len = len(b"P5\n41 41\n65535\n")
    assert len(pgm) == header_len + 41 * 41 * 2
    pixels = np.frombuffer(pgm[header_len:], dtype=">u2").reshape(41, 41)
    assert pixels.max() == 65535  # peak-normalized


def test_psf_explicit_plane_and_range(tmp_path, stack_file):
    out = tmp_path / "psf2"
    rc = cli.main(
        ["psf", "--stack", stack_file, "--na", "0.4", "--wavelength-nm", "442",
         "--half-width-um", "0.5", "--points", "41", "--z-points", "51",
         "--defocus-um", "2.5", "--z-min-um", "-3", "--z-max-um", "3",
         "--out-dir", str(out)] + FAST
    )
    assert rc == 0
    metrics = _read_pairs(out / "metrics.csv")
    assert float(metrics["lateral_plane_um"]) == 2.5
    axial = (out / "axial.csv").read_text().splitlines()
    first = float(axial[1].split(",")[0])
    last = float(axial[-1].split(",")[0])
    assert first == -3.0 and last == 3.0


def test_psf_undersampled_grid_exit_code(tmp_path, stack_file):
    out = tmp_path / "psf3"
    rc = cli.main(
        ["psf", "--stack", stack_file, "--na", "0.4", "--wavelength-nm", "442",
         "--half-width-um", "3.0", "--points", "11", "--out-dir", str(out)] + FAST
    )
    assert rc == 2


def test_design_closed_mode(tmp_path):
    out = tmp_path / "design"
    rc = cli.main(
        ["design", "--mode", "closed", "--total-mm", "1.2", "--na", "0.45",
         "--wavelength-nm", "442", "--out-dir", str(out)] + FAST
    )
    assert rc == 0
    pairs = _read_pairs(out / "design.csv")
    assert pairs["method"] == "closed_form"
    assert float(pairs["substrate_mm"]) == pytest.approx(0.714285714286, rel=1e-9)
    assert float(pairs["compensator_mm"]) == pytest.approx(0.485714285714, rel=1e-9)
    assert float(pairs["thickness_ratio"]) == pytest.approx(0.68, rel=1e-9)
    assert float(pairs["residual_percent"]) < 2.0


def test_design_optimize_mode(tmp_path):
    out = tmp_path / "designo"
    rc = cli.main(
        ["design", "--mode", "optimize", "--substrate-mm", "0.714286",
         "--bounds-mm", "0.1,1.0", "--na", "0.45", "--wavelength-nm", "442",
         "--out-dir", str(out)] + FAST
    )
    assert rc == 0
    pairs = _read_pairs(out / "design.csv")
    assert pairs["method"] == "optimized"
    assert 0.67 <= float(pairs["thickness_ratio"]) <= 0.70
    assert float(pairs["residual_percent"]) < 0.5


def test_design_missing_required_value(tmp_path):
    rc = cli.main(
        ["design", "--mode", "closed", "--na", "0.45", "--wavelength-nm", "442",
         "--out-dir", str(tmp_path / "x")] + FAST
    )
    assert rc == 2
    rc = cli.main(
        ["design", "--mode", "optimize", "--na", "0.45", "--wavelength-nm", "442",
         "--out-dir", str(tmp_path / "y")] + FAST
    )
    assert rc == 2


def test_design_no_interior_minimum_exit_code(tmp_path):
    rc = cli.main(
        ["design", "--mode", "optimize", "--substrate-mm", "0.714286",
         "--bounds-mm", "0.05,0.15", "--na", "0.45", "--wavelength-nm", "442",
         "--out-dir", str(tmp_path / "z")] + FAST
    )
    assert rc == 3


def test_bad_inputs_exit_code_two(tmp_path, stack_file):
    out = str(tmp_path / "o")
    # NA out of range
    assert cli.main(
        ["aberration", "--stack", stack_file, "--na", "1.5",
         "--wavelength-nm", "442", "--out-dir", out] + FAST
    ) == 2
    # unknown material in the stack file
    bad = tmp_path / "bad_stack.txt"
    bad.write_text("layer: adamantium 1.0\n", encoding="utf-8")
    assert cli.main(
        ["aberration", "--stack", str(bad), "--na", "0.4",
         "--wavelength-nm", "442", "--out-dir", out] + FAST
    ) == 2
    # missing stack file
    assert cli.main(
        ["aberration", "--stack", str(tmp_path / "none.txt"), "--na", "0.4",
         "--wavelength-nm", "442", "--out-dir", out] + FAST
    ) == 2
    # same-sign design pair
    assert cli.main(
        ["design", "--substrate", "quartz", "--compensator", "quartz",
         "--mode", "closed", "--total-mm", "1.0", "--na", "0.45",
         "--wavelength-nm", "442", "--out-dir", out] + FAST
    ) == 2
    # unknown design material
    assert cli.main(
        ["design", "--substrate", "mithril", "--mode", "closed",
         "--total-mm", "1.0", "--na", "0.45", "--wavelength-nm", "442",
         "--out-dir", out] + FAST
    ) == 2


def test_missing_required_flag_exits_via_argparse(tmp_path, stack_file):
    with pytest.raises(SystemExit) as exc:
        cli.main(["aberration", "--stack", stack_file, "--out-dir", "x"])
    assert exc.value.code == 2


def _run_twice(args, dir_a, dir_b):
    assert cli.main(args + ["--out-dir", str(dir_a)]) == 0
    assert cli.main(args + ["--out-dir", str(dir_b)]) == 0
    names = sorted(os.listdir(dir_a))
    assert names == sorted(os.listdir(dir_b))
    for name in names:
        if name == "manifest.txt":
            a = (dir_a / name).read_text().splitlines()
            b = (dir_b / name).read_text().splitlines()
            diff = [
                (x, y) for x, y in zip(a, b) if x != y
            ]
            assert all(x.startswith("timestamp_utc=") for x, _ in diff)
        else:
            assert filecmp.cmp(dir_a / name, dir_b / name, shallow=False), name


def test_reruns_byte_identical_aberration(tmp_path, cd_stack_file):
    args = ["aberration", "--stack", cd_stack_file, "--na", "0.45",
            "--wavelength-nm", "442"] + FAST
    _run_twice(args, tmp_path / "a", tmp_path / "b")


def test_reruns_byte_identical_psf(tmp_path, stack_file):
    args = ["psf", "--stack", stack_file, "--na", "0.4", "--wavelength-nm",
            "442", "--half-width-um", "0.4", "--points", "33",
            "--z-points", "61"] + FAST
    _run_twice(args, tmp_path / "a", tmp_path / "b")


def test_reruns_byte_identical_design(tmp_path):
    args = ["design", "--mode", "optimize", "--substrate-mm", "0.714286",
            "--bounds-mm", "0.3,0.7", "--na", "0.45",
            "--wavelength-nm", "442"] + FAST
    _run_twice(args, tmp_path / "a", tmp_path / "b")
