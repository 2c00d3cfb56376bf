"""End-to-end CLI and pipeline behavior: exit codes, artifact layout,
determinism, caching, and run comparison."""

import json

import numpy as np
import pytest

from floqmix.cli import main
from floqmix.errors import ConfigurationError
from floqmix.pipeline import diff_runs

BASE = """
[crystal]
lattice_constant = 8.0
potential = [[1, -0.15], [2, -0.05]]
n_occupied_bands = 1
n_planewaves = 13
n_grid = 64

[drive]
photon_energy = "1.55 eV"
{drive_line}

[floquet]
mu_max = 2
n_bands_kept = 6
n_k = 4

[xray]
tau_p = ["0.75 T"]
G_orders = [1, 2]
mu_window = 2
t_p_points = 8
omega_s_points_per_omega = 16
"""


def write_config(tmp_path, name, drive_line, extra=""):
    path = tmp_path / f"{name}.toml"
    path.write_text(BASE.format(drive_line=drive_line) + extra)
    return path


def run_cli(args):
    return main([str(a) for a in args])


# --- run verb -----------------------------------------------------------------

def test_zero_field_run_produces_static_artifacts(tmp_path):
    cfg = write_config(tmp_path, "zero", "field_amplitude = 0.0")
    out = tmp_path / "out_zero"
    assert run_cli(["run", cfg, "-o", out]) == 0

    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["status"] == "ok"
    assert manifest["stages"]["floquet"]["excluded_k"] == []

    observables = json.loads((out / "observables.json").read_text())
    assert observables["n_electrons"] == pytest.approx(2.0, abs=1e-9)
    for residual in observables["continuity_residuals"].values():
        assert residual == 0.0

    # only the static order carries spectral weight
    lines = (out / "fourier.csv").read_text().splitlines()
    assert lines[0].split(",")[0] == "G"
    for line in lines[1:]:
        _, mu, _, _, modulus, _ = line.split(",")
        if int(float(mu)) > 0:
            assert abs(float(modulus)) < 1e-12

    recon = json.loads(next(out.glob("reconstruction_*.json")).read_text())
    assert recon["entries"] == []
    assert set(recon["broken_chains"].values()) == {1}
    assert recon["synthesis_errors"]["1"] == 0.0


def test_csv_artifacts_use_crlf(tmp_path):
    cfg = write_config(tmp_path, "zero", "field_amplitude = 0.0")
    out = tmp_path / "out_crlf"
    assert run_cli(["run", cfg, "-o", out]) == 0
    raw = (out / "amplitudes.csv").read_bytes()
    assert b"\r\n" in raw


def test_unknown_key_exits_with_config_code(tmp_path):
    cfg = write_config(tmp_path, "typo", "field_amplitude = 0.0",
                       extra="\n[outputs]\ndirectroy = \"x\"\n")
    assert run_cli(["run", cfg]) == 2
    assert run_cli(["run", tmp_path / "missing.toml"]) == 2


def test_resonant_run_exits_with_resonance_code(tmp_path):
    cfg = tmp_path / "resonant.toml"
    cfg.write_text("""
[crystal]
lattice_constant = 8.0
potential = [[1, -0.15], [2, -0.05]]
n_occupied_bands = 1

[drive]
photon_energy = 0.05
intensity = "5e14 W/cm^2"

[floquet]
mu_max = 20
n_bands_kept = 10
n_k = 4
skip_resonant = false

[xray]
tau_p = ["0.75 T"]
G_orders = [1]
mu_window = 2
t_p_points = 8
omega_s_points_per_omega = 16
""")
    out = tmp_path / "out_res"
    with pytest.warns(UserWarning):
        assert run_cli(["run", cfg, "-o", out]) == 4
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["status"] == "error"
    assert manifest["error_class"] == "ResonanceError"


# --- diff verb ----------------------------------------------------------------

def test_repeated_runs_are_bit_identical(tmp_path):
    cfg = write_config(tmp_path, "weak", 'intensity = "2e11 W/cm^2"')
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    assert run_cli(["run", cfg, "-o", out_a]) == 0
    assert run_cli(["run", cfg, "-o", out_b]) == 0
    report = diff_runs(out_a, out_b)
    assert report["max_relative_difference"] == 0.0
    assert run_cli(["diff", out_a, out_b]) == 0
    # byte-level check on every artifact except the timed manifest
    for path_a in sorted(out_a.iterdir()):
        if path_a.name == "manifest.json":
            continue
        assert path_a.read_bytes() == (out_b / path_a.name).read_bytes()


def test_diff_flags_numerical_differences(tmp_path):
    cfg_a = write_config(tmp_path, "weak", 'intensity = "2e11 W/cm^2"')
    cfg_b = write_config(tmp_path, "weaker", 'intensity = "1e11 W/cm^2"')
    out_a = tmp_path / "da"
    out_b = tmp_path / "db"
    assert run_cli(["run", cfg_a, "-o", out_a]) == 0
    assert run_cli(["run", cfg_b, "-o", out_b]) == 0
    assert run_cli(["diff", out_a, out_b]) == 3
    assert run_cli(["diff", out_a, out_b, "--tolerance", "10.0"]) == 0


def test_diff_rejects_incompatible_runs(tmp_path):
    cfg = write_config(tmp_path, "weak", 'intensity = "2e11 W/cm^2"')
    out_a = tmp_path / "ia"
    assert run_cli(["run", cfg, "-o", out_a]) == 0
    with pytest.raises(ConfigurationError):
        diff_runs(out_a, tmp_path)  # no manifest on the other side
    # tampered pipeline version
    out_b = tmp_path / "ib"
    assert run_cli(["run", cfg, "-o", out_b]) == 0
    manifest = json.loads((out_b / "manifest.json").read_text())
    manifest["pipeline_version"] = 999
    (out_b / "manifest.json").write_text(json.dumps(manifest))
    assert run_cli(["diff", out_a, out_b]) == 2
    # mismatched artifact sets
    out_c = tmp_path / "ic"
    assert run_cli(["run", cfg, "-o", out_c]) == 0
    (out_c / "fourier.csv").unlink()
    with pytest.raises(ConfigurationError):
        diff_runs(out_a, out_c)


# --- cache and inspect --------------------------------------------------------

def test_cache_warm_run_matches_cold_run(tmp_path, monkeypatch):
    cache_dir = tmp_path / "cache"
    monkeypatch.setenv("FLOQMIX_CACHE_DIR", str(cache_dir))
    cfg = write_config(tmp_path, "weak", 'intensity = "2e11 W/cm^2"')
    out_cold = tmp_path / "cold"
    out_warm = tmp_path / "warm"
    assert run_cli(["run", cfg, "-o", out_cold]) == 0
    entries = list(cache_dir.glob("floquet-v*.npz"))
    assert len(entries) == 1
    assert run_cli(["run", cfg, "-o", out_warm]) == 0
    assert len(list(cache_dir.glob("floquet-v*.npz"))) == 1  # cache hit
    assert diff_runs(out_cold, out_warm)["max_relative_difference"] == 0.0
    # inspect summarizes the cached archive
    assert run_cli(["inspect", entries[0]]) == 0
    assert run_cli(["inspect", cache_dir / "nope.npz"]) == 2


def test_inspect_reports_archive_dimensions(tmp_path, monkeypatch, capsys):
    cache_dir = tmp_path / "cache2"
    monkeypatch.setenv("FLOQMIX_CACHE_DIR", str(cache_dir))
    cfg = write_config(tmp_path, "weak", 'intensity = "2e11 W/cm^2"')
    assert run_cli(["run", cfg, "-o", tmp_path / "o"]) == 0
    entry = next(cache_dir.glob("floquet-v*.npz"))
    capsys.readouterr()
    assert run_cli(["inspect", entry]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["n_k"] == 4
    assert summary["mu_max"] == 2
    assert summary["n_bands_kept"] == 6
    assert summary["n_occupied_bands"] == 1
    assert summary["min_overlap"] > 0.99
