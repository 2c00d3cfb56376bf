"""Run orchestration: config -> Floquet archive -> artifacts on disk.

Stages run in order (floquet solve, observables, spectra, reconstruction)
with the archive cached on disk when a cache directory is configured.
Every run writes a manifest (config hash, stage timings, error class on
failure) plus deterministic CSV/JSON outputs; two runs of the same config
produce byte-identical files.
"""

from __future__ import annotations

import csv
import hashlib
import json
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np

from . import cache as cache_mod
from . import observables as obs
from . import reconstruct as rc
from . import spectrum as sp
from .config import RunConfig
from .errors import ConfigurationError, FloqmixError
from .floquet import FloquetArchive, solve_floquet_grid

MANIFEST_NAME = "manifest.json"
PIPELINE_VERSION = 1


def config_hash(config: RunConfig) -> str:
    blob = json.dumps(config.canonical_dict(), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:32]


def _fmt(x) -> str:
    """Deterministic shortest-roundtrip float formatting for CSV."""
    return repr(float(x))


def write_csv(path: Path, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([c if isinstance(c, str) else _fmt(c) for c in row])


def write_json(path: Path, payload) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=1)
        fh.write("\n")


def write_gnuplot_matrix(path: Path, x: np.ndarray, y: np.ndarray,
                         z: np.ndarray) -> None:
    """Nonuniform-matrix format: first row carries the y axis."""
    lines = [" ".join([_fmt(len(y))] + [_fmt(v) for v in y])]
    for i, xv in enumerate(x):
        lines.append(" ".join([_fmt(xv)] + [_fmt(v) for v in z[i]]))
    path.write_text("\n".join(lines) + "\n")


def build_archive(config: RunConfig) -> FloquetArchive:
    """Solve (or load from cache) the Floquet archive for a config."""
    cache_dir = cache_mod.cache_directory(config.outputs.cache_dir)
    model, drive, floq = config.model, config.drive, config.floquet
    from .crystal import brillouin_grid
    k_grid = brillouin_grid(model, floq.n_k)
    if cache_dir is not None:
        cached = cache_mod.load_archive(cache_dir, model, drive, floq.mu_max,
                                        floq.n_bands_kept, k_grid)
        if cached is not None:
            return cached
    archive = solve_floquet_grid(model, drive, floq.mu_max, floq.n_bands_kept,
                                 k_grid=k_grid,
                                 skip_resonant=floq.skip_resonant,
                                 workers=floq.workers)
    if cache_dir is not None:
        cache_mod.store_archive(cache_dir, archive)
    return archive


def _observables_stage(config: RunConfig, archive: FloquetArchive,
                       out: Path) -> dict:
    model = config.model
    mu_report = config.xray.mu_report
    mu_window = config.xray.mu_window
    omega = config.drive.photon_energy
    fields = {mu: obs.real_amplitudes(obs.density_amplitude(archive, mu))
              for mu in range(0, mu_window + 1)}
    currents = {mu: obs.current_amplitude(archive, mu)
                for mu in range(1, mu_window + 1)}

    if "csv" in config.outputs.formats:
        header = ["x"] + [f"varrho_{mu}" for mu in sorted(fields)] + \
            [f"j_{mu}" for mu in sorted(currents)]
        rows = []
        for i, x in enumerate(model.x_grid):
            row = [x] + [fields[mu].values[i] for mu in sorted(fields)] + \
                [currents[mu].values[i] for mu in sorted(currents)]
            rows.append(row)
        write_csv(out / "amplitudes.csv", header, rows)

    g1 = 2.0 * np.pi / model.lattice_constant
    g_list = [n * g1 for n in config.xray.reciprocal_orders]
    decs = obs.fourier_decomposition(
        {mu: fields[mu] for mu in range(0, mu_window + 1)}, g_list)
    if "csv" in config.outputs.formats:
        rows = []
        for d in decs:
            for mu in d.orders:
                j = d.order_index(mu)
                rows.append([d.G, mu, d.P_g[j], d.P_u[j],
                             d.modulus[j], d.phase[j]])
        write_csv(out / "fourier.csv",
                  ["G", "mu", "P_g", "P_u", "modulus", "phase"], rows)
    if "json" in config.outputs.formats:
        # fields[0] holds varrho_0 = 2 rho_0, so the electron count is half
        payload = {
            "n_electrons": float(fields[0].integrate()) / 2.0,
            "continuity_residuals": {},
        }
        for mu in range(1, mu_report + 1):
            div = obs.spectral_derivative(currents[mu].values,
                                          model.lattice_constant)
            target = mu * omega * fields[mu].values
            payload["continuity_residuals"][str(mu)] = float(
                np.max(np.abs(div + target)) / max(np.max(np.abs(target)), 1e-300))
        write_json(out / "observables.json", payload)
    return {"fields": fields, "currents": currents, "decompositions": decs}


def _spectrum_stage(config: RunConfig, decs, out: Path) -> dict:
    omega = config.drive.photon_energy
    ws = sp.default_omega_s_grid(omega, config.xray.mu_report,
                                 config.xray.omega_s_points_per_omega)
    tp = sp.default_t_p_grid(omega, config.xray.t_p_points)
    results = {}
    for tau_p in config.xray.tau_p:
        pulse = sp.XrayPulse(duration=tau_p)
        for dec in decs:
            plus, minus = sp.spectrum_pair(dec, pulse, omega, ws, tp,
                                           config.xray.mu_window)
            pm = sp.decompose_pm_G(plus, minus)
            results[(tau_p, dec.G)] = (plus, minus, pm)
            tag = f"tau{tau_p:.4g}_G{dec.G:.4g}"
            if "csv" in config.outputs.formats:
                rows = []
                for i, w in enumerate(ws):
                    for j, t in enumerate(tp):
                        rows.append([w, t, plus.intensity[i, j],
                                     minus.intensity[i, j]])
                write_csv(out / f"spectrum_{tag}.csv",
                          ["omega_s_offset", "t_p", "P_plus", "P_minus"], rows)
                rows = [[w, pm.time_independent[i]] for i, w in enumerate(ws)]
                write_csv(out / f"static_{tag}.csv",
                          ["omega_s_offset", "time_independent"], rows)
            if "gnuplot" in config.outputs.formats:
                write_gnuplot_matrix(out / f"spectrum_{tag}.matrix",
                                     ws, tp, plus.intensity)
    return {"results": results, "omega_s": ws, "t_p": tp}


def _reconstruct_stage(config: RunConfig, decs, fields, out: Path) -> dict:
    omega = config.drive.photon_energy
    ws = sp.default_omega_s_grid(omega, config.xray.mu_report,
                                 config.xray.omega_s_points_per_omega)
    tp = sp.default_t_p_grid(omega, config.xray.t_p_points)
    reports = {}
    for tau_p in config.xray.tau_p:
        pulse = sp.XrayPulse(duration=tau_p)
        report = rc.round_trip_report(decs, pulse, omega,
                                      mu_report=config.xray.mu_report,
                                      omega_s_offsets=ws, t_p=tp,
                                      reference_fields=fields)
        reports[tau_p] = report
        tag = f"tau{tau_p:.4g}"
        if "json" in config.outputs.formats:
            payload = {
                "pulse_duration": report.pulse_duration,
                "mu_report": report.mu_report,
                "t_p_samples": report.t_p_samples,
                "entries": [{
                    "G": e.G, "mu": e.mu,
                    "recovered_modulus": e.recovered_modulus,
                    "recovered_phase": e.recovered_phase,
                    "true_modulus": e.true_modulus,
                    "true_phase": e.true_phase,
                    "modulus_error": e.modulus_error,
                    "phase_error": e.phase_error,
                } for e in report.entries],
                "synthesis_errors": {str(mu): err for mu, err
                                     in report.synthesis_errors.items()},
                "band_limited_errors": {str(mu): err for mu, err
                                        in report.band_limited_errors.items()},
                "broken_chains": {f"{g:.6f}": mu for g, mu
                                  in report.broken_chains.items()},
            }
            write_json(out / f"reconstruction_{tag}.json", payload)
        (out / f"reconstruction_{tag}.txt").write_text(report.summary() + "\n")
    return reports


def _scaling_stage(config: RunConfig, out: Path) -> None:
    """Optional |F_mu| vs field-amplitude sweep for power-law analysis."""
    from .floquet import DriveField
    g1 = 2.0 * np.pi / config.model.lattice_constant
    rows = []
    for intensity in config.intensity_scan:
        drive = DriveField.from_intensity(config.drive.photon_energy,
                                          intensity,
                                          config.drive.polarization_sign)
        archive = solve_floquet_grid(config.model, drive,
                                     config.floquet.mu_max,
                                     config.floquet.n_bands_kept,
                                     n_k=config.floquet.n_k,
                                     workers=config.floquet.workers)
        fields = {mu: obs.real_amplitudes(obs.density_amplitude(archive, mu))
                  for mu in (0, 1, 2)}
        dec = obs.fourier_decomposition(fields, [g1])[0]
        rows.append([intensity, drive.field_amplitude,
                     dec.modulus[dec.order_index(1)],
                     dec.modulus[dec.order_index(2)]])
    write_csv(out / "scaling.csv",
              ["intensity", "field_amplitude", "F1_modulus", "F2_modulus"],
              rows)


def run(config: RunConfig, output_dir: Optional[str] = None) -> Path:
    """Execute all configured stages; returns the artifact directory."""
    out = Path(output_dir or config.outputs.directory)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {
        "pipeline_version": PIPELINE_VERSION,
        "config_hash": config_hash(config),
        "config": config.canonical_dict(),
        "stages": {},
        "status": "running",
    }
    try:
        t0 = time.perf_counter()
        archive = build_archive(config)
        manifest["stages"]["floquet"] = {
            "seconds": round(time.perf_counter() - t0, 6),
            "n_k_effective": archive.n_k_effective,
            "excluded_k": list(archive.excluded_k),
        }

        stage_data = None
        if "observables" in config.outputs.stages or \
                {"spectrum", "reconstruct"} & set(config.outputs.stages):
            t0 = time.perf_counter()
            stage_data = _observables_stage(config, archive, out)
            manifest["stages"]["observables"] = {
                "seconds": round(time.perf_counter() - t0, 6)}

        if "spectrum" in config.outputs.stages:
            t0 = time.perf_counter()
            _spectrum_stage(config, stage_data["decompositions"], out)
            manifest["stages"]["spectrum"] = {
                "seconds": round(time.perf_counter() - t0, 6)}

        if "reconstruct" in config.outputs.stages:
            t0 = time.perf_counter()
            _reconstruct_stage(config, stage_data["decompositions"],
                               stage_data["fields"], out)
            manifest["stages"]["reconstruct"] = {
                "seconds": round(time.perf_counter() - t0, 6)}

        if config.intensity_scan:
            t0 = time.perf_counter()
            _scaling_stage(config, out)
            manifest["stages"]["scaling"] = {
                "seconds": round(time.perf_counter() - t0, 6)}
        manifest["status"] = "ok"
    except FloqmixError as exc:
        manifest["status"] = "error"
        manifest["error_class"] = type(exc).__name__
        manifest["error"] = str(exc)
        write_json(out / MANIFEST_NAME, manifest)
        raise
    write_json(out / MANIFEST_NAME, manifest)
    return out


def _numeric_leaves(payload, prefix=""):
    if isinstance(payload, dict):
        for key, value in payload.items():
            yield from _numeric_leaves(value, f"{prefix}/{key}")
    elif isinstance(payload, list):
        for i, value in enumerate(payload):
            yield from _numeric_leaves(value, f"{prefix}[{i}]")
    elif isinstance(payload, (int, float)) and not isinstance(payload, bool):
        yield prefix, float(payload)


def diff_runs(dir_a, dir_b) -> dict:
    """Field-by-field relative differences between two run directories."""
    dir_a, dir_b = Path(dir_a), Path(dir_b)
    man_a = dir_a / MANIFEST_NAME
    man_b = dir_b / MANIFEST_NAME
    if not man_a.exists() or not man_b.exists():
        raise ConfigurationError("both directories must contain a manifest")
    a = json.loads(man_a.read_text())
    b = json.loads(man_b.read_text())
    if a.get("pipeline_version") != b.get("pipeline_version"):
        raise ConfigurationError("incompatible manifests: pipeline versions differ")

    files_a = sorted(p.name for p in dir_a.glob("*.csv")) + \
        sorted(p.name for p in dir_a.glob("*.json"))
    files_b = sorted(p.name for p in dir_b.glob("*.csv")) + \
        sorted(p.name for p in dir_b.glob("*.json"))
    if files_a != files_b:
        raise ConfigurationError(
            f"incompatible manifests: artifact sets differ "
            f"({set(files_a) ^ set(files_b)})")

    report = {"files": {}, "max_relative_difference": 0.0}
    for name in files_a:
        if name == MANIFEST_NAME:
            continue
        pa, pb = dir_a / name, dir_b / name
        if name.endswith(".csv"):
            rows_a = list(csv.reader(pa.read_text().splitlines()))
            rows_b = list(csv.reader(pb.read_text().splitlines()))
            if rows_a[0] != rows_b[0] or len(rows_a) != len(rows_b):
                raise ConfigurationError(f"incompatible CSV layout in {name}")
            worst = 0.0
            for ra, rb in zip(rows_a[1:], rows_b[1:]):
                for ca, cb in zip(ra, rb):
                    va, vb = float(ca), float(cb)
                    scale = max(abs(va), abs(vb), 1e-300)
                    worst = max(worst, abs(va - vb) / scale)
        else:
            leaves_a = dict(_numeric_leaves(json.loads(pa.read_text())))
            leaves_b = dict(_numeric_leaves(json.loads(pb.read_text())))
            if leaves_a.keys() != leaves_b.keys():
                raise ConfigurationError(f"incompatible JSON layout in {name}")
            worst = 0.0
            for key, va in leaves_a.items():
                vb = leaves_b[key]
                scale = max(abs(va), abs(vb), 1e-300)
                worst = max(worst, abs(va - vb) / scale)
        report["files"][name] = worst
        report["max_relative_difference"] = max(
            report["max_relative_difference"], worst)
    return report
