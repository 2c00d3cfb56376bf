"""Disk cache for Floquet archives, keyed by a content hash.

Cache entries are compressed npz files named by the SHA-256 of the
canonical parameter set (model, drive, mu_max, n_bands_kept, k grid) plus
a format version, so stale layouts are never read back. The cache
directory comes from the FLOQMIX_CACHE_DIR environment variable or an
explicit argument; with neither set, caching is disabled.
"""

from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path
from typing import Optional

import numpy as np

from .crystal import BlochSolution, CrystalModel, solve_bloch
from .errors import ConfigurationError
from .floquet import DriveField, FloquetArchive, FloquetSolution

CACHE_FORMAT_VERSION = 1
ENV_CACHE_DIR = "FLOQMIX_CACHE_DIR"


def cache_directory(explicit: Optional[str] = None) -> Optional[Path]:
    path = explicit or os.environ.get(ENV_CACHE_DIR)
    return Path(path) if path else None


def archive_key(model: CrystalModel, drive: DriveField, mu_max: int,
                n_bands_kept: int, k_grid: np.ndarray) -> str:
    payload = {
        "version": CACHE_FORMAT_VERSION,
        "lattice_constant": model.lattice_constant,
        "potential": {str(n): [v.real, v.imag]
                      for n, v in sorted(model.potential_coefficients.items())},
        "n_occupied_bands": model.n_occupied_bands,
        "spin_degeneracy": model.spin_degeneracy,
        "n_planewaves": model.n_planewaves,
        "scissors_shift": model.scissors_shift,
        "n_grid": model.n_grid,
        "photon_energy": drive.photon_energy,
        "field_amplitude": drive.field_amplitude,
        "polarization_sign": drive.polarization_sign,
        "mu_max": mu_max,
        "n_bands_kept": n_bands_kept,
        "k_grid": [float(k) for k in k_grid],
    }
    digest = hashlib.sha256(
        json.dumps(payload, sort_keys=True).encode()).hexdigest()
    return f"floquet-v{CACHE_FORMAT_VERSION}-{digest[:32]}"


def store_archive(directory: Path, archive: FloquetArchive) -> Path:
    directory.mkdir(parents=True, exist_ok=True)
    key = archive_key(archive.model, archive.drive, archive.mu_max,
                      archive.n_bands_kept, archive.k_grid)
    n_occ = archive.model.n_occupied_bands
    data = {
        "version": np.array(CACHE_FORMAT_VERSION),
        "k_grid": archive.k_grid,
        "k_used": np.array([b.k for b in archive.bloch]),
        "excluded_k": np.array(archive.excluded_k, dtype=float),
        "band_energies": np.stack([b.band_energies for b in archive.bloch]),
        "coefficients": np.stack([b.coefficients for b in archive.bloch]),
        "quasienergies": np.array(
            [[s.quasienergy for s in row] for row in archive.solutions]),
        "overlaps": np.array(
            [[s.overlap_with_fieldfree for s in row] for row in archive.solutions]),
        "floquet_coefficients": np.stack(
            [np.stack([s.coefficients for s in row]) for row in archive.solutions]),
    }
    path = directory / f"{key}.npz"
    tmp = path.with_suffix(".npz.tmp")
    with open(tmp, "wb") as fh:
        np.savez_compressed(fh, **data)
    os.replace(tmp, path)
    return path


def load_archive(directory: Path, model: CrystalModel, drive: DriveField,
                 mu_max: int, n_bands_kept: int,
                 k_grid: np.ndarray) -> Optional[FloquetArchive]:
    """Rebuild a cached archive; returns None on a cache miss."""
    key = archive_key(model, drive, mu_max, n_bands_kept, k_grid)
    path = directory / f"{key}.npz"
    if not path.exists():
        return None
    with np.load(path) as data:
        if int(data["version"]) != CACHE_FORMAT_VERSION:
            return None
        k_used = data["k_used"]
        excluded = tuple(float(k) for k in data["excluded_k"])
        quasi = data["quasienergies"]
        overlaps = data["overlaps"]
        fcoeff = data["floquet_coefficients"]

    blochs = []
    solutions = []
    for j, k in enumerate(k_used):
        # periodic functions and momentum matrices are deterministic given
        # the model, so they are recomputed rather than stored
        b = solve_bloch(model, float(k))
        blochs.append(b)
        row = []
        for i in range(model.n_occupied_bands):
            row.append(FloquetSolution(
                k=float(k), occupied_index=i,
                quasienergy=float(quasi[j, i]),
                coefficients=fcoeff[j, i],
                overlap_with_fieldfree=float(overlaps[j, i])))
        solutions.append(tuple(row))
    return FloquetArchive(model=model, drive=drive, mu_max=mu_max,
                          n_bands_kept=n_bands_kept,
                          k_grid=np.asarray(k_grid, dtype=float),
                          bloch=tuple(blochs), solutions=tuple(solutions),
                          excluded_k=excluded)


def describe_archive(path) -> dict:
    """Summary of a cached archive file, for the CLI inspect verb."""
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"archive not found: {path}")
    with np.load(path) as data:
        quasi = data["quasienergies"]
        overlaps = data["overlaps"]
        return {
            "path": str(path),
            "format_version": int(data["version"]),
            "n_k": int(len(data["k_used"])),
            "n_excluded_k": int(len(data["excluded_k"])),
            "n_occupied_bands": int(quasi.shape[1]),
            "mu_max": int((data["floquet_coefficients"].shape[-1] - 1) // 2),
            "n_bands_kept": int(data["floquet_coefficients"].shape[-2]),
            "quasienergy_range": [float(quasi.min()), float(quasi.max())],
            "min_overlap": float(overlaps.min()),
        }
