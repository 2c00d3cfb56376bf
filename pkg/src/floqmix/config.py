"""TOML run configuration with unit-suffixed quantities.

All internal numbers are atomic units; the config boundary accepts
human-friendly suffixes ("1.55 eV", "2 fs", "2e12 W/cm^2", and "T" for
multiples of the drive period). Unknown keys are rejected so typos fail
loudly instead of silently using defaults.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Optional, Sequence

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import units
from .crystal import CrystalModel
from .errors import ConfigurationError
from .floquet import DriveField


def parse_quantity(value, kind: str, period: Optional[float] = None) -> float:
    """Parse a number or a '<number> <unit>' string into atomic units.

    kind selects the admissible units: 'energy' (hartree, eV), 'time'
    (a.u., fs, T), 'intensity' (W/cm^2).
    """
    if isinstance(value, bool):
        raise ConfigurationError(f"expected a quantity, got boolean {value}")
    if isinstance(value, (int, float)):
        return float(value)
    if not isinstance(value, str):
        raise ConfigurationError(f"cannot parse quantity from {value!r}")
    parts = value.split()
    if len(parts) not in (1, 2):
        raise ConfigurationError(f"malformed quantity {value!r}")
    try:
        number = float(parts[0])
    except ValueError as exc:
        raise ConfigurationError(f"malformed number in {value!r}") from exc
    if len(parts) == 1:
        return number
    unit = parts[1]
    if kind == "energy":
        if unit in ("hartree", "Ha", "ha"):
            return number
        if unit == "eV":
            return units.ev_to_hartree(number)
    elif kind == "time":
        if unit in ("au", "a.u."):
            return number
        if unit == "fs":
            return units.fs_to_au(number)
        if unit == "T":
            if period is None:
                raise ConfigurationError(
                    f"{value!r}: period units need a drive to be defined")
            return number * period
    elif kind == "intensity":
        if unit in ("W/cm^2", "W/cm2", "W/cm²"):
            return number
    raise ConfigurationError(f"unknown unit {unit!r} for {kind} in {value!r}")


def _reject_unknown(section: Mapping[str, Any], allowed: set[str],
                    name: str) -> None:
    unknown = set(section) - allowed
    if unknown:
        raise ConfigurationError(
            f"unknown key(s) in [{name}]: {', '.join(sorted(unknown))}")


def _parse_crystal(section: Mapping[str, Any]) -> CrystalModel:
    allowed = {"lattice_constant", "potential", "n_occupied_bands",
               "spin_degeneracy", "n_planewaves", "scissors_shift", "n_grid"}
    _reject_unknown(section, allowed, "crystal")
    for key in ("lattice_constant", "potential", "n_occupied_bands"):
        if key not in section:
            raise ConfigurationError(f"[crystal] missing required key {key!r}")
    coeffs: dict[int, complex] = {}
    for row in section["potential"]:
        if len(row) not in (2, 3):
            raise ConfigurationError(
                "potential rows must be [n, re] or [n, re, im]")
        n = int(row[0])
        if n == 0 or n in coeffs:
            raise ConfigurationError(f"bad or duplicate potential index {n}")
        v = complex(float(row[1]), float(row[2]) if len(row) == 3 else 0.0)
        coeffs[n] = v
        coeffs[-n] = v.conjugate()
    kwargs = dict(
        lattice_constant=float(section["lattice_constant"]),
        potential_coefficients=coeffs,
        n_occupied_bands=int(section["n_occupied_bands"]))
    if "spin_degeneracy" in section:
        kwargs["spin_degeneracy"] = int(section["spin_degeneracy"])
    if "n_planewaves" in section:
        kwargs["n_planewaves"] = int(section["n_planewaves"])
    if "scissors_shift" in section:
        kwargs["scissors_shift"] = parse_quantity(section["scissors_shift"],
                                                  "energy")
    if "n_grid" in section:
        kwargs["n_grid"] = int(section["n_grid"])
    return CrystalModel(**kwargs)


def _parse_drive(section: Mapping[str, Any]) -> tuple[DriveField, list[float]]:
    allowed = {"photon_energy", "intensity", "field_amplitude",
               "polarization_sign", "intensity_scan"}
    _reject_unknown(section, allowed, "drive")
    if "photon_energy" not in section:
        raise ConfigurationError("[drive] missing required key 'photon_energy'")
    photon = parse_quantity(section["photon_energy"], "energy")
    sign = int(section.get("polarization_sign", 1))
    if ("intensity" in section) == ("field_amplitude" in section):
        raise ConfigurationError(
            "[drive] needs exactly one of 'intensity' or 'field_amplitude'")
    if "intensity" in section:
        intensity = parse_quantity(section["intensity"], "intensity")
        drive = DriveField.from_intensity(photon, intensity, sign)
    else:
        drive = DriveField(photon, float(section["field_amplitude"]), sign)
    scan = [parse_quantity(v, "intensity")
            for v in section.get("intensity_scan", [])]
    return drive, scan


@dataclass(frozen=True)
class FloquetSettings:
    mu_max: int = 10
    n_bands_kept: int = 18
    n_k: int = 16
    workers: int = 1
    skip_resonant: bool = True


def _parse_floquet(section: Mapping[str, Any]) -> FloquetSettings:
    allowed = {"mu_max", "n_bands_kept", "n_k", "workers", "skip_resonant"}
    _reject_unknown(section, allowed, "floquet")
    return FloquetSettings(
        mu_max=int(section.get("mu_max", 10)),
        n_bands_kept=int(section.get("n_bands_kept", 18)),
        n_k=int(section.get("n_k", 16)),
        workers=int(section.get("workers", 1)),
        skip_resonant=bool(section.get("skip_resonant", True)))


@dataclass(frozen=True)
class XraySettings:
    tau_p: tuple[float, ...]
    reciprocal_orders: tuple[int, ...] = (1, 2, 3)
    mu_report: int = 2
    mu_window: int = 4
    t_p_points: int = 16
    omega_s_points_per_omega: int = 64


def _parse_xray(section: Mapping[str, Any], period: float) -> XraySettings:
    allowed = {"tau_p", "G_orders", "mu_report", "mu_window",
               "t_p_points", "omega_s_points_per_omega"}
    _reject_unknown(section, allowed, "xray")
    if "tau_p" not in section:
        raise ConfigurationError("[xray] missing required key 'tau_p'")
    raw = section["tau_p"]
    if not isinstance(raw, list):
        raw = [raw]
    tau = tuple(parse_quantity(v, "time", period=period) for v in raw)
    orders = tuple(int(n) for n in section.get("G_orders", [1, 2, 3]))
    if any(n < 1 for n in orders):
        raise ConfigurationError("[xray] G_orders must be positive integers")
    return XraySettings(
        tau_p=tau, reciprocal_orders=orders,
        mu_report=int(section.get("mu_report", 2)),
        mu_window=int(section.get("mu_window", 4)),
        t_p_points=int(section.get("t_p_points", 16)),
        omega_s_points_per_omega=int(section.get("omega_s_points_per_omega", 64)))


@dataclass(frozen=True)
class OutputSettings:
    directory: str = "out"
    formats: tuple[str, ...] = ("csv", "json")
    stages: tuple[str, ...] = ("observables", "spectrum", "reconstruct")
    cache_dir: Optional[str] = None


_KNOWN_FORMATS = {"csv", "json", "gnuplot"}
_KNOWN_STAGES = {"observables", "spectrum", "reconstruct"}


def _parse_outputs(section: Mapping[str, Any]) -> OutputSettings:
    allowed = {"directory", "formats", "stages", "cache_dir"}
    _reject_unknown(section, allowed, "outputs")
    formats = tuple(section.get("formats", ["csv", "json"]))
    if not set(formats) <= _KNOWN_FORMATS:
        raise ConfigurationError(
            f"unknown output format(s): {set(formats) - _KNOWN_FORMATS}")
    stages = tuple(section.get("stages",
                               ["observables", "spectrum", "reconstruct"]))
    if not set(stages) <= _KNOWN_STAGES:
        raise ConfigurationError(
            f"unknown stage(s): {set(stages) - _KNOWN_STAGES}")
    return OutputSettings(
        directory=str(section.get("directory", "out")),
        formats=formats, stages=stages,
        cache_dir=section.get("cache_dir"))


@dataclass(frozen=True)
class RunConfig:
    model: CrystalModel
    drive: DriveField
    intensity_scan: tuple[float, ...]
    floquet: FloquetSettings
    xray: XraySettings
    outputs: OutputSettings

    def canonical_dict(self) -> dict:
        """Stable, hash-friendly view of every physics parameter."""
        pot = {str(n): [v.real, v.imag]
               for n, v in sorted(self.model.potential_coefficients.items())}
        return {
            "crystal": {
                "lattice_constant": self.model.lattice_constant,
                "potential": pot,
                "n_occupied_bands": self.model.n_occupied_bands,
                "spin_degeneracy": self.model.spin_degeneracy,
                "n_planewaves": self.model.n_planewaves,
                "scissors_shift": self.model.scissors_shift,
                "n_grid": self.model.n_grid,
            },
            "drive": {
                "photon_energy": self.drive.photon_energy,
                "field_amplitude": self.drive.field_amplitude,
                "polarization_sign": self.drive.polarization_sign,
            },
            "intensity_scan": list(self.intensity_scan),
            "floquet": {
                "mu_max": self.floquet.mu_max,
                "n_bands_kept": self.floquet.n_bands_kept,
                "n_k": self.floquet.n_k,
            },
            "xray": {
                "tau_p": list(self.xray.tau_p),
                "G_orders": list(self.xray.reciprocal_orders),
                "mu_report": self.xray.mu_report,
                "mu_window": self.xray.mu_window,
                "t_p_points": self.xray.t_p_points,
                "omega_s_points_per_omega": self.xray.omega_s_points_per_omega,
            },
        }


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigurationError(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"TOML parse error in {path}: {exc}") from exc
    return parse_config(data)


def parse_config(data: Mapping[str, Any]) -> RunConfig:
    _reject_unknown(data, {"crystal", "drive", "floquet", "xray", "outputs"},
                    "top level")
    for required in ("crystal", "drive", "xray"):
        if required not in data:
            raise ConfigurationError(f"missing required section [{required}]")
    model = _parse_crystal(data["crystal"])
    drive, scan = _parse_drive(data["drive"])
    floq = _parse_floquet(data.get("floquet", {}))
    xray = _parse_xray(data["xray"], drive.period)
    outputs = _parse_outputs(data.get("outputs", {}))
    if floq.n_bands_kept > model.n_planewaves:
        raise ConfigurationError(
            "[floquet] n_bands_kept exceeds the plane-wave basis size")
    if xray.mu_window > 2 * floq.mu_max:
        raise ConfigurationError("[xray] mu_window beyond the Floquet support")
    return RunConfig(model=model, drive=drive, intensity_scan=tuple(scan),
                     floquet=floq, xray=xray, outputs=outputs)
