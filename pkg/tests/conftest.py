"""Shared fixtures: reference crystals, drives, and Floquet archives.

Two reference crystals are used throughout: an inversion-symmetric one
(real potential coefficients) and a noncentrosymmetric one with the same
coefficient moduli but complex phases. The weak drive sits well inside
the perturbative window; the strong drive is nonperturbative.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pytest

from floqmix import CrystalModel, DriveField, solve_floquet_grid
from floqmix.floquet import FloquetArchive
from floqmix.observables import (ScalarField, VectorField, current_amplitude,
                                 density_amplitude, fourier_decomposition,
                                 real_amplitudes)
from floqmix.units import ev_to_hartree

OMEGA = ev_to_hartree(1.55)
WEAK_INTENSITY = 2e11
STRONG_INTENSITY = 2e13
MU_MAX = 10
MU_MAX_STRONG = 24  # harmonic ladder converges much more slowly here
N_BANDS = 18
N_K = 16
MU_TOP = 4


def make_symmetric_model() -> CrystalModel:
    return CrystalModel(
        lattice_constant=8.0,
        potential_coefficients={1: -0.15, -1: -0.15, 2: -0.05, -2: -0.05},
        n_occupied_bands=1)


def make_asymmetric_model() -> CrystalModel:
    v1 = -0.15 * np.exp(0.4j)
    v2 = -0.05 * np.exp(-0.7j)
    return CrystalModel(
        lattice_constant=8.0,
        potential_coefficients={1: v1, -1: np.conj(v1),
                                2: v2, -2: np.conj(v2)},
        n_occupied_bands=1)


@dataclass(frozen=True)
class AmplitudeBundle:
    """Density/current amplitudes of one archive up to order MU_TOP."""

    archive: FloquetArchive
    rho: dict[int, ScalarField]       # complex amplitudes
    varrho: dict[int, ScalarField]    # real representations
    currents: dict[int, VectorField]

    @property
    def omega(self) -> float:
        return self.archive.drive.photon_energy

    def g_vector(self, order: int) -> float:
        return 2.0 * np.pi * order / self.archive.model.lattice_constant

    def decompositions(self, g_orders=(1, 2, 3, 4, 5)):
        g_list = [self.g_vector(n) for n in g_orders]
        return fourier_decomposition(self.varrho, g_list)


def make_bundle(archive: FloquetArchive, mu_top: int = MU_TOP) -> AmplitudeBundle:
    rho = {mu: density_amplitude(archive, mu) for mu in range(mu_top + 1)}
    varrho = {mu: real_amplitudes(rho[mu]) for mu in range(mu_top + 1)}
    currents = {mu: current_amplitude(archive, mu)
                for mu in range(1, mu_top + 1)}
    return AmplitudeBundle(archive=archive, rho=rho, varrho=varrho,
                           currents=currents)


@pytest.fixture(scope="session")
def sym_model() -> CrystalModel:
    return make_symmetric_model()


@pytest.fixture(scope="session")
def asym_model() -> CrystalModel:
    return make_asymmetric_model()


@pytest.fixture(scope="session")
def drive_weak() -> DriveField:
    return DriveField.from_intensity(OMEGA, WEAK_INTENSITY)


@pytest.fixture(scope="session")
def drive_strong() -> DriveField:
    return DriveField.from_intensity(OMEGA, STRONG_INTENSITY)


@pytest.fixture(scope="session")
def sym_archive(sym_model, drive_weak) -> FloquetArchive:
    return solve_floquet_grid(sym_model, drive_weak, MU_MAX, N_BANDS, n_k=N_K)


@pytest.fixture(scope="session")
def asym_archive(asym_model, drive_weak) -> FloquetArchive:
    return solve_floquet_grid(asym_model, drive_weak, MU_MAX, N_BANDS, n_k=N_K)


@pytest.fixture(scope="session")
def sym_archive_strong(sym_model, drive_strong) -> FloquetArchive:
    return solve_floquet_grid(sym_model, drive_strong, MU_MAX_STRONG,
                              N_BANDS, n_k=N_K)


@pytest.fixture(scope="session")
def sym_bundle(sym_archive) -> AmplitudeBundle:
    return make_bundle(sym_archive)


@pytest.fixture(scope="session")
def asym_bundle(asym_archive) -> AmplitudeBundle:
    return make_bundle(asym_archive)


@pytest.fixture(scope="session")
def sym_bundle_strong(sym_archive_strong) -> AmplitudeBundle:
    return make_bundle(sym_archive_strong)
