"""Field-free band structure: analytic limits, invariants, frozen values."""

import numpy as np
import pytest

from floqmix import CrystalModel, DriveField, solve_floquet_grid
from floqmix.crystal import (band_gap, brillouin_grid, build_bloch_hamiltonian,
                             momentum_from_coefficients, solve_bloch)
from floqmix.errors import ConfigurationError

from conftest import make_symmetric_model


def free_model(**kw):
    kw.setdefault("lattice_constant", 8.0)
    kw.setdefault("potential_coefficients", {})
    kw.setdefault("n_occupied_bands", 1)
    return CrystalModel(**kw)


# --- analytic limits --------------------------------------------------------

def test_free_electron_energies_and_momentum():
    model = free_model()
    k = 0.17
    sol = solve_bloch(model, k)
    g = model.reciprocal_vectors
    expected = np.sort(0.5 * (k + g) ** 2)
    assert np.allclose(sol.band_energies, expected, atol=1e-12)
    # each free-electron state is a single plane wave with p = k + G_n
    for m in range(model.n_planewaves):
        n_idx = int(np.argmax(np.abs(sol.coefficients[m])))
        p = sol.momentum_matrix[m, m].real
        assert abs(p - (k + g[n_idx])) < 1e-10


def test_two_wave_gap_is_twice_potential_coefficient():
    # nearly-free-electron theory: the zone-edge gap opened by a single
    # weak coefficient V_1 is 2 |V_1|
    v = 1e-3
    model = free_model(potential_coefficients={1: -v, -1: -v})
    k_edge = np.pi / model.lattice_constant
    e = solve_bloch(model, k_edge).band_energies
    assert np.isclose(e[1] - e[0], 2 * v, rtol=5e-3)


def test_hamiltonian_matches_independent_assembly():
    model = make_symmetric_model()
    k = -0.21
    h = build_bloch_hamiltonian(model, k)
    # direct assembly from the definition, written independently
    half = model.n_planewaves // 2
    idx = np.arange(-half, half + 1)
    ref = np.zeros_like(h)
    for a, na in enumerate(idx):
        ga = 2 * np.pi * na / model.lattice_constant
        ref[a, a] = 0.5 * (k + ga) ** 2
        for b, nb in enumerate(idx):
            dv = model.potential_coefficients.get(na - nb)
            if dv is not None and a != b:
                ref[a, b] += dv
    assert np.allclose(h, ref, atol=1e-14)
    assert np.allclose(h, h.conj().T, atol=1e-14)


def test_scissors_shift_moves_only_conduction_bands():
    base = make_symmetric_model()
    shifted = CrystalModel(
        lattice_constant=8.0,
        potential_coefficients={1: -0.15, -1: -0.15, 2: -0.05, -2: -0.05},
        n_occupied_bands=1, scissors_shift=0.1)
    k = 0.11
    e0 = solve_bloch(base, k).band_energies
    e1 = solve_bloch(shifted, k).band_energies
    assert np.allclose(e1[0], e0[0], atol=1e-14)
    assert np.allclose(e1[1:], e0[1:] + 0.1, atol=1e-14)


# --- invariants -------------------------------------------------------------

def test_plus_minus_k_degeneracy():
    model = make_symmetric_model()
    k = 0.23
    ep = solve_bloch(model, k).band_energies
    em = solve_bloch(model, -k).band_energies
    assert np.allclose(ep, em, atol=1e-12)


def test_orthonormality_and_momentum_routes():
    model = make_symmetric_model()
    sol = solve_bloch(model, 0.19)
    c = sol.coefficients
    assert np.allclose(c @ c.conj().T, np.eye(len(c)), atol=1e-10)
    # periodic functions carry the same normalization on the grid
    w = model.lattice_constant / model.n_grid
    norms = np.sum(np.abs(sol.periodic_functions) ** 2, axis=1) * w
    assert np.allclose(norms, 1.0, atol=1e-10)
    # momentum matrix is Hermitian and matches a real-space evaluation
    p = sol.momentum_matrix
    assert np.allclose(p, p.conj().T, atol=1e-10)
    u = sol.periodic_functions
    du = np.fft.ifft(
        1j * 2 * np.pi * np.fft.fftfreq(model.n_grid, d=w) * np.fft.fft(u, axis=1),
        axis=1)
    p_real = (u.conj() @ ((-1j) * du.T)) * w + sol.k * (u.conj() @ u.T) * w
    assert np.allclose(p, p_real, atol=1e-8)


def test_momentum_diagonal_vanishes_at_zone_center_symmetric():
    model = make_symmetric_model()
    sol = solve_bloch(model, 0.0)
    # restrict to the well-split low bands; higher near-degenerate pairs
    # (splittings down to ~1e-8) are mixed at eigensolver precision
    diag = np.diag(sol.momentum_matrix)[:5]
    assert np.all(np.abs(diag) < 1e-10)


def test_density_inversion_symmetric_crystal():
    model = make_symmetric_model()
    sol = solve_bloch(model, 0.13)
    dens = np.abs(sol.periodic_functions[0]) ** 2
    # grid point 0 sits at x = 0, so inversion maps index i -> -i mod n
    mirrored = np.roll(dens[::-1], 1)
    assert np.allclose(dens, mirrored, atol=1e-10)


def test_basis_size_convergence():
    small = make_symmetric_model()
    big = CrystalModel(
        lattice_constant=8.0,
        potential_coefficients={1: -0.15, -1: -0.15, 2: -0.05, -2: -0.05},
        n_occupied_bands=1, n_planewaves=43, n_grid=256)
    k = 0.2
    e_small = solve_bloch(small, k).band_energies[:6]
    e_big = solve_bloch(big, k).band_energies[:6]
    assert np.allclose(e_small, e_big, atol=1e-10)


# --- frozen reference values ------------------------------------------------

def test_reference_band_gap_frozen_values():
    model = make_symmetric_model()
    fine = np.linspace(-np.pi / 8.0, np.pi / 8.0, 401)
    assert np.isclose(band_gap(model, fine), 0.32829301639241876, atol=1e-10)
    grid = brillouin_grid(model, 16)
    assert np.isclose(band_gap(model, grid), 0.3289936376725952, atol=1e-10)


# --- validation and grids ---------------------------------------------------

def test_model_validation_errors():
    with pytest.raises(ConfigurationError):
        free_model(lattice_constant=-1.0)
    with pytest.raises(ConfigurationError):
        free_model(n_occupied_bands=0)
    with pytest.raises(ConfigurationError):
        free_model(spin_degeneracy=3)
    with pytest.raises(ConfigurationError):
        free_model(n_planewaves=20)
    with pytest.raises(ConfigurationError):
        # complex coefficient without its conjugate partner: potential not real
        free_model(potential_coefficients={1: 0.1j, -1: 0.1j})
    with pytest.raises(ConfigurationError):
        # basis too small for the highest potential harmonic
        free_model(potential_coefficients={8: 0.1, -8: 0.1}, n_planewaves=15,
                   n_grid=64)
    with pytest.raises(ConfigurationError):
        free_model(n_grid=16)
    with pytest.raises(ConfigurationError):
        solve_bloch(free_model(), 2.0 * np.pi / 8.0)  # outside first zone


def test_brillouin_grid_properties():
    model = make_symmetric_model()
    with pytest.raises(ConfigurationError):
        brillouin_grid(model, 7)
    for n_k in (2, 8, 16):
        grid = brillouin_grid(model, n_k)
        assert len(grid) == n_k
        assert np.allclose(np.sort(-grid), np.sort(grid), atol=1e-14)
        assert np.all(np.abs(grid) > 1e-12)
        assert np.all(np.abs(grid) < np.pi / model.lattice_constant)
        assert np.allclose(np.diff(grid), 2 * np.pi / (8.0 * n_k), atol=1e-14)


def test_gapless_model_rejected():
    # free bands touch at the zone edge; a grid containing it has zero gap
    model = free_model()
    drive = DriveField(0.05, 1e-4)
    with pytest.raises(ConfigurationError):
        solve_floquet_grid(model, drive, 2, 4,
                           k_grid=[0.1, np.pi / model.lattice_constant])
