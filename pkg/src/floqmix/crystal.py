"""1D model crystal: plane-wave Bloch eigenproblem.

The crystal potential is V(x) = sum_n V_n exp(i 2 pi n x / a) with
V_{-n} = conj(V_n), so the potential is real and the Hamiltonian is
time-reversal symmetric. Bands are solved in a plane-wave basis
G_n = 2 pi n / a; cell-periodic functions are returned on a uniform
real-space grid, normalized so that the cell integral of |u|^2 is 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import ConfigurationError, NumericalError

_DEGENERACY_TOL = 1e-9


@dataclass(frozen=True)
class CrystalModel:
    lattice_constant: float
    potential_coefficients: Mapping[int, complex]
    n_occupied_bands: int
    spin_degeneracy: int = 2
    n_planewaves: int = 21
    scissors_shift: float = 0.0
    n_grid: int = 128

    def __post_init__(self):
        if self.lattice_constant <= 0:
            raise ConfigurationError("lattice_constant must be positive")
        if self.n_occupied_bands < 1:
            raise ConfigurationError("need at least one occupied band")
        if self.spin_degeneracy not in (1, 2):
            raise ConfigurationError("spin_degeneracy must be 1 or 2")
        if self.scissors_shift < 0:
            raise ConfigurationError("scissors_shift must be >= 0")
        if self.n_planewaves % 2 == 0:
            raise ConfigurationError("n_planewaves must be odd (symmetric basis)")
        coeffs = {int(n): complex(v) for n, v in self.potential_coefficients.items()}
        n_max = max((abs(n) for n in coeffs), default=0)
        if self.n_planewaves < 2 * n_max + 1:
            raise ConfigurationError(
                f"n_planewaves={self.n_planewaves} too small to hold potential "
                f"coefficients up to |n|={n_max}; need at least {2 * n_max + 1}"
            )
        if self.n_grid < 4 * self.n_planewaves:
            raise ConfigurationError("n_grid must be at least 4 * n_planewaves")
        for n, v in coeffs.items():
            partner = coeffs.get(-n, 0.0 + 0.0j)
            if abs(partner - np.conj(v)) > 1e-12 * max(1.0, abs(v)):
                raise ConfigurationError(
                    f"V_({-n}) must equal conj(V_{n}): potential must be real"
                )
        object.__setattr__(self, "potential_coefficients", coeffs)

    @property
    def basis_indices(self) -> np.ndarray:
        half = self.n_planewaves // 2
        return np.arange(-half, half + 1)

    @property
    def reciprocal_vectors(self) -> np.ndarray:
        return 2.0 * np.pi * self.basis_indices / self.lattice_constant

    @property
    def x_grid(self) -> np.ndarray:
        a, nx = self.lattice_constant, self.n_grid
        return np.arange(nx) * (a / nx)

    @property
    def inversion_symmetric(self) -> bool:
        return all(
            abs(v.imag) <= 1e-12 * max(1.0, abs(v))
            for v in self.potential_coefficients.values()
        )

    @property
    def n_electrons(self) -> int:
        return self.n_occupied_bands * self.spin_degeneracy

    def potential_on_grid(self) -> np.ndarray:
        x = self.x_grid
        v = np.zeros_like(x, dtype=complex)
        for n, vn in self.potential_coefficients.items():
            v += vn * np.exp(2j * np.pi * n * x / self.lattice_constant)
        return v.real


@dataclass(frozen=True)
class BlochSolution:
    """Field-free bands at one Bloch vector.

    coefficients[m, n] are plane-wave amplitudes of band m (sum |c|^2 = 1);
    periodic_functions[m, :] = sum_n c_m(n) exp(i G_n x) / sqrt(a), so the
    cell integral of |u_m|^2 is 1. band_energies include the scissors shift
    on conduction bands. momentum_matrix is p_{m'm}(k) in atomic units.
    """

    k: float
    band_energies: np.ndarray
    coefficients: np.ndarray
    periodic_functions: np.ndarray
    momentum_matrix: np.ndarray
    model: CrystalModel = field(repr=False, compare=False)


def build_bloch_hamiltonian(model: CrystalModel, k: float) -> np.ndarray:
    """Plane-wave Hamiltonian: diagonal (k+G_n)^2/2, off-diagonals V_{n-n'}."""
    a = model.lattice_constant
    if abs(k) > np.pi / a + 1e-12:
        raise ConfigurationError(f"|k|={abs(k)} outside first Brillouin zone")
    g = model.reciprocal_vectors
    n_pw = model.n_planewaves
    h = np.zeros((n_pw, n_pw), dtype=complex)
    np.fill_diagonal(h, 0.5 * (k + g) ** 2)
    for n, vn in model.potential_coefficients.items():
        if n == 0:
            h[np.diag_indices(n_pw)] += vn.real
            continue
        # basis index difference n couples rows i to columns i - n
        for i in range(n_pw):
            j = i - n
            if 0 <= j < n_pw:
                h[i, j] += vn
    return h


def _fix_gauge(coeffs: np.ndarray) -> np.ndarray:
    """Rotate each eigenvector so its largest-modulus component is real positive."""
    out = coeffs.copy()
    for m in range(out.shape[0]):
        j = int(np.argmax(np.abs(out[m])))
        phase = out[m, j] / abs(out[m, j])
        out[m] = out[m] / phase
    return out


def _resolve_degeneracies(model: CrystalModel, vals: np.ndarray,
                          vecs: np.ndarray) -> np.ndarray:
    """Deterministic basis inside degenerate subspaces.

    Inversion-symmetric models: re-diagonalize against the parity operator
    (coefficient index n -> -n). Otherwise order by dominant plane-wave index.
    """
    n = len(vals)
    vecs = vecs.copy()
    start = 0
    while start < n:
        stop = start + 1
        while stop < n and vals[stop] - vals[stop - 1] < _DEGENERACY_TOL:
            stop += 1
        if stop - start > 1:
            block = vecs[:, start:stop]
            if model.inversion_symmetric:
                flipped = block[::-1, :]
                par = block.conj().T @ flipped
                par = 0.5 * (par + par.conj().T)
                _, rot = np.linalg.eigh(par)
                vecs[:, start:stop] = block @ rot
            else:
                dominant = [int(np.argmax(np.abs(block[:, j])))
                            for j in range(stop - start)]
                order = np.argsort(dominant, kind="stable")
                vecs[:, start:stop] = block[:, order]
        start = stop
    return vecs


def solve_bloch(model: CrystalModel, k: float) -> BlochSolution:
    """Diagonalize the Bloch Hamiltonian; apply scissors shift and gauge fix."""
    h = build_bloch_hamiltonian(model, k)
    try:
        vals, vecs = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(
            f"Bloch eigensolver failed at k={k} (cond={np.linalg.cond(h):.3e})"
        ) from exc
    vecs = _resolve_degeneracies(model, vals, vecs)
    coeffs = _fix_gauge(vecs.T)

    energies = vals.copy()
    energies[model.n_occupied_bands:] += model.scissors_shift

    a = model.lattice_constant
    phases = np.exp(1j * np.outer(model.reciprocal_vectors, model.x_grid))
    u = (coeffs @ phases) / np.sqrt(a)

    p = momentum_from_coefficients(model, k, coeffs)
    return BlochSolution(k=k, band_energies=energies, coefficients=coeffs,
                         periodic_functions=u, momentum_matrix=p, model=model)


def momentum_from_coefficients(model: CrystalModel, k: float,
                               coeffs: np.ndarray) -> np.ndarray:
    """p_{m'm}(k) = sum_n c*_{m'}(n) (k + G_n) c_m(n)."""
    kg = k + model.reciprocal_vectors
    return np.einsum("an,n,bn->ab", coeffs.conj(), kg, coeffs)


def band_gap(model: CrystalModel, k_points: np.ndarray) -> float:
    """Minimum conduction energy minus maximum valence energy over k_points."""
    n_occ = model.n_occupied_bands
    vmax = -np.inf
    cmin = np.inf
    for k in k_points:
        e = solve_bloch(model, k).band_energies
        vmax = max(vmax, e[n_occ - 1])
        cmin = min(cmin, e[n_occ])
    return cmin - vmax


def brillouin_grid(model: CrystalModel, n_k: int) -> np.ndarray:
    """Uniform k grid, closed under k -> -k and avoiding k = 0 and the zone edge."""
    if n_k < 2 or n_k % 2:
        raise ConfigurationError("n_k must be a positive even number")
    a = model.lattice_constant
    dk = 2.0 * np.pi / (a * n_k)
    return (np.arange(n_k) - n_k / 2 + 0.5) * dk
