"""Real-time propagation oracle for the Floquet pipeline.

Each occupied Bloch state is propagated in the truncated field-free band
basis under the same cosine vector-potential coupling used by the Floquet
solver, with a sin^2 ramp of the field amplitude. Harmonic amplitudes of
the density and current are then extracted by discrete time-Fourier
projection over an integer number of post-ramp cycles.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from . import _kernels
from .crystal import BlochSolution, CrystalModel, brillouin_grid, solve_bloch
from .errors import ConfigurationError, NumericalError
from .floquet import DriveField
from .observables import ScalarField, VectorField

NORM_TOL = 1e-8


@dataclass(frozen=True)
class PropagationConfig:
    ramp_cycles: int = 20
    sample_cycles: int = 4
    steps_per_cycle: int = 512
    samples_per_cycle: int = 32

    def __post_init__(self):
        if self.ramp_cycles < 10:
            raise ConfigurationError(
                "ramp_cycles must be >= 10 for an adiabatic switch")
        if self.sample_cycles < 1:
            raise ConfigurationError("sample_cycles must be >= 1")
        if self.steps_per_cycle % self.samples_per_cycle:
            raise ConfigurationError(
                "steps_per_cycle must be a multiple of samples_per_cycle")


@dataclass(frozen=True)
class PropagationResult:
    """Sampled band-basis coefficients over the analysis window.

    samples[n, s, m]: sample n, state s (flattened (k, occupied band) in the
    order of `state_index`), band m. Sample times are uniform phase points
    of the post-ramp cycles.
    """

    model: CrystalModel
    drive: DriveField
    config: PropagationConfig
    n_bands_kept: int
    k_grid: np.ndarray
    state_index: tuple[tuple[int, int], ...]
    sample_times: np.ndarray
    samples: np.ndarray
    bloch: tuple[BlochSolution, ...] = field(repr=False)

    @property
    def beating_amplitude(self) -> float:
        """Residual nonadiabaticity: spread of the initial-band population."""
        worst = 0.0
        for s, (_, i) in enumerate(self.state_index):
            pop = np.abs(self.samples[:, s, i]) ** 2
            worst = max(worst, float(pop.max() - pop.min()))
        return worst

    def initial_band_population(self) -> np.ndarray:
        """Cycle-averaged population of the continued band, per state."""
        return np.array([
            float(np.mean(np.abs(self.samples[:, s, i]) ** 2))
            for s, (_, i) in enumerate(self.state_index)])


def propagate_grid(model: CrystalModel, drive: DriveField,
                   config: PropagationConfig, n_bands_kept: int,
                   k_grid: Optional[Sequence[float]] = None,
                   n_k: int = 16) -> PropagationResult:
    """Propagate every occupied state on the k grid and sample the final cycles."""
    if k_grid is None:
        k_grid = brillouin_grid(model, n_k)
    k_grid = np.asarray(k_grid, dtype=float)
    blochs = [solve_bloch(model, float(k)) for k in k_grid]
    nb = n_bands_kept
    if nb > model.n_planewaves:
        raise ConfigurationError("n_bands_kept exceeds the basis size")

    n_occ = model.n_occupied_bands
    state_index = [(ki, i) for ki in range(len(k_grid)) for i in range(n_occ)]
    ns = len(state_index)
    eps = np.empty((ns, nb))
    p = np.empty((ns, nb, nb), dtype=np.complex128)
    b0 = np.zeros((ns, nb), dtype=np.complex128)
    for s, (ki, i) in enumerate(state_index):
        eps[s] = blochs[ki].band_energies[:nb]
        p[s] = blochs[ki].momentum_matrix[:nb, :nb]
        b0[s, i] = 1.0

    omega = drive.photon_energy
    period = drive.period
    dt = period / config.steps_per_cycle
    t_ramp = config.ramp_cycles * period
    n_steps = (config.ramp_cycles + config.sample_cycles) * config.steps_per_cycle
    stride = config.steps_per_cycle // config.samples_per_cycle
    sample_start = config.ramp_cycles * config.steps_per_cycle
    n_samples = config.sample_cycles * config.samples_per_cycle
    e_over_w = drive.signed_amplitude / omega

    # explicit RK4 stability bound: |eps_max| dt must stay below ~2.8
    eps_max = float(np.max(np.abs(eps)))
    if eps_max * dt > 2.5:
        needed = int(np.ceil(period * eps_max / 2.5))
        raise ConfigurationError(
            f"steps_per_cycle={config.steps_per_cycle} is unstable for the "
            f"fastest band (eps_max={eps_max:.2f} Ha); use at least {needed}")

    samples, b_final = _kernels.rk4_batch(
        eps, p, b0, e_over_w, omega, t_ramp, dt, n_steps,
        sample_start, stride, n_samples)

    norms = np.sum(np.abs(b_final) ** 2, axis=1)
    drift = float(np.max(np.abs(norms - 1.0)))
    if not drift <= NORM_TOL:  # also catches NaN from an unstable step size
        raise NumericalError(
            f"norm drift {drift:.3e} exceeds {NORM_TOL:.1e}; "
            "reduce the step size (steps_per_cycle)")

    times = (sample_start + stride * np.arange(n_samples)) * dt
    return PropagationResult(model=model, drive=drive, config=config,
                             n_bands_kept=nb, k_grid=k_grid,
                             state_index=tuple(state_index),
                             sample_times=times, samples=samples,
                             bloch=tuple(blochs))


def propagate(bloch: BlochSolution, drive: DriveField,
              config: PropagationConfig, occupied_index: int,
              n_bands_kept: int) -> PropagationResult:
    """Single-state convenience wrapper around propagate_grid."""
    model = bloch.model
    if occupied_index >= model.n_occupied_bands:
        raise ConfigurationError("occupied_index must label a valence band")
    result = propagate_grid(model, drive, config, n_bands_kept,
                            k_grid=[bloch.k])
    keep = result.state_index.index((0, occupied_index))
    return PropagationResult(
        model=model, drive=drive, config=config, n_bands_kept=n_bands_kept,
        k_grid=result.k_grid, state_index=((0, occupied_index),),
        sample_times=result.sample_times,
        samples=result.samples[:, keep:keep + 1, :], bloch=result.bloch)


def project_harmonics(values: np.ndarray, times: np.ndarray, omega: float,
                      mu: int) -> np.ndarray:
    """Discrete time-Fourier projection at frequency mu*omega.

    `values` has shape (n_samples, ...); samples must cover an integer
    number of drive periods uniformly, otherwise the projection leaks.
    """
    n = len(times)
    if n < 2:
        raise ConfigurationError("need at least two samples")
    dt = times[1] - times[0]
    if not np.allclose(np.diff(times), dt):
        raise ConfigurationError("sample times must be uniform")
    span = n * dt
    cycles = span * omega / (2.0 * np.pi)
    if abs(cycles - round(cycles)) > 1e-9:
        raise ConfigurationError(
            f"analysis window covers {cycles:.6f} periods; an integer "
            "number is required to avoid spectral leakage")
    weights = np.exp(-1j * mu * omega * times) / n
    return np.tensordot(weights, values, axes=(0, 0))


@dataclass(frozen=True)
class HarmonicExtraction:
    """Density/current amplitudes extracted from a propagation run."""

    omega: float
    rho: dict[int, ScalarField]
    current: dict[int, VectorField]
    parity_residuals: dict[int, float]

    def real_density(self, mu: int) -> ScalarField:
        rho = self.rho[mu]
        values = 2.0 * (rho.values.real if mu % 2 == 0 else rho.values.imag)
        return ScalarField(order=mu, values=values,
                           lattice_constant=rho.lattice_constant)


def extract_harmonic_amplitudes(result: PropagationResult,
                                orders: Sequence[int]) -> HarmonicExtraction:
    """Time-Fourier amplitudes of rho(x, t) and j(x, t) from sampled states."""
    model = result.model
    drive = result.drive
    omega = drive.photon_energy
    a = model.lattice_constant
    phases = np.exp(1j * np.outer(model.reciprocal_vectors, model.x_grid))
    nb = result.n_bands_kept

    u_all = []
    du_all = []
    k_of_state = []
    for ki, _ in result.state_index:
        bloch = result.bloch[ki]
        u_all.append(bloch.periodic_functions[:nb])
        du_all.append(((bloch.coefficients[:nb] *
                        (1j * model.reciprocal_vectors)) @ phases) / np.sqrt(a))
        k_of_state.append(bloch.k)

    n_k = len(result.k_grid)
    weight = model.spin_degeneracy / n_k
    e_over_w = drive.signed_amplitude / omega

    n_samples = result.samples.shape[0]
    rho_t = np.zeros((n_samples, model.n_grid))
    j_t = np.zeros((n_samples, model.n_grid))
    for s in range(len(result.state_index)):
        # w(x, t) = sum_m b_m(t) u_m(x); shape (n_samples, n_grid)
        w = result.samples[:, s, :] @ u_all[s]
        dw = result.samples[:, s, :] @ du_all[s]
        rho_t += weight * np.abs(w) ** 2
        j_t += weight * np.imag(w.conj() * (dw + 1j * k_of_state[s] * w))
    j_t += (e_over_w * np.cos(omega * result.sample_times))[:, None] * rho_t

    rho = {}
    current = {}
    residuals = {}
    for mu in orders:
        rho_mu = project_harmonics(rho_t, result.sample_times, omega, mu)
        rho[mu] = ScalarField(order=mu, values=rho_mu, lattice_constant=a)
        scale = max(np.max(np.abs(rho_mu)), 1e-300)
        if mu % 2 == 0:
            residuals[mu] = float(np.max(np.abs(rho_mu.imag)) / scale)
        else:
            residuals[mu] = float(np.max(np.abs(rho_mu.real)) / scale)
        if mu >= 1:
            j_mu = project_harmonics(j_t, result.sample_times, omega, mu)
            if mu % 2 == 1:
                values = -2.0 * j_mu.real
            else:
                values = 2.0 * j_mu.imag
            current[mu] = VectorField(order=mu, values=values,
                                      lattice_constant=a)
    return HarmonicExtraction(omega=omega, rho=rho, current=current,
                              parity_residuals=residuals)


def density_movie(result: PropagationResult) -> tuple[np.ndarray, np.ndarray]:
    """rho(x, t) frames over the analysis window, for CSV export."""
    extraction_input = result
    model = extraction_input.model
    nb = result.n_bands_kept
    a = model.lattice_constant
    n_k = len(result.k_grid)
    rho_t = np.zeros((result.samples.shape[0], model.n_grid))
    for s, (ki, _) in enumerate(result.state_index):
        u = result.bloch[ki].periodic_functions[:nb]
        w = result.samples[:, s, :] @ u
        rho_t += (model.spin_degeneracy / n_k) * np.abs(w) ** 2
    return result.sample_times, rho_t
