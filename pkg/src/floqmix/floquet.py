"""Floquet-Bloch eigenproblem for a cosine drive in the velocity gauge.

The drive couples through (E0/omega) cos(omega t) p, i.e. the electric
field evolves as E0 sin(omega t). The Floquet matrix is block tridiagonal:
diagonal blocks diag(eps_m) + mu*omega, off-diagonal blocks
(E0 / 2 omega) * p. Expansion coefficients c[m][mu] multiply
exp(-i mu omega t) phi_mk; they are read from block -mu of the
eigenvectors of the matrix above.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import units
from .crystal import BlochSolution, CrystalModel, band_gap, brillouin_grid, solve_bloch
from .errors import ConfigurationError, ConvergenceError, NumericalError, ResonanceError

HYBRIDIZATION_WARN = 0.5
RESONANCE_LIMIT = 0.1


@dataclass(frozen=True)
class DriveField:
    photon_energy: float
    field_amplitude: float
    polarization_sign: int = 1

    def __post_init__(self):
        if self.photon_energy <= 0:
            raise ConfigurationError("photon_energy must be positive")
        if self.field_amplitude < 0:
            raise ConfigurationError("field_amplitude must be >= 0")
        if self.polarization_sign not in (-1, 1):
            raise ConfigurationError("polarization_sign must be +1 or -1")

    @classmethod
    def from_intensity(cls, photon_energy: float, intensity_wcm2: float,
                       polarization_sign: int = 1) -> "DriveField":
        return cls(photon_energy, units.intensity_to_field(intensity_wcm2),
                   polarization_sign)

    @property
    def period(self) -> float:
        return 2.0 * np.pi / self.photon_energy

    @property
    def signed_amplitude(self) -> float:
        return self.polarization_sign * self.field_amplitude


@dataclass(frozen=True)
class FloquetSolution:
    """Occupied Floquet state continuing valence band `occupied_index`.

    coefficients has shape (n_bands_kept, 2*mu_max + 1); the photon axis runs
    mu = -mu_max .. mu_max. quasienergy is folded into the zone around the
    field-free energy of the continued band.
    """

    k: float
    occupied_index: int
    quasienergy: float
    coefficients: np.ndarray
    overlap_with_fieldfree: float

    @property
    def mu_max(self) -> int:
        return (self.coefficients.shape[1] - 1) // 2

    def coefficient(self, m: int, mu: int) -> complex:
        return self.coefficients[m, mu + self.mu_max]


def build_floquet_matrix(bloch: BlochSolution, drive: DriveField,
                         mu_max: int, n_bands_kept: int) -> np.ndarray:
    if mu_max < 1:
        raise ConfigurationError("mu_max must be >= 1")
    if n_bands_kept < bloch.model.n_occupied_bands + 1:
        raise ConfigurationError(
            "n_bands_kept must exceed the number of occupied bands")
    if n_bands_kept > len(bloch.band_energies):
        raise ConfigurationError(
            f"n_bands_kept={n_bands_kept} exceeds available bands "
            f"({len(bloch.band_energies)})")
    nb = n_bands_kept
    omega = drive.photon_energy
    eps = bloch.band_energies[:nb]
    coupling = (drive.signed_amplitude / (2.0 * omega)) * \
        bloch.momentum_matrix[:nb, :nb]
    dim = (2 * mu_max + 1) * nb
    h = np.zeros((dim, dim), dtype=complex)
    for b, mu in enumerate(range(-mu_max, mu_max + 1)):
        s = b * nb
        h[s:s + nb, s:s + nb] = np.diag(eps + mu * omega)
        if b + 1 <= 2 * mu_max:
            h[s:s + nb, s + nb:s + 2 * nb] = coupling
            h[s + nb:s + 2 * nb, s:s + nb] = coupling.conj().T
    return h


def _fold_state(blocks: np.ndarray, quasienergy: float, target: float,
                omega: float) -> tuple[np.ndarray, float]:
    """Shift the photon index so the quasienergy lands in the zone around target."""
    j = int(np.round((quasienergy - target) / omega))
    if j == 0:
        return blocks, quasienergy
    shifted = np.zeros_like(blocks)
    n = blocks.shape[1]
    if j > 0:
        shifted[:, :n - j] = blocks[:, j:]
    else:
        shifted[:, -j:] = blocks[:, :n + j]
    return shifted, quasienergy - j * omega


def solve_floquet(bloch: BlochSolution, drive: DriveField, mu_max: int,
                  n_bands_kept: int) -> list[FloquetSolution]:
    """One Floquet state per occupied band, selected by field-free overlap."""
    h = build_floquet_matrix(bloch, drive, mu_max, n_bands_kept)
    try:
        vals, vecs = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"Floquet eigensolver failed at k={bloch.k}") from exc
    nb = n_bands_kept
    omega = drive.photon_energy
    n_blocks = 2 * mu_max + 1
    # blocks[j][m, b]: band m, photon block index b (matrix ordering -mu_max..mu_max)
    blocks = vecs.T.reshape(vals.size, n_blocks, nb).transpose(0, 2, 1)
    central = blocks[:, :, mu_max]  # block mu = 0

    solutions = []
    for i in range(bloch.model.n_occupied_bands):
        eps_i = bloch.band_energies[i]
        overlaps = np.abs(central[:, i]) ** 2
        order = np.lexsort((np.abs(vals - eps_i), -overlaps))
        # Near a multiphoton resonance, ladder replicas of the hybridized
        # partner can edge out the true continuation in the overlap ranking;
        # folding such a replica into the zone chops real weight at the
        # photon-window boundary. Among candidates of comparable overlap,
        # prefer the one whose fold preserves the norm best.
        pool = [c for c in order
                if overlaps[c] >= 0.5 * overlaps[order[0]]] or [order[0]]
        best = pool[0]
        coeff, quasi = None, 0.0
        best_loss = np.inf
        for candidate in pool:
            trial = blocks[candidate, :, ::-1].copy()  # c[m][mu] = block -mu
            trial, folded = _fold_state(trial, float(vals[candidate]),
                                        eps_i, omega)
            loss = abs(np.sum(np.abs(trial) ** 2) - 1.0)
            if loss < best_loss * (1.0 - 1e-12):
                best, coeff, quasi, best_loss = candidate, trial, folded, loss
        coeff = coeff / np.sqrt(np.sum(np.abs(coeff) ** 2))
        overlap = overlaps[best]
        if overlap < RESONANCE_LIMIT:
            raise ResonanceError(
                f"field-free overlap {overlap:.3g} < {RESONANCE_LIMIT} at "
                f"k={bloch.k}, band {i}: strong multiphoton resonance",
                k=bloch.k, band=i,
                overlaps=[(vals[j], overlaps[j]) for j in order[:2]])
        if overlap < HYBRIDIZATION_WARN:
            warnings.warn(
                f"Floquet state at k={bloch.k}, band {i} hybridized "
                f"(overlap {overlap:.3f})", stacklevel=2)
        phase = coeff[i, mu_max]
        if abs(phase) > 0:
            coeff = coeff * (abs(phase) / phase)
        solutions.append(FloquetSolution(
            k=bloch.k, occupied_index=i, quasienergy=quasi,
            coefficients=coeff, overlap_with_fieldfree=float(overlap)))
    return solutions


@dataclass(frozen=True)
class FloquetArchive:
    """Per-k Bloch and Floquet solutions for one (model, drive) run."""

    model: CrystalModel
    drive: DriveField
    mu_max: int
    n_bands_kept: int
    k_grid: np.ndarray
    bloch: tuple[BlochSolution, ...]
    solutions: tuple[tuple[FloquetSolution, ...], ...]
    excluded_k: tuple[float, ...] = field(default=())

    @property
    def n_k_effective(self) -> int:
        return len(self.bloch)


def solve_floquet_grid(model: CrystalModel, drive: DriveField, mu_max: int,
                       n_bands_kept: int,
                       k_grid: Optional[Sequence[float]] = None,
                       n_k: int = 16,
                       skip_resonant: bool = True,
                       workers: int = 1) -> FloquetArchive:
    """Solve the Floquet problem over a Brillouin-zone grid.

    Resonant k points are dropped with a warning (measure-zero exclusion)
    when skip_resonant is set; otherwise the ResonanceError propagates.
    Per-k solves are independent; workers > 1 dispatches them to a thread
    pool (the dense eigensolvers release the GIL) with results collected
    in grid order, so output is identical to the serial path.
    """
    if k_grid is None:
        k_grid = brillouin_grid(model, n_k)
    k_grid = np.asarray(k_grid, dtype=float)
    gap = band_gap(model, k_grid)
    if gap <= 0:
        raise ConfigurationError(
            f"model is gapless on this k grid (gap={gap:.3e}); "
            "a genuine band gap is required")

    def solve_one(k: float):
        b = solve_bloch(model, float(k))
        return b, solve_floquet(b, drive, mu_max, n_bands_kept)

    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(solve_one, k) for k in k_grid]
        results = []
        for k, fut in zip(k_grid, futures):
            try:
                results.append(fut.result())
            except ResonanceError as exc:
                results.append(exc)
    else:
        results = []
        for k in k_grid:
            try:
                results.append(solve_one(k))
            except ResonanceError as exc:
                results.append(exc)

    blochs = []
    per_k = []
    excluded = []
    for k, res in zip(k_grid, results):
        if isinstance(res, ResonanceError):
            if not skip_resonant:
                raise res
            warnings.warn(
                f"excluding resonant k={k:.6f} from BZ integrals: {res}",
                stacklevel=2)
            excluded.append(float(k))
            continue
        b, sols = res
        blochs.append(b)
        per_k.append(tuple(sols))
    if not blochs:
        raise ResonanceError("all k points resonant; no Floquet states selected")
    return FloquetArchive(model=model, drive=drive, mu_max=mu_max,
                          n_bands_kept=n_bands_kept, k_grid=k_grid,
                          bloch=tuple(blochs), solutions=tuple(per_k),
                          excluded_k=tuple(excluded))


def converge_floquet(model: CrystalModel, drive: DriveField,
                     n_k_start: int = 8, mu_max_start: int = 2,
                     n_bands_start: Optional[int] = None,
                     tolerance: float = 1e-6, mu_report: int = 4,
                     mu_max_ceiling: int = 64, n_bands_ceiling: Optional[int] = None,
                     n_k_ceiling: int = 256) -> dict:
    """Ladder refinement of (mu_max, n_bands_kept, n_k).

    Each refinement step doubles mu_max, adds two bands, or doubles the
    k grid, keeping a change only if it moves the reported density-amplitude
    Fourier components by more than the tolerance. Returns the converged
    parameters and the trace of relative changes.
    """
    from .observables import density_fourier_table

    if tolerance <= 0:
        raise ConfigurationError("tolerance must be positive")
    n_bands = n_bands_start or min(model.n_occupied_bands + 4, model.n_planewaves)
    n_bands_ceiling = n_bands_ceiling or model.n_planewaves
    mu_max = mu_max_start
    n_k = n_k_start

    def table(mu_max, n_bands, n_k):
        arch = solve_floquet_grid(model, drive, mu_max, n_bands, n_k=n_k)
        return density_fourier_table(arch, mu_report)

    current = table(mu_max, n_bands, n_k)
    trace = []
    for _ in range(32):
        changed = False
        for name, trial in (("mu_max", (min(2 * mu_max, mu_max_ceiling), n_bands, n_k)),
                            ("n_bands", (mu_max, min(n_bands + 2, n_bands_ceiling), n_k)),
                            ("n_k", (mu_max, n_bands, min(2 * n_k, n_k_ceiling)))):
            if trial == (mu_max, n_bands, n_k):
                continue
            candidate = table(*trial)
            delta = float(np.max(np.abs(candidate - current)) /
                          max(np.max(np.abs(current)), 1e-300))
            trace.append({"parameter": name, "value": trial, "change": delta})
            if delta > tolerance:
                mu_max, n_bands, n_k = trial
                current = candidate
                changed = True
        if not changed:
            return {"mu_max": mu_max, "n_bands_kept": n_bands, "n_k": n_k,
                    "trace": trace}
    raise ConvergenceError(
        "Floquet parameter ladder did not converge within ceilings", trace=trace)
