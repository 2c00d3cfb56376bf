"""Subcycle-resolved quasielastic x-ray scattering spectra.

The scattering amplitude at momentum transfer G is a coherent sum of
Gaussian side peaks, one per harmonic order mu of the driven charge
density, weighted by the complex transforms of the density amplitudes
and phased by the probe arrival time t_p:

    A(w_s, t_p) = sum_mu E_mu(w_s) exp(-i mu w t_p) Frho_mu(G)

with Frho_mu(G) the transform of the complex amplitude rho_mu (see
observables.complex_density_transform). Time-reversal symmetry of the
drive gives Frho_{-mu}(G) = (-1)^mu Frho_mu(G) and the real density gives
Frho_mu(-G) = (-1)^mu conj(Frho_mu(G)); both relations are used so a
single set of non-negative orders determines the spectra at +/-G.

Intensities are normalized to the main Bragg peak (the zero-order peak
maximum), so the geometry prefactor never appears.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .errors import ConfigurationError, NumericalError
from .observables import FourierDecomposition

LN2 = float(np.log(2.0))
ROUTE_TOL = 1e-10


@dataclass(frozen=True)
class XrayPulse:
    """Gaussian probe pulse; duration is the FWHM of the field envelope."""

    duration: float
    arrival_time: float = 0.0
    photon_energy: float = 0.0

    def __post_init__(self):
        if self.duration <= 0:
            raise ConfigurationError("pulse duration must be positive")

    def overlap_factor(self, delta_mu: int, omega: float) -> float:
        """Suppression of the interference between side peaks delta_mu apart."""
        return float(np.exp(-(delta_mu * omega * self.duration) ** 2 / (16.0 * LN2)))

    def resolvable(self, delta_mu: int, omega: float) -> bool:
        """Whether delta_mu-order subcycle oscillations survive the pulse length."""
        return self.overlap_factor(delta_mu, omega) > 0.01

    @property
    def peak_envelope(self) -> float:
        return float(np.sqrt(self.duration ** 2 * np.pi / (2.0 * LN2)))


def envelope(mu: int, omega_s_offset: np.ndarray, pulse: XrayPulse,
             omega: float) -> np.ndarray:
    """Spectral amplitude of the mu-th side peak at w_s - w_i = omega_s_offset."""
    detuning = np.asarray(omega_s_offset, dtype=float) - mu * omega
    return pulse.peak_envelope * np.exp(
        -detuning ** 2 * pulse.duration ** 2 / (8.0 * LN2))


@dataclass(frozen=True)
class SpectrumResult:
    """Normalized quasielastic spectrum over (w_s - w_i, t_p) for one G."""

    G: float
    omega_s_offsets: np.ndarray
    t_p: np.ndarray
    intensity: np.ndarray  # shape (n_omega_s, n_t_p)
    side_peaks: np.ndarray  # time-independent per-order peaks, same w_s grid
    interference: Mapping[int, np.ndarray]  # delta_mu -> (n_omega_s, n_t_p)
    normalization: float  # raw intensity units per normalized unit

    def time_average(self) -> np.ndarray:
        return self.intensity.mean(axis=1)


def _signed_transforms(decomposition: FourierDecomposition,
                       mu_window: int, conjugate: bool) -> dict[int, complex]:
    """Frho_mu for mu = -mu_window..mu_window at +G (or -G when conjugate)."""
    out = {}
    for mu in range(0, mu_window + 1):
        f = decomposition.complex_transform(mu)
        if conjugate:
            f = (-1) ** mu * np.conj(f)
        out[mu] = complex(f)
        out[-mu] = (-1) ** mu * complex(f)
    return out


def quasielastic_spectrum(decomposition: FourierDecomposition,
                          pulse: XrayPulse, omega: float,
                          omega_s_offsets: np.ndarray, t_p: np.ndarray,
                          mu_window: Optional[int] = None,
                          conjugate: bool = False,
                          window_tol: float = 1e-6) -> SpectrumResult:
    """Spectrum at +G (or -G with conjugate=True) from one decomposition.

    Evaluates the compact coherent-sum form and the term-by-term
    breakdown (side peaks plus interference terms grouped by delta_mu)
    and verifies that the two routes agree to 1e-10 of the peak.
    """
    orders = [mu for mu in decomposition.orders if mu >= 0]
    max_order = max(orders)
    if mu_window is None:
        mu_window = max_order
    if mu_window < 1 or mu_window > max_order:
        raise ConfigurationError(
            f"mu_window={mu_window} outside available orders (1..{max_order})")
    omega_s_offsets = np.asarray(omega_s_offsets, dtype=float)
    t_p = np.asarray(t_p, dtype=float)

    f = _signed_transforms(decomposition, max_order, conjugate)
    env = {mu: envelope(mu, omega_s_offsets, pulse, omega)
           for mu in range(-max_order, max_order + 1)}

    # truncation guard: orders beyond the window must not contribute
    norm_amp = pulse.peak_envelope * abs(f[0])
    if norm_amp == 0:
        raise ConfigurationError("zero-order transform vanishes; cannot normalize")
    for mu in range(mu_window + 1, max_order + 1):
        for sign in (1, -1):
            reach = float(np.max(env[sign * mu])) * abs(f[sign * mu])
            if reach / norm_amp > window_tol:
                raise ConfigurationError(
                    f"mu_window={mu_window} truncates order {sign * mu} "
                    f"(relative contribution {reach / norm_amp:.2e})")

    mus = np.arange(-mu_window, mu_window + 1)
    env_mat = np.stack([env[mu] for mu in mus])            # (n_mu, n_ws)
    f_vec = np.array([f[mu] for mu in mus])                # (n_mu,)
    phase = np.exp(-1j * np.outer(mus, omega * t_p))       # (n_mu, n_tp)
    amplitude = np.einsum("mw,m,mt->wt", env_mat, f_vec, phase)
    compact = np.abs(amplitude) ** 2

    side = np.einsum("mw,m->w", env_mat ** 2, np.abs(f_vec) ** 2)
    interference: dict[int, np.ndarray] = {}
    total = np.repeat(side[:, None], len(t_p), axis=1)
    for dmu in range(1, 2 * mu_window + 1):
        term = np.zeros((len(omega_s_offsets), len(t_p)))
        osc = np.exp(-1j * dmu * omega * t_p)
        for mu in range(-mu_window, mu_window + 1 - dmu):
            z = f[mu + dmu] * np.conj(f[mu])
            pair_env = env_mat[mu + mu_window] * env_mat[mu + dmu + mu_window]
            term += 2.0 * np.outer(pair_env, np.real(z * osc))
        if np.max(np.abs(term)) > 0:
            interference[dmu] = term
            total = total + term

    norm = norm_amp ** 2
    if np.max(np.abs(compact - total)) / max(np.max(compact), norm) > ROUTE_TOL:
        raise NumericalError(
            "compact and term-by-term spectrum routes disagree beyond 1e-10")
    if np.min(compact) < -ROUTE_TOL * norm:
        raise NumericalError("negative quasielastic intensity")

    return SpectrumResult(
        G=-decomposition.G if conjugate else decomposition.G,
        omega_s_offsets=omega_s_offsets, t_p=t_p,
        intensity=compact / norm, side_peaks=side / norm,
        interference={d: t / norm for d, t in interference.items()},
        normalization=norm)


def spectrum_pair(decomposition: FourierDecomposition, pulse: XrayPulse,
                  omega: float, omega_s_offsets: np.ndarray, t_p: np.ndarray,
                  mu_window: Optional[int] = None) -> tuple[SpectrumResult, SpectrumResult]:
    """Spectra at +G and -G from a single decomposition."""
    plus = quasielastic_spectrum(decomposition, pulse, omega,
                                 omega_s_offsets, t_p, mu_window)
    minus = quasielastic_spectrum(decomposition, pulse, omega,
                                  omega_s_offsets, t_p, mu_window,
                                  conjugate=True)
    return plus, minus


@dataclass(frozen=True)
class PlusMinusDecomposition:
    """Symmetry decomposition of spectra at opposite momentum transfer."""

    omega_s_offsets: np.ndarray
    t_p: np.ndarray
    time_independent: np.ndarray       # (n_omega_s,)
    antisymmetric: np.ndarray          # (n_omega_s, n_t_p)
    centrosymmetric_dynamic: np.ndarray  # (n_omega_s, n_t_p)


def decompose_pm_G(plus: SpectrumResult,
                   minus: SpectrumResult) -> PlusMinusDecomposition:
    """Split P(+G), P(-G) into the three analysis channels.

    The time-independent channel is the t_p period-average of the
    centrosymmetric combination (P(G)+P(-G))/2; the average is exact for
    a harmonic series sampled uniformly over one period.
    """
    if plus.intensity.shape != minus.intensity.shape or \
            not np.array_equal(plus.omega_s_offsets, minus.omega_s_offsets) or \
            not np.array_equal(plus.t_p, minus.t_p):
        raise ConfigurationError("spectra at +G and -G are on different grids")
    anti = 0.5 * (plus.intensity - minus.intensity)
    centro = 0.5 * (plus.intensity + minus.intensity)
    static = centro.mean(axis=1)
    return PlusMinusDecomposition(
        omega_s_offsets=plus.omega_s_offsets, t_p=plus.t_p,
        time_independent=static, antisymmetric=anti,
        centrosymmetric_dynamic=centro - static[:, None])


def default_omega_s_grid(omega: float, mu_report: int,
                         points_per_omega: int = 64) -> np.ndarray:
    """w_s - w_i from -omega to (mu_report + 1) omega."""
    n = (mu_report + 2) * points_per_omega + 1
    return np.linspace(-omega, (mu_report + 1) * omega, n)


def default_t_p_grid(omega: float, points_per_period: int = 16) -> np.ndarray:
    """One drive period of probe arrival times, endpoint excluded."""
    period = 2.0 * np.pi / omega
    return np.arange(points_per_period) * (period / points_per_period)


def t_p_harmonic_projection(values: np.ndarray, t_p: np.ndarray, omega: float,
                            order: int) -> tuple[np.ndarray, np.ndarray]:
    """(cos, sin) coefficients of order*omega oscillations in t_p.

    values has t_p on its last axis; the grid must cover exactly one
    period uniformly.
    """
    n = len(t_p)
    if n < 2 * order + 1:
        raise ConfigurationError(
            f"t_p grid too coarse to project harmonic {order}")
    dt = t_p[1] - t_p[0]
    if abs(n * dt * omega / (2.0 * np.pi) - 1.0) > 1e-9:
        raise ConfigurationError("t_p grid must cover exactly one period")
    c = 2.0 * np.tensordot(values, np.cos(order * omega * t_p), axes=(-1, 0)) / n
    s = 2.0 * np.tensordot(values, np.sin(order * omega * t_p), axes=(-1, 0)) / n
    if order == 0:
        c = c / 2.0
    return c, s
