"""Harmonic amplitudes of the driven electron density and current density.

All cell integrals use the convention integral = (a / N_x) * sum over the
grid. Density amplitudes rho_mu multiply exp(i mu omega t) in the
time-periodic density; their real-valued representations are
varrho_even = 2 Re rho_even and varrho_odd = 2 Im rho_odd, so that

    rho(x, t) = rho_0 - sum_odd varrho_mu sin(mu w t)
                      + sum_even>=2 varrho_mu cos(mu w t)
    j(x, t)  = - sum_odd j_mu cos(mu w t) - sum_even>=2 j_mu sin(mu w t)

The sign of the paramagnetic current term is fixed by requiring the
continuity identity div j_mu = -mu w varrho_mu to hold exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from .crystal import CrystalModel
from .errors import ConfigurationError, NumericalError
from .floquet import FloquetArchive

PARITY_TOL = 1e-6


@dataclass(frozen=True)
class ScalarField:
    """Complex or real scalar amplitude of one harmonic order on the cell grid."""

    order: int
    values: np.ndarray
    lattice_constant: float

    @property
    def n_grid(self) -> int:
        return len(self.values)

    @property
    def x_grid(self) -> np.ndarray:
        a, nx = self.lattice_constant, self.n_grid
        return np.arange(nx) * (a / nx)

    def integrate(self):
        return self.values.sum() * (self.lattice_constant / self.n_grid)


@dataclass(frozen=True)
class VectorField:
    """Real current-density amplitude (scalar-valued in 1D) of one order."""

    order: int
    values: np.ndarray
    lattice_constant: float

    @property
    def n_grid(self) -> int:
        return len(self.values)

    @property
    def x_grid(self) -> np.ndarray:
        a, nx = self.lattice_constant, self.n_grid
        return np.arange(nx) * (a / nx)

    def integrate(self) -> float:
        return float(self.values.sum() * (self.lattice_constant / self.n_grid))


@dataclass(frozen=True)
class FourierDecomposition:
    """Spatial Fourier data of the real amplitudes varrho_mu at one G."""

    G: float
    orders: tuple[int, ...]
    P_g: np.ndarray
    P_u: np.ndarray

    @property
    def F(self) -> np.ndarray:
        return self.P_g + 1j * self.P_u

    @property
    def modulus(self) -> np.ndarray:
        return np.abs(self.F)

    @property
    def phase(self) -> np.ndarray:
        return np.angle(self.F)

    def order_index(self, mu: int) -> int:
        return self.orders.index(mu)

    def complex_transform(self, mu: int) -> complex:
        """Transform of the complex amplitude rho_mu at this G.

        The real amplitudes relate to the complex ones by
        varrho_even = 2 Re rho, varrho_odd = 2 Im rho, so the complex
        transform is F/2 for even orders and i F/2 for odd ones.
        """
        f = complex(self.F[self.order_index(mu)])
        return 0.5j * f if mu % 2 else 0.5 * f


def _coefficient_overlap(coeff: np.ndarray, mu: int) -> np.ndarray:
    """S_{m'm} = sum_{mu'} conj(c[m', mu'+mu]) c[m, mu']."""
    n_ph = coeff.shape[1]
    if abs(mu) >= n_ph:
        return np.zeros((coeff.shape[0], coeff.shape[0]), dtype=complex)
    if mu >= 0:
        return coeff[:, mu:].conj() @ coeff[:, :n_ph - mu].T
    return (coeff[:, -mu:].conj() @ coeff[:, :n_ph + mu].T).conj().T


def _k_terms(archive: FloquetArchive):
    """Per-k band data shared by density and current accumulation."""
    nb = archive.n_bands_kept
    model = archive.model
    a = model.lattice_constant
    phases = np.exp(1j * np.outer(model.reciprocal_vectors, model.x_grid))
    for bloch, sols in zip(archive.bloch, archive.solutions):
        u = bloch.periodic_functions[:nb]
        du = ((bloch.coefficients[:nb] * (1j * model.reciprocal_vectors))
              @ phases) / np.sqrt(a)
        yield bloch, sols, u, du


def density_amplitude(archive: FloquetArchive, mu: int,
                      half_bz: bool = False) -> ScalarField:
    """mu-th order complex density amplitude, Brillouin-zone averaged.

    The finite photon window makes the norm of each truncated Floquet
    state oscillate by the weight stranded at the window boundary, which
    leaks into the mu != 0 amplitudes as a spurious multiple of the static
    density. Normalizing the per-state density removes it: to leading
    order rho_mu -> rho_mu - S_mu rho_0 with S_mu the photon-shifted
    autocorrelation of the coefficients, which restores the particle-number
    sum rule integral(rho_mu) = 0 exactly for every mu != 0.
    """
    if abs(mu) > 2 * archive.mu_max:
        raise ConfigurationError(
            f"|mu|={abs(mu)} outside the coefficient support (2*mu_max="
            f"{2 * archive.mu_max})")
    model = archive.model
    total = np.zeros(model.n_grid, dtype=complex)
    n_used = 0
    for bloch, sols, u, _ in _k_terms(archive):
        if half_bz and bloch.k <= 0:
            continue
        for sol in sols:
            s = _coefficient_overlap(sol.coefficients, mu)
            state = (u.conj() * (s @ u)).sum(axis=0)
            # below ~1e-12 the autocorrelation is eigensolver noise and
            # subtracting it would only distort tiny harmonics
            if mu != 0 and abs(np.trace(s)) > 1e-12:
                s0 = _coefficient_overlap(sol.coefficients, 0)
                static = (u.conj() * (s0 @ u)).sum(axis=0)
                state = state - (np.trace(s) / np.trace(s0)) * static
            total += state
        n_used += 1
    if half_bz:
        total = total + (-1) ** mu * total.conj()
        n_used *= 2
    values = total * (model.spin_degeneracy / max(n_used, 1))
    return ScalarField(order=mu, values=values,
                       lattice_constant=model.lattice_constant)


def real_amplitudes(rho: ScalarField, parity_tol: float = PARITY_TOL) -> ScalarField:
    """Real representation varrho_mu of a complex density amplitude.

    Raises NumericalError when the time-reversal parity residual (real part
    of odd orders, imaginary part of even orders) exceeds parity_tol.
    """
    scale = np.max(np.abs(rho.values))
    if scale == 0:
        return ScalarField(rho.order, np.zeros(rho.n_grid), rho.lattice_constant)
    if rho.order % 2 == 0:
        residual = np.max(np.abs(rho.values.imag)) / scale
        kept = 2.0 * rho.values.real
    else:
        residual = np.max(np.abs(rho.values.real)) / scale
        kept = 2.0 * rho.values.imag
    if residual > parity_tol:
        raise NumericalError(
            f"time-reversal parity violated for order {rho.order}: "
            f"residual {residual:.3e} > {parity_tol:.1e}")
    return ScalarField(order=rho.order, values=kept,
                       lattice_constant=rho.lattice_constant)


def current_amplitude(archive: FloquetArchive, mu: int,
                      neighbor_densities: Optional[Mapping[int, ScalarField]] = None,
                      parity_tol: float = PARITY_TOL) -> VectorField:
    """mu-th order real current-density amplitude.

    neighbor_densities may supply the real amplitudes varrho_{mu-1} and
    varrho_{mu+1} entering the diamagnetic terms; they are computed on the
    fly when omitted.
    """
    if mu < 1:
        raise ConfigurationError("current amplitudes are defined for mu >= 1")
    if abs(mu) > 2 * archive.mu_max:
        raise ConfigurationError(f"|mu|={mu} outside the coefficient support")
    model = archive.model
    omega = archive.drive.photon_energy

    def paramagnetic(order):
        total = np.zeros(model.n_grid, dtype=complex)
        n_used = 0
        for bloch, sols, u, du in _k_terms(archive):
            psi_grad = du + 1j * bloch.k * u
            for sol in sols:
                s = _coefficient_overlap(sol.coefficients, order)
                total += (u.conj() * (s @ psi_grad)).sum(axis=0)
            n_used += 1
        return total * (model.spin_degeneracy / max(n_used, 1))

    k_plus = paramagnetic(mu)
    k_minus = paramagnetic(-mu)
    j_tilde = (k_plus - k_minus.conj()) / 2j

    if neighbor_densities is None:
        neighbor_densities = {}
        for nb_mu in (mu - 1, mu + 1):
            if abs(nb_mu) <= 2 * archive.mu_max:
                neighbor_densities[nb_mu] = real_amplitudes(
                    density_amplitude(archive, nb_mu), parity_tol)
    missing = [m for m in (mu - 1, mu + 1)
               if m not in neighbor_densities and abs(m) <= 2 * archive.mu_max]
    if missing:
        raise ConfigurationError(
            f"missing neighbor density amplitudes {missing} for current order {mu}")

    # diamagnetic term (E0 / 2w)(rho_{mu-1} + rho_{mu+1}) in the complex
    # exp(i mu w t) representation; rho_even = varrho/2, rho_odd = i varrho/2
    prefactor = archive.drive.signed_amplitude / (2.0 * omega)
    for nb_mu in (mu - 1, mu + 1):
        if nb_mu in neighbor_densities:
            varrho = neighbor_densities[nb_mu].values
            if nb_mu % 2 == 0:
                j_tilde = j_tilde + prefactor * (0.5 * varrho)
            else:
                j_tilde = j_tilde + prefactor * (0.5j * varrho)

    scale = max(np.max(np.abs(j_tilde)), 1e-300)
    if mu % 2 == 1:
        residual = np.max(np.abs(j_tilde.imag)) / scale
        values = -2.0 * j_tilde.real
    else:
        residual = np.max(np.abs(j_tilde.real)) / scale
        values = 2.0 * j_tilde.imag
    if residual > max(parity_tol, 1e-300) and scale > 1e-14:
        raise NumericalError(
            f"current parity violated for order {mu}: residual {residual:.3e}")
    return VectorField(order=mu, values=values,
                       lattice_constant=model.lattice_constant)


def spectral_derivative(values: np.ndarray, lattice_constant: float) -> np.ndarray:
    """d/dx of a periodic grid function via its Fourier series."""
    n = len(values)
    wavenumbers = 2.0 * np.pi * np.fft.fftfreq(n, d=lattice_constant / n)
    out = np.fft.ifft(1j * wavenumbers * np.fft.fft(values))
    return out.real if np.isrealobj(values) else out


def _check_reciprocal(G: float, a: float) -> int:
    ratio = G * a / (2.0 * np.pi)
    n = int(np.round(ratio))
    if abs(ratio - n) > 1e-9:
        raise ConfigurationError(
            f"G={G} is not a reciprocal lattice vector (G a / 2pi = {ratio})")
    return n


def fourier_decomposition(real_fields: Mapping[int, ScalarField],
                          G_list: Sequence[float],
                          currents: Optional[Mapping[int, VectorField]] = None,
                          omega: Optional[float] = None,
                          route_tol: float = 1e-6) -> list[FourierDecomposition]:
    """cos/sin transforms of varrho_mu at reciprocal lattice vectors.

    When current amplitudes are supplied (with the drive frequency omega),
    F_mu(G) is re-evaluated through the continuity route (i G / mu w --
    see divergence_route_fourier) and the two evaluations must agree
    within route_tol relative to the largest modulus at that G.
    """
    if currents and omega is None:
        raise ConfigurationError("omega required for the continuity cross-check")
    orders = tuple(sorted(real_fields))
    out = []
    for G in G_list:
        a = real_fields[orders[0]].lattice_constant
        _check_reciprocal(G, a)
        p_g = np.zeros(len(orders))
        p_u = np.zeros(len(orders))
        for j, mu in enumerate(orders):
            f = real_fields[mu]
            x = f.x_grid
            w = f.lattice_constant / f.n_grid
            p_g[j] = float(np.sum(np.cos(G * x) * f.values) * w)
            p_u[j] = float(np.sum(np.sin(G * x) * f.values) * w)
        dec = FourierDecomposition(G=float(G), orders=orders,
                                   P_g=p_g, P_u=p_u)
        if currents:
            scale = max(float(np.max(dec.modulus)), 1e-14)
            for mu, cur in currents.items():
                if mu == 0 or mu not in orders:
                    continue
                direct = complex(dec.F[dec.order_index(mu)])
                via = divergence_route_fourier(cur, omega, G)
                if abs(direct - via) / scale > route_tol:
                    raise NumericalError(
                        f"Fourier routes disagree at G={G}, order {mu}: "
                        f"direct={direct:.6e} continuity={via:.6e}")
        out.append(dec)
    return out


def divergence_route_fourier(current: VectorField, omega: float,
                             G: float) -> complex:
    """F_mu(G) evaluated from the current amplitude via continuity."""
    mu = current.order
    if mu == 0:
        raise ConfigurationError("divergence route undefined for mu = 0")
    _check_reciprocal(G, current.lattice_constant)
    x = current.x_grid
    w = current.lattice_constant / current.n_grid
    transform = np.sum(np.exp(1j * G * x) * current.values) * w
    return 1j * G * transform / (mu * omega)


def dipole_moment(varrho: ScalarField,
                  current: Optional[VectorField] = None,
                  omega: Optional[float] = None,
                  route_tol: float = 1e-4) -> float:
    """Cell dipole of a real density amplitude, integral of x varrho over [0, a).

    With a current amplitude given, the current-route value
    (1 / mu w)(integral of j_mu - a j_mu(a)) is checked against the direct
    moment within route_tol.
    """
    if varrho.order == 0:
        raise ConfigurationError(
            "absolute dipole of the static density is origin-dependent")
    # Spectral evaluation of the moment: x is discontinuous at the cell
    # boundary, so the plain grid sum converges only linearly. The density
    # is band-limited, so its FFT coefficients are exact and
    # integral(x exp(i G x), 0..a) = a / (i G) for G != 0.
    a = varrho.lattice_constant
    n = varrho.n_grid
    c = np.fft.fft(np.real(varrho.values)) / n
    g = 2.0 * np.pi * np.fft.fftfreq(n, d=a / n)
    direct = float(c[0].real * a * a / 2.0 -
                   np.sum(1j * a * c[1:] / g[1:]).real)
    if current is not None:
        if omega is None:
            raise ConfigurationError("omega required for the current route")
        mu = varrho.order
        a = varrho.lattice_constant
        via_current = (current.integrate() - a * float(current.values[0])) / (mu * omega)
        # a vanishing dipole (symmetric even harmonics) leaves only
        # truncation noise in both routes; compare against the natural
        # magnitude of the harmonic instead of the near-zero values
        floor = route_tol * a * a * float(np.max(np.abs(varrho.values)))
        if abs(direct) < floor and abs(via_current) < floor:
            return direct
        scale = max(abs(direct), abs(via_current), 1e-14)
        if abs(direct - via_current) / scale > route_tol:
            raise NumericalError(
                f"dipole routes disagree for order {mu}: direct={direct:.6e} "
                f"current-route={via_current:.6e}")
    return direct


def density_time_series(rho_0: ScalarField,
                        varrho: Mapping[int, ScalarField],
                        omega: float, t: float) -> np.ndarray:
    """rho(x, t) reconstructed from the harmonic amplitudes."""
    out = np.array(rho_0.values.real, dtype=float)
    for mu, f in varrho.items():
        if mu == 0:
            continue
        if mu % 2 == 1:
            out = out - f.values * np.sin(mu * omega * t)
        else:
            out = out + f.values * np.cos(mu * omega * t)
    return out


def current_time_series(currents: Mapping[int, VectorField],
                        omega: float, t: float) -> np.ndarray:
    """j(x, t) reconstructed from the harmonic amplitudes."""
    first = next(iter(currents.values()))
    out = np.zeros(first.n_grid)
    for mu, f in currents.items():
        if mu % 2 == 1:
            out = out - f.values * np.cos(mu * omega * t)
        else:
            out = out - f.values * np.sin(mu * omega * t)
    return out


def complex_density_transform(rho: ScalarField, G: float) -> complex:
    """Integral of exp(i G x) rho_mu over the cell (complex amplitude route)."""
    _check_reciprocal(G, rho.lattice_constant)
    w = rho.lattice_constant / rho.n_grid
    return complex(np.sum(np.exp(1j * G * rho.x_grid) * rho.values) * w)


def density_fourier_table(archive: FloquetArchive, mu_report: int,
                          n_G: int = 3) -> np.ndarray:
    """Complex transforms of rho_mu at the first n_G reciprocal vectors.

    Convergence metric for the parameter ladder: rows are orders
    0..mu_report, columns the first n_G positive reciprocal vectors.
    """
    a = archive.model.lattice_constant
    g_list = 2.0 * np.pi * np.arange(1, n_G + 1) / a
    table = np.zeros((mu_report + 1, n_G), dtype=complex)
    for mu in range(mu_report + 1):
        rho = density_amplitude(archive, mu)
        for j, G in enumerate(g_list):
            table[mu, j] = complex_density_transform(rho, G)
    return table
