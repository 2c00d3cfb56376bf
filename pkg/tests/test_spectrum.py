"""Quasielastic spectrum synthesis: pulse envelopes, coherent sums against
an independently coded oracle, symmetry decomposition, and grid helpers."""

import numpy as np
import pytest

from floqmix.errors import ConfigurationError
from floqmix.observables import FourierDecomposition
from floqmix.spectrum import (XrayPulse, decompose_pm_G, default_omega_s_grid,
                              default_t_p_grid, envelope,
                              quasielastic_spectrum, spectrum_pair,
                              t_p_harmonic_projection)

from conftest import OMEGA

PERIOD = 2.0 * np.pi / OMEGA
G1 = 2.0 * np.pi / 8.0
LN2 = np.log(2.0)


def synthetic_decomposition(f_complex):
    """Build a decomposition whose complex transforms equal f_complex[mu].

    complex_transform returns F/2 for even orders and i F/2 for odd ones,
    so invert that mapping when packing P_g + i P_u.
    """
    orders = tuple(sorted(f_complex))
    p_g, p_u = [], []
    for mu in orders:
        f = 2.0 * f_complex[mu] * (-1j if mu % 2 else 1.0)
        p_g.append(f.real)
        p_u.append(f.imag)
    return FourierDecomposition(G=G1, orders=orders,
                                P_g=np.array(p_g), P_u=np.array(p_u))


# --- pulse properties ---------------------------------------------------------

def test_pulse_validation_and_peak_envelope():
    with pytest.raises(ConfigurationError):
        XrayPulse(duration=0.0)
    assert XrayPulse(duration=82.68).peak_envelope == \
        pytest.approx(124.4651239504308, abs=1e-10)


def test_overlap_factor_frozen_value_and_resolvable_flag():
    pulse = XrayPulse(duration=1.14 * PERIOD)
    assert pulse.overlap_factor(1, OMEGA) == \
        pytest.approx(0.009791940323070184, abs=1e-15)
    assert XrayPulse(duration=1.13 * PERIOD).resolvable(1, OMEGA)
    assert not XrayPulse(duration=1.15 * PERIOD).resolvable(1, OMEGA)
    # interference of adjacent orders is invisible for a two-cycle pulse
    assert XrayPulse(duration=2.0 * PERIOD).overlap_factor(1, OMEGA) < 1e-6


def test_envelope_is_gaussian_at_shifted_center():
    pulse = XrayPulse(duration=0.8 * PERIOD)
    offsets = np.array([2 * OMEGA - 0.01, 2 * OMEGA, 2 * OMEGA + 0.01])
    e = envelope(2, offsets, pulse, OMEGA)
    assert e[1] == pytest.approx(pulse.peak_envelope)
    expected = pulse.peak_envelope * np.exp(
        -0.01 ** 2 * pulse.duration ** 2 / (8 * LN2))
    assert e[0] == pytest.approx(expected)
    assert e[2] == pytest.approx(expected)


# --- spectrum synthesis -------------------------------------------------------

def test_static_density_gives_single_normalized_bragg_peak():
    dec = synthetic_decomposition({0: 1.0 + 0j, 1: 0j, 2: 0j})
    pulse = XrayPulse(duration=0.75 * PERIOD)
    offsets = default_omega_s_grid(OMEGA, 2)
    t_p = default_t_p_grid(OMEGA)
    spec = quasielastic_spectrum(dec, pulse, OMEGA, offsets, t_p)
    assert np.max(spec.intensity) == pytest.approx(1.0, abs=1e-12)
    # no probe-time dependence and no interference channels
    assert np.max(np.abs(spec.intensity - spec.intensity[:, :1])) < 1e-15
    assert spec.interference == {}
    i0 = np.argmin(np.abs(offsets))
    assert spec.intensity[i0, 0] == pytest.approx(1.0, abs=1e-12)


def test_spectrum_matches_independent_coherent_sum():
    f = {0: 0.9 + 0j, 1: 0.02 + 0.01j, 2: -0.005 + 0.003j}
    dec = synthetic_decomposition(f)
    pulse = XrayPulse(duration=0.6 * PERIOD)
    offsets = np.linspace(-OMEGA, 3 * OMEGA, 41)
    t_p = default_t_p_grid(OMEGA, 8)
    spec = quasielastic_spectrum(dec, pulse, OMEGA, offsets, t_p)

    # independent evaluation, written as explicit loops from the definition
    full = dict(f)
    for mu in (1, 2):
        full[-mu] = (-1) ** mu * f[mu]
    tau = pulse.duration
    peak = np.sqrt(tau ** 2 * np.pi / (2 * LN2))
    ref = np.zeros((len(offsets), len(t_p)))
    for iw, dw in enumerate(offsets):
        for it, tp in enumerate(t_p):
            amp = 0j
            for mu, fm in full.items():
                env_mu = peak * np.exp(-(dw - mu * OMEGA) ** 2 * tau ** 2 /
                                       (8 * LN2))
                amp += env_mu * np.exp(-1j * mu * OMEGA * tp) * fm
            ref[iw, it] = abs(amp) ** 2
    ref /= (peak * abs(f[0])) ** 2
    assert np.max(np.abs(spec.intensity - ref)) < 1e-12


def test_mu_window_validation_and_truncation_guard():
    f = {0: 1.0 + 0j, 1: 0.05 + 0j, 2: 0.03 + 0j}
    dec = synthetic_decomposition(f)
    pulse = XrayPulse(duration=0.5 * PERIOD)
    offsets = default_omega_s_grid(OMEGA, 2)
    t_p = default_t_p_grid(OMEGA)
    with pytest.raises(ConfigurationError):
        quasielastic_spectrum(dec, pulse, OMEGA, offsets, t_p, mu_window=3)
    with pytest.raises(ConfigurationError):
        quasielastic_spectrum(dec, pulse, OMEGA, offsets, t_p, mu_window=0)
    # cutting the window below a significant order trips the guard
    with pytest.raises(ConfigurationError, match="truncates"):
        quasielastic_spectrum(dec, pulse, OMEGA, offsets, t_p, mu_window=1)
    # zero static transform cannot be normalized
    with pytest.raises(ConfigurationError):
        quasielastic_spectrum(synthetic_decomposition({0: 0j, 1: 0.1 + 0j}),
                              pulse, OMEGA, offsets, t_p)


def test_opposite_momentum_transfer_relations():
    # complex transforms at -G follow from reality of the density:
    # Frho_mu(-G) = (-1)^mu conj(Frho_mu(G))
    f = {0: 0.8 + 0j, 1: 0.01 + 0.02j, 2: 0.004 - 0.001j}
    dec = synthetic_decomposition(f)
    pulse = XrayPulse(duration=0.75 * PERIOD)
    offsets = np.linspace(-OMEGA, 3 * OMEGA, 33)
    t_p = default_t_p_grid(OMEGA, 8)
    plus, minus = spectrum_pair(dec, pulse, OMEGA, offsets, t_p)
    assert minus.G == -plus.G
    mirrored = synthetic_decomposition(
        {mu: (-1) ** mu * np.conj(fm) for mu, fm in f.items()})
    direct = quasielastic_spectrum(mirrored, pulse, OMEGA, offsets, t_p)
    assert np.max(np.abs(minus.intensity - direct.intensity)) < 1e-12


def test_decompose_pm_G_channels_and_errors():
    f = {0: 0.8 + 0j, 1: 0.01 + 0.02j, 2: 0.004 - 0.001j}
    dec = synthetic_decomposition(f)
    pulse = XrayPulse(duration=0.75 * PERIOD)
    offsets = np.linspace(-OMEGA, 3 * OMEGA, 33)
    t_p = default_t_p_grid(OMEGA, 16)
    plus, minus = spectrum_pair(dec, pulse, OMEGA, offsets, t_p)
    pm = decompose_pm_G(plus, minus)
    # the antisymmetric channel is purely oscillatory in t_p
    assert np.max(np.abs(pm.antisymmetric.mean(axis=1))) < 1e-14
    # and so is the dynamic centrosymmetric channel, by construction
    assert np.max(np.abs(pm.centrosymmetric_dynamic.mean(axis=1))) < 1e-14
    # channels reassemble the inputs
    assert np.allclose(pm.time_independent[:, None] + pm.antisymmetric +
                       pm.centrosymmetric_dynamic, plus.intensity, atol=1e-14)
    other = quasielastic_spectrum(dec, pulse, OMEGA, offsets[:-1], t_p)
    with pytest.raises(ConfigurationError):
        decompose_pm_G(plus, other)


def test_long_pulse_suppresses_probe_time_dependence():
    f = {0: 0.8 + 0j, 1: 0.05 + 0.01j, 2: 0.02 - 0.01j}
    dec = synthetic_decomposition(f)
    pulse = XrayPulse(duration=3.0 * PERIOD)
    offsets = default_omega_s_grid(OMEGA, 2)
    t_p = default_t_p_grid(OMEGA)
    spec = quasielastic_spectrum(dec, pulse, OMEGA, offsets, t_p)
    variation = np.max(spec.intensity, axis=1) - np.min(spec.intensity, axis=1)
    assert np.max(variation) < 1e-4 * np.max(spec.intensity)


# --- grid helpers -------------------------------------------------------------

def test_default_grids():
    offsets = default_omega_s_grid(OMEGA, 2, points_per_omega=64)
    assert len(offsets) == 4 * 64 + 1
    assert offsets[0] == pytest.approx(-OMEGA)
    assert offsets[-1] == pytest.approx(3 * OMEGA)
    t_p = default_t_p_grid(OMEGA, 16)
    assert len(t_p) == 16
    assert t_p[0] == 0.0
    assert t_p[-1] == pytest.approx(PERIOD * 15 / 16)


def test_t_p_harmonic_projection_exact_on_harmonic_series():
    t_p = default_t_p_grid(OMEGA, 16)
    values = (0.3 + 0.7 * np.cos(2 * OMEGA * t_p) - 0.2 * np.sin(2 * OMEGA * t_p))
    c, s = t_p_harmonic_projection(values, t_p, OMEGA, 2)
    assert c == pytest.approx(0.7, abs=1e-12)
    assert s == pytest.approx(-0.2, abs=1e-12)
    c0, _ = t_p_harmonic_projection(values, t_p, OMEGA, 0)
    assert c0 == pytest.approx(0.3, abs=1e-12)
    with pytest.raises(ConfigurationError):
        t_p_harmonic_projection(values[:3], t_p[:3], OMEGA, 2)
    with pytest.raises(ConfigurationError):
        t_p_harmonic_projection(values, 0.9 * t_p, OMEGA, 2)
