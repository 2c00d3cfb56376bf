"""Hot propagation kernels: numba-compiled with a pure-numpy fallback.

The fallback is selected when the environment variable
FLOQMIX_DISABLE_NUMBA is set to a truthy value, or when numba is not
importable. Both paths implement the identical fixed-step fourth-order
Runge-Kutta integration of

    i db/dt = [diag(eps) + f(t) P] b,   f(t) = e_over_w * g(t) * cos(w t)

for a batch of independent states (one per occupied band and k point),
with g a sin^2 ramp reaching 1 at t_ramp. States are sampled every
`stride` steps starting at step `sample_start`.
"""

from __future__ import annotations

import os

import numpy as np


def _numba_disabled() -> bool:
    return os.environ.get("FLOQMIX_DISABLE_NUMBA", "").lower() in ("1", "true", "yes")


def _envelope(t: float, t_ramp: float) -> float:
    if t >= t_ramp:
        return 1.0
    return np.sin(0.5 * np.pi * t / t_ramp) ** 2


def rk4_batch_numpy(eps, p, b0, e_over_w, omega, t_ramp, dt, n_steps,
                    sample_start, stride, n_samples):
    """Vectorized-over-states reference implementation."""
    b = b0.copy()
    out = np.empty((n_samples, *b.shape), dtype=np.complex128)
    idx = 0

    def deriv(t, y):
        f = e_over_w * _envelope(t, t_ramp) * np.cos(omega * t)
        return -1j * (eps * y + f * np.einsum("sij,sj->si", p, y))

    for step in range(n_steps):
        t = step * dt
        if step >= sample_start and (step - sample_start) % stride == 0:
            out[idx] = b
            idx += 1
        k1 = deriv(t, b)
        k2 = deriv(t + 0.5 * dt, b + 0.5 * dt * k1)
        k3 = deriv(t + 0.5 * dt, b + 0.5 * dt * k2)
        k4 = deriv(t + dt, b + dt * k3)
        b = b + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return out, b


def _rk4_batch_plain(eps, p, b0, e_over_w, omega, t_ramp, dt, n_steps,
                     sample_start, stride, n_samples):
    ns, nb = b0.shape
    b = b0.copy()
    out = np.empty((n_samples, ns, nb), dtype=np.complex128)
    y = np.empty(nb, dtype=np.complex128)
    k1 = np.empty(nb, dtype=np.complex128)
    k2 = np.empty(nb, dtype=np.complex128)
    k3 = np.empty(nb, dtype=np.complex128)
    k4 = np.empty(nb, dtype=np.complex128)
    idx = 0
    for step in range(n_steps):
        t = step * dt
        if step >= sample_start and (step - sample_start) % stride == 0:
            out[idx] = b
            idx += 1
        half = t + 0.5 * dt
        full = t + dt
        f0 = e_over_w * _env(t, t_ramp) * np.cos(omega * t)
        fh = e_over_w * _env(half, t_ramp) * np.cos(omega * half)
        f1 = e_over_w * _env(full, t_ramp) * np.cos(omega * full)
        for s in range(ns):
            _deriv(eps[s], p[s], b[s], f0, k1)
            for m in range(nb):
                y[m] = b[s, m] + 0.5 * dt * k1[m]
            _deriv(eps[s], p[s], y, fh, k2)
            for m in range(nb):
                y[m] = b[s, m] + 0.5 * dt * k2[m]
            _deriv(eps[s], p[s], y, fh, k3)
            for m in range(nb):
                y[m] = b[s, m] + dt * k3[m]
            _deriv(eps[s], p[s], y, f1, k4)
            for m in range(nb):
                b[s, m] = b[s, m] + (dt / 6.0) * (
                    k1[m] + 2.0 * k2[m] + 2.0 * k3[m] + k4[m])
    return out, b


def _env_plain(t, t_ramp):
    if t >= t_ramp:
        return 1.0
    s = np.sin(0.5 * np.pi * t / t_ramp)
    return s * s


def _deriv_plain(eps, p, y, f, out):
    nb = y.shape[0]
    for i in range(nb):
        acc = 0.0 + 0.0j
        for j in range(nb):
            acc += p[i, j] * y[j]
        out[i] = -1j * (eps[i] * y[i] + f * acc)


NUMBA_ENABLED = False
_env = _env_plain
_deriv = _deriv_plain
rk4_batch = rk4_batch_numpy

if not _numba_disabled():
    try:
        from numba import njit
    except ImportError:
        pass
    else:
        _env = njit(cache=True)(_env_plain)
        _deriv = njit(cache=True)(_deriv_plain)
        rk4_batch = njit(cache=True)(_rk4_batch_plain)
        NUMBA_ENABLED = True
