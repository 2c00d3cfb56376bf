"""Compiled propagation kernel against the pure-numpy reference, plus the
environment switch that selects the fallback."""

import os
import subprocess
import sys

import numpy as np

from floqmix import _kernels


def small_problem(rng):
    ns, nb = 3, 5
    eps = rng.uniform(0.0, 2.0, (ns, nb))
    herm = rng.normal(size=(ns, nb, nb)) + 1j * rng.normal(size=(ns, nb, nb))
    p = 0.5 * (herm + herm.conj().transpose(0, 2, 1))
    b0 = np.zeros((ns, nb), dtype=np.complex128)
    b0[:, 0] = 1.0
    return eps, p, b0


def test_compiled_kernel_matches_numpy_reference():
    rng = np.random.default_rng(3)
    eps, p, b0 = small_problem(rng)
    args = dict(e_over_w=0.05, omega=0.6, t_ramp=40.0, dt=0.02,
                n_steps=3000, sample_start=2000, stride=50, n_samples=20)
    out_ref, b_ref = _kernels.rk4_batch_numpy(eps, p, b0, **args)
    out, b = _kernels.rk4_batch(eps, p, b0, **args)
    assert np.allclose(out, out_ref, atol=1e-12)
    assert np.allclose(b, b_ref, atol=1e-12)
    # sanity: unitary evolution preserves the norm
    assert np.allclose(np.sum(np.abs(b) ** 2, axis=1), 1.0, atol=1e-8)


def test_disable_flag_selects_numpy_path():
    env = dict(os.environ, FLOQMIX_DISABLE_NUMBA="1")
    check = ("import floqmix._kernels as k; "
             "assert not k.NUMBA_ENABLED; "
             "assert k.rk4_batch is k.rk4_batch_numpy")
    subprocess.run([sys.executable, "-c", check], check=True, env=env)
