import os
import subprocess
import sys

import numpy as np
import pytest
from scipy.linalg import expm

from qutrit_nmr import _kernels
from qutrit_nmr.spin_model import OPS, SpinSystem, build_hamiltonian

needs_numba = pytest.mark.skipif(not _kernels.HAVE_NUMBA, reason="numba not installed")


def _loop_oracle(h0, gx, gy, amp, phase, dt):
    u = np.eye(3, dtype=complex)
    for a, p in zip(amp, phase):
        u = expm(-1j * (h0 + a * (np.cos(p) * gx + np.sin(p) * gy)) * dt) @ u
    return u


@pytest.fixture
def problem(rng):
    n = 37  # odd, exercises the leftover branch of the pairwise product
    h0 = np.asarray(build_hamiltonian(SpinSystem(40.0)))
    amp = rng.uniform(0, 2e3, n)
    phase = rng.uniform(-np.pi, np.pi, n)
    return h0, np.asarray(OPS.ix), np.asarray(OPS.iy), amp, phase, 7e-6


def test_numpy_path_matches_loop(problem):
    np.testing.assert_allclose(_kernels.piecewise_propagator_numpy(*problem), _loop_oracle(*problem), atol=1e-12)


@needs_numba
def test_numba_path_matches_loop(problem):
    np.testing.assert_allclose(_kernels.piecewise_propagator_numba(*problem), _loop_oracle(*problem), atol=1e-12)


@pytest.mark.parametrize("n", [0, 1, 2, 3, 8, 9])
def test_ordered_product_lengths(rng, n):
    h0, gx, gy = np.zeros((3, 3), complex), np.asarray(OPS.ix), np.asarray(OPS.iy)
    amp, phase = rng.uniform(0, 1e4, n), rng.uniform(0, 6, n)
    np.testing.assert_allclose(
        _kernels.piecewise_propagator_numpy(h0, gx, gy, amp, phase, 1e-5),
        _loop_oracle(h0, gx, gy, amp, phase, 1e-5),
        atol=1e-12,
    )


def test_expm_hermitian():
    h = np.asarray(OPS.ix + 0.3 * OPS.iz)
    np.testing.assert_allclose(_kernels.expm_hermitian(h, 0.8), expm(-0.8j * h), atol=1e-14)


def test_env_flag_selects_numpy():
    code = "from qutrit_nmr import _kernels as k; print(k.BACKEND, k.piecewise_propagator is k.piecewise_propagator_numpy)"
    env = dict(os.environ, QUTRIT_NUMBA="0")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.split() == ["numpy", "True"]


@needs_numba
def test_default_backend_is_numba():
    if os.environ.get("QUTRIT_NUMBA", "1") == "0":
        pytest.skip("numba disabled by environment")
    assert _kernels.BACKEND == "numba"
