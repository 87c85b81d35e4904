"""
Hot loops for piecewise-constant propagation.

Two interchangeable implementations of `piecewise_propagator` live here:

* ``piecewise_propagator_numba`` -- an ``@njit`` loop that exponentiates each
  step by scaled Taylor series and accumulates the time-ordered product.
* ``piecewise_propagator_numpy`` -- batched ``eigh`` over all steps followed by
  a pairwise (log-depth) ordered reduction.

The active one is exported as ``piecewise_propagator``. Set the environment
variable ``QUTRIT_NUMBA=0`` before import to force the numpy path; the numpy
path is also used when numba cannot be imported.
"""

import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

_WANT_NUMBA = os.environ.get("QUTRIT_NUMBA", "1").strip().lower() not in ("0", "false", "no", "off")
HAVE_NUMBA = numba is not None
BACKEND = "numba" if (HAVE_NUMBA and _WANT_NUMBA) else "numpy"


def _step_hamiltonians(h_static, gen_x, gen_y, amp, phase):
    c = np.cos(phase)[:, None, None]
    s = np.sin(phase)[:, None, None]
    a = amp[:, None, None]
    return h_static[None] + a * (c * gen_x[None] + s * gen_y[None])


def _ordered_product(steps):
    # steps[0] acts first; returns steps[-1] @ ... @ steps[0]
    while steps.shape[0] > 1:
        n = steps.shape[0]
        paired = steps[1 : n - n % 2 : 2] @ steps[0 : n - n % 2 : 2]
        if n % 2:
            paired = np.concatenate([paired, steps[-1:]], axis=0)
        steps = paired
    return steps[0]


def piecewise_propagator_numpy(h_static, gen_x, gen_y, amp, phase, dt):
    """Time-ordered product of ``exp(-i H_k dt)`` with
    ``H_k = h_static + amp[k] (cos(phase[k]) gen_x + sin(phase[k]) gen_y)``.
    """
    amp = np.asarray(amp, dtype=np.float64)
    phase = np.asarray(phase, dtype=np.float64)
    dim = h_static.shape[0]
    if amp.size == 0:
        return np.eye(dim, dtype=np.complex128)
    h = _step_hamiltonians(h_static, gen_x, gen_y, amp, phase)
    w, v = np.linalg.eigh(h)
    steps = (v * np.exp(-1j * w * dt)[:, None, :]) @ v.conj().transpose(0, 2, 1)
    return _ordered_product(steps)


if HAVE_NUMBA:

    @numba.njit(cache=True, inline="always")
    def _matmul_into(out, a, b, dim):
        for i in range(dim):
            for j in range(dim):
                acc = 0j
                for m in range(dim):
                    acc += a[i, m] * b[m, j]
                out[i, j] = acc

    @numba.njit(cache=True)
    def _expm_step(x, out, term, tmp, dim):
        # exp(x) by scaling and squaring of a Taylor series; avoids a LAPACK
        # call per step, which dominates for tiny matrices
        norm = 0.0
        for i in range(dim):
            for j in range(dim):
                norm += x[i, j].real ** 2 + x[i, j].imag ** 2
        norm = np.sqrt(norm)
        squarings = 0
        while norm > 0.25:
            norm *= 0.5
            squarings += 1
        scale = 0.5**squarings
        for i in range(dim):
            for j in range(dim):
                x[i, j] *= scale
                term[i, j] = 1.0 if i == j else 0.0
                out[i, j] = term[i, j]
        k = 1
        while True:
            _matmul_into(tmp, term, x, dim)
            size = 0.0
            for i in range(dim):
                for j in range(dim):
                    term[i, j] = tmp[i, j] / k
                    out[i, j] += term[i, j]
                    size = max(size, abs(term[i, j]))
            if size < 1e-18 or k >= 30:
                break
            k += 1
        for _ in range(squarings):
            _matmul_into(tmp, out, out, dim)
            out[:, :] = tmp

    @numba.njit(cache=True)
    def _piecewise_numba_impl(h_static, gen_x, gen_y, amp, phase, dt):
        dim = h_static.shape[0]
        u = np.eye(dim, dtype=np.complex128)
        x = np.empty((dim, dim), dtype=np.complex128)
        step = np.empty((dim, dim), dtype=np.complex128)
        term = np.empty((dim, dim), dtype=np.complex128)
        tmp = np.empty((dim, dim), dtype=np.complex128)
        for k in range(amp.shape[0]):
            c = amp[k] * np.cos(phase[k])
            s = amp[k] * np.sin(phase[k])
            for a in range(dim):
                for b in range(dim):
                    x[a, b] = -1j * dt * (h_static[a, b] + c * gen_x[a, b] + s * gen_y[a, b])
            _expm_step(x, step, term, tmp, dim)
            _matmul_into(tmp, step, u, dim)
            u[:, :] = tmp
        return u

    def piecewise_propagator_numba(h_static, gen_x, gen_y, amp, phase, dt):
        return _piecewise_numba_impl(
            np.ascontiguousarray(h_static, dtype=np.complex128),
            np.ascontiguousarray(gen_x, dtype=np.complex128),
            np.ascontiguousarray(gen_y, dtype=np.complex128),
            np.ascontiguousarray(amp, dtype=np.float64),
            np.ascontiguousarray(phase, dtype=np.float64),
            float(dt),
        )

    piecewise_propagator_numba.__doc__ = piecewise_propagator_numpy.__doc__
else:  # pragma: no cover
    piecewise_propagator_numba = None


piecewise_propagator = piecewise_propagator_numba if BACKEND == "numba" else piecewise_propagator_numpy


def expm_hermitian(h, t):
    """``exp(-i h t)`` for a Hermitian matrix ``h``."""
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * w * t)) @ v.conj().T
