"""Time the shaped-pulse propagator kernel on the numba and numpy paths.

    python3 benchmarks/bench_kernels.py [--steps 6000 200] [--repeat 20]
"""

import argparse
import math
import timeit

import numpy as np

from qutrit_nmr import _kernels
from qutrit_nmr.spin_model import OPS, build_hamiltonian


def inputs(n_steps, dt):
    t = (np.arange(n_steps) + 0.5) * dt
    amp = np.exp(-0.5 * ((t - t.mean()) / (0.25 * n_steps * dt)) ** 2) * 800.0
    phase = 2 * math.pi * 120.0 * t
    return build_hamiltonian(lambda_eff=40.0), OPS.ix.astype(complex), OPS.iy.astype(complex), amp, phase, dt


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, nargs="+", default=[200, 6000, 60000])
    ap.add_argument("--repeat", type=int, default=10)
    args = ap.parse_args()

    paths = {"numpy": _kernels.piecewise_propagator_numpy}
    if _kernels.HAVE_NUMBA:
        paths["numba"] = _kernels.piecewise_propagator_numba
    print(f"{'steps':>7} " + " ".join(f"{name + ' ms':>11}" for name in paths) + "   speedup   max |diff|")
    for n in args.steps:
        data = inputs(n, 6e-3 / n)
        results = {name: fn(*data) for name, fn in paths.items()}  # warm-up, includes JIT
        times = {
            name: min(timeit.repeat(lambda fn=fn: fn(*data), number=1, repeat=args.repeat)) * 1e3
            for name, fn in paths.items()
        }
        row = f"{n:>7} " + " ".join(f"{times[name]:>11.3f}" for name in paths)
        if "numba" in paths:
            diff = np.max(np.abs(results["numba"] - results["numpy"]))
            row += f"   {times['numpy'] / times['numba']:>7.2f}x   {diff:.1e}"
        print(row)


if __name__ == "__main__":
    main()
