"""Benchmark the spectral solver backends (numba @njit loop vs batched numpy).

Usage: python benchmarks/bench_solver.py [--points 4001] [--repeats 5]

Times the per-frequency solve over the default grid for a representative
operating point, reports both backends and their agreement. The numba path
is compiled (and cached) on the first call, which is excluded from timing.
"""

import argparse
import math
import time

import numpy as np

from cscavity import build_system, compute_spectra, ExperimentConfig
from cscavity._kernels import NUMBA_AVAILABLE

TWO_PI = 2.0 * math.pi

CONFIG = ExperimentConfig(
    wavelength=1.064e-6, tweezer_power=0.485, waist_x=0.928e-6,
    waist_y=1.068e-6, particle_radius=60.1e-9, density=1850.0,
    rel_permittivity=2.1, cavity_length=12.23e-3, cavity_waist=61e-6,
    kappa=TWO_PI * 396e3, kappa_in=TWO_PI * 162e3, detuning=-TWO_PI * 176e3,
    polarisation_angle=math.radians(49.0), trap_position=0.2 * TWO_PI,
)


def run(points: int, repeats: int) -> None:
    built = build_system(CONFIG)
    grid = np.linspace(0.7 * built.derived.omega_y0,
                       1.3 * built.derived.omega_x0, points)
    backends = ["numpy"] + (["numba"] if NUMBA_AVAILABLE else [])
    results = {}
    for backend in backends:
        # warm up (numba compilation, numpy allocator)
        compute_spectra(grid, built.couplings, built.system, built.noise,
                        backend=backend)
        best = math.inf
        for _ in range(repeats):
            t0 = time.perf_counter()
            results[backend] = compute_spectra(
                grid, built.couplings, built.system, built.noise,
                backend=backend)
            best = min(best, time.perf_counter() - t0)
        rate = points / best
        print(f"{backend:>6}: {best * 1e3:8.2f} ms for {points} points "
              f"({rate / 1e6:.2f} M solves/s of the 6x6 pair)")
    if len(results) == 2:
        a, b = results["numpy"], results["numba"]
        rel = np.max(np.abs(a.sxy - b.sxy) / np.abs(a.sxy).max())
        print(f"max |sxy difference| / max |sxy|: {rel:.2e}")


if __name__ == "__main__":
    parser = argparse.ArgumentParser()
    parser.add_argument("--points", type=int, default=4001)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()
    run(args.points, args.repeats)
