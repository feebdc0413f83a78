"""Benchmark the compiled kernels against the pure-NumPy fallback.

Run:  python benchmarks/bench_kernels.py
"""

import time

import numpy as np

from diracbath._kernels import backends


def time_call(fn, *args, repeat=3):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench_rk4():
    print("== rk4_evolve: single emitter, N = 128^2 bath (32768 modes) ==")
    rng = np.random.default_rng(0)
    m = 2 * 128 * 128
    omega = rng.uniform(-3, 3, m)
    coup = (rng.normal(size=(1, m)) + 1j * rng.normal(size=(1, m)))
    coup *= 0.1 / np.sqrt(m)
    delta = np.zeros(1)
    ce0 = np.array([1.0 + 0j])
    bath0 = np.zeros(m, dtype=complex)
    n_steps = 1200
    snap = np.array([n_steps], dtype=np.int64)
    results = {}
    for name, mod in backends().items():
        dt_wall, out = time_call(
            mod.rk4_evolve, omega, coup, delta, ce0, bath0, 0.01,
            n_steps, 100, snap, repeat=2)
        results[name] = (dt_wall, out)
        rate = n_steps * m / dt_wall / 1e6
        print(f"  {name:9s}: {dt_wall:7.3f} s   ({rate:6.1f} M mode-steps/s)")
    if len(results) == 2:
        dev = np.max(np.abs(results["python"][1][1] - results["compiled"][1][1]))
        print(f"  speedup: {results['python'][0] / results['compiled'][0]:.2f}x, "
              f"max |dCe| between backends: {dev:.2e}")


def bench_dipole_sum():
    print("== dipole_phase_sum: 120-shell table (58081 points) x 50 k ==")
    rng = np.random.default_rng(1)
    p = (2 * 120 + 1) ** 2
    rxy = np.ascontiguousarray(rng.normal(0, 5, (p, 2)))
    g9 = np.ascontiguousarray(rng.normal(size=(p, 9)) + 1j * rng.normal(size=(p, 9)))
    ks = rng.uniform(-10, 10, (50, 2))
    results = {}
    for name, mod in backends().items():
        t0 = time.perf_counter()
        acc = np.zeros(9, dtype=complex)
        for kx, ky in ks:
            acc += mod.dipole_phase_sum(rxy, g9, kx, ky)
        dt_wall = time.perf_counter() - t0
        results[name] = (dt_wall, acc)
        print(f"  {name:9s}: {dt_wall:7.3f} s   ({len(ks) / dt_wall:6.1f} k-points/s)")
    if len(results) == 2:
        dev = np.max(np.abs(results["python"][1] - results["compiled"][1]))
        print(f"  speedup: {results['python'][0] / results['compiled'][0]:.2f}x, "
              f"max deviation: {dev:.2e}")


if __name__ == "__main__":
    names = list(backends())
    print(f"available backends: {names}")
    bench_rk4()
    bench_dipole_sum()
