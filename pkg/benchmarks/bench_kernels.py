"""Benchmark the numba kernels against the pure-numpy fallback.

Times the three hot paths (Poisson kernel table assembly, red-black SOR
sweeps, complex-region scan) on both backends and checks they agree.

Usage: python3 benchmarks/bench_kernels.py [--n 32] [--repeat 3]
"""

from __future__ import annotations

import argparse
import math
import time

import numpy as np

from harmonic_lattice._kernels import get_backend


def _time(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def _boundary_grid(N: int, rng) -> np.ndarray:
    g = np.zeros((2 * N + 1, 2 * N + 1))
    g[0, 1:-1] = rng.uniform(-1, 1, 2 * N - 1)
    g[-1, 1:-1] = rng.uniform(-1, 1, 2 * N - 1)
    g[1:-1, 0] = rng.uniform(-1, 1, 2 * N - 1)
    g[1:-1, -1] = rng.uniform(-1, 1, 2 * N - 1)
    return g


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=32)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    N = args.n

    backends = {}
    for name in ("numpy", "numba"):
        try:
            backends[name] = get_backend(name)
        except Exception as ex:
            print(f"backend {name} unavailable: {ex}")
    if len(backends) < 2:
        raise SystemExit("need both backends for a comparison")

    rng = np.random.Generator(np.random.Philox(1))
    grid = _boundary_grid(N, rng)
    omega = 2.0 / (1.0 + math.sin(math.pi / (2 * N)))
    re = np.linspace(-0.5, 0.5, 129)
    im = np.linspace(-1 / 16, 1 / 16, 33)
    zs = (re[None, :] + 1j * im[:, None]).ravel()

    rows = []
    results = {}
    for name, be in backends.items():
        be.kernel_table(4)  # warm up jit compilation outside the timed region
        t_table = _time(lambda: be.kernel_table(N), args.repeat)

        def run_sor():
            return be.sor_solve(grid.copy(), omega, 1e-12, 200 * N)

        run_sor()
        t_sor = _time(run_sor, args.repeat)

        be.complex_scan_max(8, zs[:16])
        t_scan = _time(lambda: be.complex_scan_max(N, zs), args.repeat)

        results[name] = (be.kernel_table(N), run_sor()[0], be.complex_scan_max(N, zs))
        rows.append((name, t_table, t_sor, t_scan))

    print(f"N = {N}, best of {args.repeat}")
    print(f"{'backend':<8} {'kernel_table':>14} {'sor_solve':>12} {'complex_scan':>14}")
    for name, t1, t2, t3 in rows:
        print(f"{name:<8} {t1 * 1e3:>12.2f}ms {t2 * 1e3:>10.2f}ms {t3 * 1e3:>12.2f}ms")

    (ta, sa, ca), (tb, sb, cb) = results["numpy"], results["numba"]
    print(f"kernel_table max diff: {np.max(np.abs(ta - tb)):.3e}")
    print(f"sor_solve    max diff: {np.max(np.abs(sa - sb)):.3e}")
    print(f"complex_scan max diff: {np.max(np.abs(ca - cb)):.3e}")


if __name__ == "__main__":
    main()
