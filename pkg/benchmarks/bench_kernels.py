"""Times the compiled kernels against the pure-numpy fallbacks.

Run:  python3 benchmarks/bench_kernels.py [--repeat 5]

The active backend is chosen by PILOTWAVE_NUMBA (default: numba when
importable); the vectorized numpy implementations are always reachable
through NUMPY_IMPLS, so one process can time both sides.
"""
import argparse
import time

import numpy as np

from pilotwave import _kernels as K


def timeit(fn, args, repeat):
    fn(*args)  # warm-up (jit compile on the numba side)
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def build_cases():
    rng = np.random.default_rng(0)
    cases = []

    x = np.linspace(-5, 5, 2001)
    s0 = np.sin(x) + 0.3 * x ** 2
    cases.append(("hopf_lax_1d (n=2001)", "hopf_lax_1d",
                  (s0, x, 0.9, 1.0, 1, 0.5, 0.0)))

    n2 = 72
    xs = np.linspace(-3, 3, n2)
    mx, my = np.meshgrid(xs, xs, indexing="ij")
    s2 = (0.2 * mx ** 2 + 0.4 * my ** 2).ravel()
    cases.append((f"hopf_lax_2d ({n2}x{n2})", "hopf_lax_2d",
                  (s2, mx.ravel(), my.ravel(), 0.5, 1.0, 0, 0.0, 0.0, 0.0)))

    xm = np.linspace(-4, 4, 801)
    cases.append(("hopf_lax_march_1d (n=801, 32 steps)", "hopf_lax_march_1d",
                  (0.5 * xm ** 2, xm, np.exp(-xm ** 2), 1.0, 0.4, 32)))

    npart = 100_000
    ngrid = 1024
    v0 = rng.normal(0, 1, ngrid)
    v1 = v0 + 0.01
    vm = 0.5 * (v0 + v1)
    r = np.abs(rng.normal(1, 0.1, ngrid)) + 0.5
    pos = rng.uniform(-3, 3, npart)
    flags = np.zeros(npart, dtype=np.int64)
    cases.append((f"rk4_scalar_1d ({npart} particles)", "rk4_scalar_1d",
                  (pos, flags, v0, vm, v1, r, r, r,
                   -4.0, 8.0 / ngrid, ngrid, 0.02, 1e-12)))

    nx, ny = 256, 256
    f2 = rng.normal(0, 1, (nx, ny))
    r2 = np.abs(rng.normal(1, 0.1, (nx, ny))) + 0.5
    pos2 = np.column_stack([rng.uniform(-1, 1, npart // 2),
                            rng.uniform(-1, 1, npart // 2)])
    flags2 = np.zeros(npart // 2, dtype=np.int64)
    cases.append((f"rk4_scalar_2d ({npart // 2} particles)", "rk4_scalar_2d",
                  (pos2, flags2, f2, f2, f2, f2, f2, f2, r2, r2, r2,
                   -2.0, 4.0 / nx, nx, -2.0, 4.0 / ny, ny, 0.02, 1e-12)))

    dep = rng.uniform(-3, 3, 1_000_000)
    wd = rng.uniform(0, 1, 1_000_000)
    cases.append(("deposit_cic_1d (1e6 particles)", "deposit_cic_1d",
                  (dep, wd, -4.0, 8.0 / 2048, 2048)))
    return cases


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    print(f"active backend: {K.active_backend()}")
    print(f"{'kernel':<38} {'active':>10} {'numpy':>10} {'speedup':>8}")
    for label, name, case_args in build_cases():
        def run_active(*a):
            copies = tuple(x.copy() if isinstance(x, np.ndarray) else x
                           for x in a)
            return getattr(K, name)(*copies)

        def run_numpy(*a):
            copies = tuple(x.copy() if isinstance(x, np.ndarray) else x
                           for x in a)
            return K.NUMPY_IMPLS[name](*copies)

        t_active = timeit(run_active, case_args, args.repeat)
        t_numpy = timeit(run_numpy, case_args, args.repeat)
        print(f"{label:<38} {t_active * 1e3:>8.2f}ms {t_numpy * 1e3:>8.2f}ms "
              f"{t_numpy / t_active:>7.1f}x")


if __name__ == "__main__":
    main()
