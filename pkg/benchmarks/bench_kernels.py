"""Time the numba kernels against their numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--sizes 2000,8000,32000] [--repeat 3]

Both backends live in the same process: the ``*_numpy`` functions are the
fallback that ``CONVPOW_DISABLE_NUMBA=1`` selects.
"""
import argparse
import time

import numpy as np

from convpow import _kernels as K


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--sizes", default="2000,8000,32000")
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]
    rng = np.random.default_rng(0)
    if not K.USING_NUMBA:
        print("numba disabled; only the numpy column is meaningful")
    # compile outside the timed region
    K.conv_trunc(np.ones(4), np.ones(4), 4)
    K.renewal_density(np.array([0.0, 0.5, 0.5]), 4)
    K.laguerre_log(3, 1.0)
    print(f"{'kernel':<16}{'n':>8}{'numba [s]':>12}{'numpy [s]':>12}{'speedup':>10}  max rel diff")
    for n in sizes:
        a, b = rng.random(n), rng.random(n)
        f = rng.random(n)
        f /= f.sum() * 1.01
        cases = [
            ("conv_trunc", lambda: K.conv_trunc(a, b, n), lambda: K.conv_trunc_numpy(a, b, n)),
            ("renewal_density", lambda: K.renewal_density(f, n), lambda: K.renewal_density_numpy(f, n)),
            ("laguerre_log", lambda: K.laguerre_log(50 * n, 1e3), lambda: K.laguerre_log_numpy(50 * n, 1e3)),
        ]
        for name, fast, slow in cases:
            tf = best_of(fast, args.repeat)
            ts = best_of(slow, args.repeat)
            x, y = np.asarray(fast()), np.asarray(slow())
            diff = float(np.max(np.abs(x - y) / np.maximum(np.abs(y), 1e-300)))
            print(f"{name:<16}{n:>8}{tf:>12.4f}{ts:>12.4f}{ts / tf:>10.1f}  {diff:.1e}")


if __name__ == "__main__":
    main()
