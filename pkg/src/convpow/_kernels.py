"""Hot inner loops: numba-compiled when available, pure numpy otherwise.

Set ``CONVPOW_DISABLE_NUMBA=1`` to force the numpy path (useful for
debugging and for the benchmark in ``benchmarks/bench_kernels.py``).
``CONVPOW_THREADS`` caps the numba thread pool.
"""
import math
import os

import numpy as np

__all__ = [
    "USING_NUMBA",
    "conv_trunc",
    "renewal_density",
    "laguerre_log",
    "conv_trunc_numpy",
    "renewal_density_numpy",
    "laguerre_log_numpy",
]


def _flag(name):
    return os.environ.get(name, "").strip().lower() in ("1", "true", "yes", "on")


try:
    if _flag("CONVPOW_DISABLE_NUMBA"):
        raise ImportError("numba disabled by CONVPOW_DISABLE_NUMBA")
    import numba
    from numba import njit, prange

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False


# ---------------------------------------------------------------------------
# numpy reference implementations
# ---------------------------------------------------------------------------

def conv_trunc_numpy(a, b, n_out):
    """First ``n_out`` entries of the linear convolution of two nonneg arrays."""
    a = np.asarray(a, dtype=np.float64)[:n_out]
    b = np.asarray(b, dtype=np.float64)[:n_out]
    out = np.zeros(n_out)
    full = np.convolve(a, b)[:n_out]
    out[: len(full)] = full
    return out


def renewal_density_numpy(f, n):
    """Solve u = delta_0 + f * u on cells 0..n-1."""
    f = np.asarray(f, dtype=np.float64)
    fpad = np.zeros(n)
    fpad[: min(n, len(f))] = f[:n]
    denom = 1.0 - fpad[0]
    u = np.zeros(n)
    u[0] = 1.0 / denom
    rev = fpad[1:][::-1]  # rev[-k] == f[k]
    for m in range(1, n):
        # sum_{k=1}^{m} f[k] u[m-k]
        u[m] = np.dot(rev[n - 1 - m:], u[:m]) / denom
    return u


def laguerre_log_numpy(j, t):
    """log L_j(-t) from the three-term recurrence, carried as successive ratios.

    The ratio r_n = L_n(-t)/L_{n-1}(-t) is stored as e = r_n - 1, which obeys
    e' = (t + n e/(1+e))/(n+1); both terms are nonnegative, so small t
    loses nothing to cancellation.
    """
    if j == 0:
        return 0.0
    e = t
    acc = math.log1p(e)
    for n in range(1, j):
        e = (t + n * e / (1.0 + e)) / (n + 1)
        acc += math.log1p(e)
    return acc


# ---------------------------------------------------------------------------
# numba kernels
# ---------------------------------------------------------------------------

if HAVE_NUMBA:
    if "NUMBA_THREADING_LAYER" not in os.environ:
        # the TBB found on many systems is too old and numba warns about it
        numba.config.THREADING_LAYER_PRIORITY = ["omp", "tbb", "workqueue"]
    _threads = os.environ.get("CONVPOW_THREADS")
    if _threads:
        numba.set_num_threads(max(1, min(int(_threads), numba.config.NUMBA_NUM_THREADS)))

    @njit(parallel=True, cache=True)
    def _conv_trunc_nb(a, br, n_out):
        # br is b reversed, so each output cell is a contiguous dot product
        na = a.shape[0]
        nb = br.shape[0]
        out = np.zeros(n_out)
        for n in prange(n_out):
            lo = max(0, n - nb + 1)
            hi = min(n, na - 1)
            if hi >= lo:
                off = nb - 1 - n
                out[n] = np.dot(a[lo:hi + 1], br[off + lo:off + hi + 1])
        return out

    @njit(cache=True)
    def _renewal_density_nb(f, n):
        nf = f.shape[0]
        denom = 1.0 - f[0]
        u = np.zeros(n)
        u[0] = 1.0 / denom
        for m in range(1, n):
            s = 0.0
            top = m if m < nf - 1 else nf - 1
            for k in range(1, top + 1):
                s += f[k] * u[m - k]
            u[m] = s / denom
        return u

    @njit(cache=True)
    def _laguerre_log_nb(j, t):
        if j == 0:
            return 0.0
        e = t
        acc = math.log1p(e)
        for n in range(1, j):
            e = (t + n * e / (1.0 + e)) / (n + 1)
            acc += math.log1p(e)
        return acc

    def conv_trunc(a, b, n_out):
        a = np.ascontiguousarray(a[:n_out], dtype=np.float64)
        br = np.ascontiguousarray(np.asarray(b, dtype=np.float64)[:n_out][::-1])
        return _conv_trunc_nb(a, br, int(n_out))

    def renewal_density(f, n):
        return _renewal_density_nb(np.ascontiguousarray(f, dtype=np.float64), int(n))

    def laguerre_log(j, t):
        return float(_laguerre_log_nb(int(j), float(t)))

else:
    conv_trunc = conv_trunc_numpy
    renewal_density = renewal_density_numpy
    laguerre_log = laguerre_log_numpy

USING_NUMBA = HAVE_NUMBA
