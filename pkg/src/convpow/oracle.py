"""Ground truth for V^{*(j)}(t): tilted grid convolution and exact closed forms.

Tilted-cumulation identity used throughout: if every atom of the grid
measure is reweighted by e^{-kappa x}, the j-fold convolution of the
reweighted measure carries mass e^{-kappa x} m_j(x) at x, where m_j is the
untilted j-fold mass.  Hence on the grid

    V^{*(j)}(t) = sum_{k h <= t} e^{+kappa k h} * (tilted mass at k),

which is what ``ConvolutionTable.log_cumulative`` holds.  The tilt only
moves the dynamic range of the intermediate arrays; it does not change the
answer.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import gammaln

from ._kernels import laguerre_log
from .errors import ConvPowError, HorizonTooSmall
from .lognum import LogNumber
from .measure import GridMeasure

__all__ = [
    "ConvolutionTable",
    "convolve_power",
    "exact_power_law",
    "exact_shifted_exp",
    "laguerre_eval",
    "laguerre_sum_log",
    "tilt_moments",
    "default_horizon",
    "table_to_csv",
    "exact_family",
    "grid_oracle",
]


@dataclass(frozen=True, eq=False)
class ConvolutionTable:
    base: GridMeasure
    j: int
    tilt: float
    log_mass: np.ndarray = field(repr=False)  # tilted j-fold masses
    log_cumulative: np.ndarray = field(repr=False)  # untilted log V^{*(j)}(k h)

    @property
    def h(self) -> float:
        return self.base.h

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.log_mass.size) * self.base.h

    @property
    def cumulative(self):
        return [LogNumber.from_log(v) if np.isfinite(v) else LogNumber.zero()
                for v in self.log_cumulative]

    def log_value(self, t: float) -> float:
        """log V^{*(j)}(t) for the grid measure (right-continuous step)."""
        k = int(math.floor(t / self.h + 1e-9))
        if k < 0:
            return -math.inf
        if k >= self.log_cumulative.size:
            raise HorizonTooSmall(f"t={t!r} lies beyond the table horizon "
                                  f"{(self.log_cumulative.size - 1) * self.h!r}")
        return float(self.log_cumulative[k])

    def value(self, t: float) -> LogNumber:
        v = self.log_value(t)
        return LogNumber.from_log(v) if np.isfinite(v) else LogNumber.zero()


def convolve_power(gm: GridMeasure, j: int, kappa: float = 0.0,
                   n_out: Optional[int] = None) -> ConvolutionTable:
    """j-fold convolution of ``gm`` by binary powering on the tilted grid.

    ``n_out`` cells are kept (default: the length of ``gm``).  Truncation
    never changes V^{*(j)} at kept grid points, since all masses are
    nonnegative and cells beyond the horizon only feed later cells.
    """
    if j < 1:
        raise ValueError("j must be at least 1")
    if kappa < 0:
        raise ValueError("tilt must be nonnegative")
    n = gm.n if n_out is None else int(n_out)
    if n > gm.n:
        # pad: cells past the base grid carry no mass
        pad = np.full(n - gm.n, -np.inf)
        gm = GridMeasure(gm.h, np.concatenate([gm.log_mass, pad]), gm.tilt)
    base = gm.tilted(kappa).truncated(n)
    result = None
    power = base
    k = int(j)
    while True:
        if k & 1:
            result = power if result is None else result.convolve(power, n)
        k >>= 1
        if not k:
            break
        power = power.convolve(power, n)
    return ConvolutionTable(base=gm, j=int(j), tilt=float(kappa),
                            log_mass=result.log_mass, log_cumulative=result.log_cdf())


def default_horizon(t: float, a_j: float, tail_rate: float = math.inf) -> float:
    """max(4t + 10 a(j), t + 25/tail_rate).

    The first term covers the Gaussian bulk.  The tilted law can only decay
    exponentially, at rate kappa - s0 (distance of the tilt to the abscissa
    of convergence), which the second term accounts for when j is small.
    """
    return max(4.0 * t + 10.0 * a_j, t + 25.0 / tail_rate)


def tilt_moments(gm: GridMeasure, j: int, t: float, kappa: Optional[float] = None,
                 spec=None, horizon: Optional[float] = None, tail_tol: float = 1e-6):
    """Mean and variance of the normalized tilted j-fold grid law.

    The tilt defaults to the saddle point kappa(j, t) of ``spec``; the
    comparison targets are t and a(j)^2 = j lambda''(kappa).  Raises
    HorizonTooSmall when more than ``tail_tol`` of the tilted mass sits in
    the last 5% of the horizon.
    """
    if kappa is None or horizon is None:
        if spec is None:
            raise ValueError("spec is required when kappa or horizon is not given")
        from .laplace import domain_of
        from .saddle import solve_kappa

        rep = solve_kappa(spec, j, t)
        if kappa is None:
            kappa = rep.kappa
        if horizon is None:
            rate = kappa - domain_of(spec)[0]
            horizon = default_horizon(t, rep.a_j, rate if rate > 0 else math.inf)
    n = int(math.floor(horizon / gm.h + 1e-9)) + 1
    if n > gm.n:
        raise HorizonTooSmall(f"grid covers {(gm.n - 1) * gm.h!r}, horizon needs {horizon!r}")
    tab = convolve_power(gm, j, kappa, n)
    lm = tab.log_mass
    top = np.max(lm)
    w = np.exp(lm - top)
    total = w.sum()
    tail = w[int(0.95 * n):].sum() / total
    if tail > tail_tol:
        raise HorizonTooSmall(f"tilted mass fraction {tail:.3g} in the last 5% of the horizon")
    p = w / total
    x = tab.x
    mean = float(np.dot(p, x))
    var = float(np.dot(p, (x - mean) ** 2))
    return mean, var


# ---------------------------------------------------------------------------
# exact closed forms
# ---------------------------------------------------------------------------

def exact_power_law(b: float, alpha: float, j: int, t: float) -> LogNumber:
    """(b Gamma(alpha+1))^j t^{j alpha} / Gamma(j alpha + 1)."""
    if t <= 0:
        return LogNumber.zero()
    ja = j * alpha
    return LogNumber.from_log(j * (math.log(b) + math.lgamma(alpha + 1.0))
                              + ja * math.log(t) - math.lgamma(ja + 1.0))


def exact_shifted_exp(a: float, j: int, t: float) -> LogNumber:
    """V^{*(j)}(t) = (1/(j-1)!) int_0^{a t} y^{j-1} e^y dy for V(x) = e^{ax} - 1.

    Below the switch point x = a t < j the positive series
    sum_m x^{j+m} / (m! (j+m)) is summed.  Above it the integral is written
    as (-1)^j + e^x x^{j-1}/(j-1)! * H(x) with
    H = 1 - (j-1)/x (1 - (j-2)/x (1 - ...)), evaluated in nested (Horner)
    form; every nested factor (j-k)/x is below 1, so nothing cancels badly.
    """
    x = a * t
    if x <= 0:
        return LogNumber.zero()
    if j == 1:
        return LogNumber.from_log(x + math.log(-math.expm1(-x)))
    log_fact = math.lgamma(j)  # log (j-1)!
    if x < j:
        term = 1.0 / j
        total = term
        m = 0
        while True:
            term *= x * (j + m) / ((m + 1) * (j + m + 1))
            total += term
            m += 1
            if term < 1e-17 * total and m > x:
                break
        return LogNumber.from_log(j * math.log(x) + math.log(total) - log_fact)
    n = j - 1
    H = 1.0
    for m in range(1, n + 1):
        # innermost factor 1/x first, outermost (j-1)/x last
        H = 1.0 - m / x * H
    main = LogNumber.from_log(x + n * math.log(x) - log_fact + math.log(H))
    return main + LogNumber.from_float(float((-1) ** j))


def laguerre_eval(j: int, t: float) -> LogNumber:
    """L_j(-t) for t >= 0 from the three-term recurrence.

    The recurrence is run on successive ratios r_n = L_n(-t)/L_{n-1}(-t),
    each of which exceeds 1, and log L_j(-t) = sum log r_n.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    return LogNumber.from_log(laguerre_log(int(j), float(t)))


def laguerre_sum_log(j: int, t: float) -> float:
    """log sum_i C(j,i) t^i / i!, summed directly in log space (independent check)."""
    if t == 0:
        return 0.0
    i = np.arange(j + 1, dtype=np.float64)
    terms = (gammaln(j + 1.0) - gammaln(i + 1.0) - gammaln(j - i + 1.0)
             + i * math.log(t) - gammaln(i + 1.0))
    return float(np.logaddexp.reduce(terms))


def table_to_csv(table: ConvolutionTable, stride: int = 1) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["grid_x", "log_V_star_j"])
    for k in range(0, table.log_cumulative.size, max(1, int(stride))):
        w.writerow([f"{k * table.h:.12e}", f"{table.log_cumulative[k]:.12e}"])
    return buf.getvalue()


def exact_family(spec, j: int, t: float) -> Optional[LogNumber]:
    """Exact V^{*(j)}(t) for the families that have one, else None.

    V(x) = a x + b gives b^j L_j(-a t/b) by the binomial expansion.
    """
    from .measure import Affine, PowerLaw, ShiftedExp

    if isinstance(spec, PowerLaw):
        return exact_power_law(spec.b, spec.alpha, j, t)
    if isinstance(spec, ShiftedExp):
        return exact_shifted_exp(spec.a, j, t)
    if isinstance(spec, Affine):
        if t < 0:
            return LogNumber.zero()
        return LogNumber.from_log(j * math.log(spec.b) + laguerre_log(int(j), spec.a * t / spec.b))
    return None


def grid_oracle(spec, j: int, t: float, h: float) -> LogNumber:
    """V^{*(j)}(t) from the grid measure on [0, t], tilted at kappa(j, t)."""
    from .measure import discretize
    from .saddle import solve_kappa

    if t < h:
        raise HorizonTooSmall(f"t={t!r} is shorter than one grid step")
    gm = discretize(spec, h, t)
    try:
        kappa = solve_kappa(spec, j, t).kappa
    except ConvPowError:
        # no saddle point (ratio outside the range): fall back to no tilt
        kappa = 0.0
    tab = convolve_power(gm, j, kappa)
    return tab.value(t)
