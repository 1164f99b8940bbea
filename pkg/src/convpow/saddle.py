"""Saddle point kappa(j, t), the admissible ratio range, and the critical tilt theta*."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np

from .errors import NoRoot, RatioOutOfRange, SolverStall
from .laplace import LaplaceEval, domain_of, laplace_at
from .measure import Density, HeavyExpDensity, Lattice, MeasureSpec, Tabulated

__all__ = [
    "SaddleReport",
    "range_bounds",
    "solve_kappa",
    "solve_theta_for_slope",
    "solve_theta_star",
    "third_moment_rate",
]

SLOPE_RTOL = 1e-12


@dataclass(frozen=True)
class SaddleReport:
    j: int
    t: float
    kappa: float
    eval: LaplaceEval
    a_j: float
    T_j: float
    kappa_a: float


def third_moment_rate(ev: LaplaceEval) -> float:
    """T = |lambda'|^3/lambda'' + |Vhat'''|/(lambda'' Vhat) at the evaluation point."""
    return (abs(ev.lam1) ** 3 + abs(ev.vhat3_ratio)) / ev.lam2


def _support_start(spec: MeasureSpec) -> float:
    """x0 = inf{x > 0 : V(x) > 0}."""
    if isinstance(spec, Lattice):
        pos = [p for p, m in zip(spec.points, spec.masses) if m > 0]
        if pos:
            return float(pos[0])
        return spec.offset + spec.span * len(spec.masses)
    if isinstance(spec, Tabulated):
        k = next(i for i, v in enumerate(spec.values) if v > 0)
        return k * spec.h
    if isinstance(spec, Density):
        if spec.atom_at_zero > 0:
            return 0.0
        # the density is assumed positive on an interval starting at x0
        grid = np.concatenate([[0.0], np.geomspace(1e-12, 1e12, 2401)])
        pos = np.flatnonzero(np.asarray(spec.density(grid[1:])) > 0)
        if pos.size == 0:
            raise SolverStall("density has no mass below 1e12")
        lo, hi = float(grid[pos[0]]), float(grid[pos[0] + 1])
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if hi - lo <= 1e-12 * max(1.0, hi):
                break
            if float(spec.density(mid)) > 0:
                hi = mid
            else:
                lo = mid
        return lo if lo > 1e-12 else 0.0
    return 0.0


def range_bounds(spec: MeasureSpec) -> Tuple[float, float]:
    """(s_minus, s_plus): infimum and supremum of -lambda' over the domain interior."""
    s_minus = _support_start(spec)
    if isinstance(spec, HeavyExpDensity):
        return s_minus, 1.0 / spec.alpha
    if isinstance(spec, Tabulated):
        spec = spec.as_lattice()
    if isinstance(spec, Lattice):
        if spec.tail > 0:
            return s_minus, math.inf
        w = np.asarray(spec.masses)
        return s_minus, float(np.dot(w, spec.points) / w.sum())
    if isinstance(spec, Density):
        s0, included = domain_of(spec)
        if included:
            mean = laplace_at(spec, s0).mean
            return s_minus, mean if math.isfinite(mean) else math.inf
        return s_minus, math.inf
    return s_minus, math.inf


def _solve_decreasing(F: Callable, s0: float, included: bool, target_tol: Callable,
                      start: float, what: str):
    """Root of a decreasing F on (s0, inf); F(s) returns (value, derivative, payload).

    Works in d = s - s0 so that roots close to the abscissa keep full relative
    precision in the distance to the boundary.
    """
    def at(d):
        return F(s0 + d)

    d = start - s0
    fv, fd, pay = at(d)
    lo = hi = None  # lo: F > 0 side (smaller s); hi: F < 0 side
    for _ in range(400):
        if fv > 0:
            lo = (d, fv, fd, pay)
            if hi is not None:
                break
            d *= 4.0
        elif fv < 0:
            hi = (d, fv, fd, pay)
            if lo is not None:
                break
            d *= 0.25
            if d < 1e-300:
                break
        else:
            return s0 + d, pay
        if not math.isfinite(d) or d > 1e300:
            break
        fv, fd, pay = at(d)
    if lo is None or hi is None:
        raise SolverStall(f"could not bracket {what} within the domain")

    best = min((lo, hi), key=lambda r: abs(r[1]))
    if abs(best[1]) <= target_tol(best[3]):
        return s0 + best[0], best[3]
    d = best[0]
    fv, fd = best[1], best[2]
    for _ in range(200):
        step_ok = fd < 0 and math.isfinite(fd)
        d_new = d - fv / fd if step_ok else None
        if d_new is None or not (lo[0] < d_new < hi[0]):
            # bisection in log(d) when the bracket spans orders of magnitude
            if hi[0] > 4.0 * lo[0] and lo[0] > 0:
                d_new = math.sqrt(lo[0] * hi[0])
            else:
                d_new = 0.5 * (lo[0] + hi[0])
        d = d_new
        fv, fd, pay = at(d)
        if abs(fv) <= target_tol(pay):
            return s0 + d, pay
        if fv > 0:
            lo = (d, fv, fd, pay)
        else:
            hi = (d, fv, fd, pay)
        if hi[0] - lo[0] <= 4.0 * np.spacing(s0 + hi[0]):
            # floating-point resolution reached
            best = min((lo, hi), key=lambda r: abs(r[1]))
            return s0 + best[0], best[3]
    raise SolverStall(f"{what}: no convergence after 200 iterations")


def _solve_slope(spec: MeasureSpec, ratio: float) -> LaplaceEval:
    s0, included = domain_of(spec)

    def F(s):
        ev = laplace_at(spec, s)
        return -ev.lam1 - ratio, -ev.lam2, ev

    start = max(s0 * (1.0 + 1e-6), 1.0)
    if start <= s0:
        start = s0 + 1.0
    _, ev = _solve_decreasing(F, s0, included, lambda ev: SLOPE_RTOL * ratio, start,
                              f"saddle point for ratio {ratio!r}")
    return ev


def _check_ratio(spec, ratio):
    s_minus, s_plus = range_bounds(spec)
    if not (s_minus < ratio < s_plus):
        raise RatioOutOfRange(ratio, s_minus, s_plus)


def solve_kappa(spec: MeasureSpec, j: int, t: float) -> SaddleReport:
    """Solve -lambda'(kappa) = t/j and collect the quantities built on kappa."""
    if j < 1:
        raise ValueError("j must be a positive integer")
    ratio = t / j
    _check_ratio(spec, ratio)
    ev = _solve_slope(spec, ratio)
    a_j = math.sqrt(j * ev.lam2)
    return SaddleReport(j=int(j), t=float(t), kappa=ev.s, eval=ev, a_j=a_j,
                        T_j=third_moment_rate(ev), kappa_a=ev.s * a_j)


def solve_theta_for_slope(spec: MeasureSpec, alpha: float) -> float:
    _check_ratio(spec, alpha)
    return _solve_slope(spec, alpha).s


def solve_theta_star(spec: MeasureSpec) -> float:
    """Root of g(theta) = lambda(theta) - theta lambda'(theta); g is strictly decreasing."""
    s0, included = domain_of(spec)

    def F(s):
        ev = laplace_at(spec, s)
        return ev.lam - s * ev.lam1, -s * ev.lam2, ev

    def tol(ev):
        return 1e-12 * max(1.0, abs(ev.lam))

    start = max(s0 * (1.0 + 1e-6), 1.0)
    if start <= s0:
        start = s0 + 1.0
    lo_d = 1e-9 * max(1.0, s0)
    hi_d = 1e9 * max(1.0, s0)
    if included:
        g_lo = F(s0)[0]
    else:
        g_lo = F(s0 + lo_d)[0]
    g_hi = F(s0 + hi_d)[0]
    scan = (s0 if included else s0 + lo_d, s0 + hi_d)
    if not (g_lo > 0 > g_hi):
        raise NoRoot(f"lambda(theta) - theta*lambda'(theta) has no sign change on "
                     f"[{scan[0]:.6g}, {scan[1]:.6g}]", scan)
    theta, _ = _solve_decreasing(F, s0, included, tol, start, "theta*")
    return theta
