"""Log-scale asymptotic formulas for V^{*(j)}(t).

Every formula is assembled as the exponent j*lambda(kappa) + t*kappa first,
then the polynomial prefactors are subtracted; the two exponent terms can
each reach 1e5 while their sum is the scale that matters.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence, Union

from . import _series
from .errors import RatioOutOfRange, UnsupportedOrder
from .laplace import domain_of, laplace_at
from .measure import MeasureSpec
from .saddle import (SaddleReport, _solve_slope, range_bounds, solve_kappa,
                     solve_theta_star, third_moment_rate)

__all__ = [
    "Formula",
    "AsymptoticEstimate",
    "ExpansionCoefficients",
    "thm_a",
    "thm_b",
    "cor_lin_growth",
    "cor_clt",
    "expansion_coeffs",
    "linear_expansion_estimate",
    "auto_estimate",
    "laguerre_log_G",
    "laguerre_case1_log",
    "laguerre_case2_prefactor",
    "laguerre_case2_log",
    "laguerre_case3_log",
    "perron_log",
    "clt_threshold_t",
    "MAX_EXPANSION_ORDER",
]

LOG_2PI = math.log(2.0 * math.pi)
MAX_EXPANSION_ORDER = 5


class Formula(str, enum.Enum):
    THM_A = "ThmA"
    THM_B = "ThmB"
    COR_LIN_SMALL_Y = "CorLinGrowth_small_y"
    COR_LIN_C_J23 = "CorLinGrowth_y_c_j23"
    COR_CLT = "CorCLT"
    LINEAR_EXPANSION = "LinearExpansion"


@dataclass(frozen=True)
class AsymptoticEstimate:
    log_value: float
    formula: Formula
    report: Optional[SaddleReport] = None
    diagnostics: object = None  # ConditionReport, attached on request
    warnings: tuple = ()

    @property
    def value(self) -> float:
        return math.exp(self.log_value)


def _attach(est, spec, j, t, check):
    if not check:
        return est
    from .conditions import check_conditions

    return replace(est, diagnostics=check_conditions(spec, j, t))


def _gaussian_saddle_log(expo, theta, sigma2, j, y=0.0):
    # shared by thm_b and cor_lin_growth so y = 0 reproduces thm_b exactly
    out = expo - math.log(theta) - 0.5 * math.log(2.0 * math.pi * sigma2 * j)
    if y:
        out -= y * y / (2.0 * sigma2 * j)
    return out


def thm_a(spec: MeasureSpec, j: int, t: float, check: bool = False) -> AsymptoticEstimate:
    """Vhat(kappa)^j e^{t kappa} / (sqrt(2 pi) kappa a(j))."""
    rep = solve_kappa(spec, j, t)
    expo = j * rep.eval.lam + t * rep.kappa
    log_value = expo - math.log(rep.kappa) - math.log(rep.a_j) - 0.5 * LOG_2PI
    return _attach(AsymptoticEstimate(log_value, Formula.THM_A, rep), spec, j, t, check)


def thm_b(spec: MeasureSpec, j: int, t: float, theta: Optional[float] = None,
          sigma2: Optional[float] = None, check: bool = False) -> AsymptoticEstimate:
    """Vhat(kappa)^j e^{t kappa} / (sqrt(2 pi sigma^2 j) theta).

    ``theta`` and ``sigma2`` default to their finite-j proxies kappa(j) and
    lambda''(kappa(j)); pass the limits explicitly to evaluate the formula
    with known limiting values.
    """
    rep = solve_kappa(spec, j, t)
    th = rep.kappa if theta is None else theta
    s2 = rep.eval.lam2 if sigma2 is None else sigma2
    expo = j * rep.eval.lam + t * rep.kappa
    log_value = _gaussian_saddle_log(expo, th, s2, j)
    return _attach(AsymptoticEstimate(log_value, Formula.THM_B, rep), spec, j, t, check)


def cor_lin_growth(spec: MeasureSpec, alpha: float,
                   y_of_j: Union[float, Callable[[int], float], None], j: int,
                   c: Optional[float] = None) -> AsymptoticEstimate:
    """Linear growth t = alpha*j + y(j) with theta fixed by -lambda'(theta) = alpha.

    Without ``c`` this is the y = o(j^{2/3}) branch.  With ``c`` the
    y ~ c j^{2/3} branch is used (``y_of_j=None`` means y = c j^{2/3}) and
    the cubic correction -c^3 lambda'''(theta)/(6 sigma^6) is added.
    """
    if callable(y_of_j):
        y = float(y_of_j(j))
    elif y_of_j is None:
        if c is None:
            raise ValueError("either y_of_j or c is required")
        y = c * j ** (2.0 / 3.0)
    else:
        y = float(y_of_j)
    s_minus, s_plus = range_bounds(spec)
    if not (s_minus < alpha < s_plus):
        raise RatioOutOfRange(alpha, s_minus, s_plus)
    ev = _solve_slope(spec, alpha)
    theta, sigma2 = ev.s, ev.lam2
    t = alpha * j + y
    expo = j * ev.lam + t * theta
    log_value = _gaussian_saddle_log(expo, theta, sigma2, j, y)
    formula = Formula.COR_LIN_SMALL_Y
    if c is not None:
        log_value += -(c ** 3) * ev.lam3 / (6.0 * sigma2 ** 3)
        formula = Formula.COR_LIN_C_J23
    a_j = math.sqrt(j * sigma2)
    rep = SaddleReport(j=int(j), t=t, kappa=theta, eval=ev, a_j=a_j,
                       T_j=third_moment_rate(ev), kappa_a=theta * a_j)
    return AsymptoticEstimate(log_value, formula, rep)


def clt_threshold_t(spec: MeasureSpec, y: float, j: int, theta_star: Optional[float] = None):
    """t(j, y) solving the threshold equation with epsilon(j) = 0; returns (t, theta*, sigma^2)."""
    th = solve_theta_star(spec) if theta_star is None else theta_star
    ev_star = laplace_at(spec, th)
    sigma2 = ev_star.lam2
    kappa_j = th - (math.log(j) - y) / (2.0 * j * th * sigma2)
    s0, included = domain_of(spec)
    if not (kappa_j > s0 or (included and kappa_j == s0)):
        s_minus, s_plus = range_bounds(spec)
        raise RatioOutOfRange(math.nan, s_minus, s_plus)
    t = j * laplace_at(spec, kappa_j).mean
    return t, th, sigma2


def cor_clt(spec: MeasureSpec, y: float, j: int):
    """Returns (t, limit, estimate) for the finite-limit regime around theta*."""
    t, th, sigma2 = clt_threshold_t(spec, y, j)
    limit = math.exp(-0.5 * y) / (math.sqrt(2.0 * math.pi * sigma2) * th)
    est = thm_b(spec, j, t)
    return t, limit, replace(est, formula=Formula.COR_CLT)


# ---------------------------------------------------------------------------
# linear growth V(x) = a x + eps(x): series coefficients and the expansion
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExpansionCoefficients:
    p: int
    beta: tuple
    delta: tuple  # delta_1..delta_p
    iota: tuple  # iota_1..iota_p


def expansion_coeffs(a, beta: Sequence, p: int) -> ExpansionCoefficients:
    """delta_k of lambda(s) + log s - log a and iota_k of the inverse slope map.

    ``a`` and ``beta`` may be floats, Fractions or sympy symbols; the
    arithmetic is generic, so exact inputs give exact coefficients.
    """
    if p > MAX_EXPANSION_ORDER:
        raise UnsupportedOrder(f"expansion order p={p} > {MAX_EXPANSION_ORDER}")
    if p < 1:
        raise ValueError("p must be at least 1")
    if len(beta) < p:
        raise ValueError(f"need beta_0..beta_{p - 1}, got {len(beta)} values")
    # s Vhat(s)/a = 1 + sum_k beta_k (-1)^k s^{k+1} / (a k!)
    u = [0] * (p + 1)
    for k in range(p):
        u[k + 1] = beta[k] * (-1) ** k / (a * math.factorial(k))
    logser = _series.log1p(u, p)
    delta = logser[1:]
    # -lambda'(l(s)) = 1/s with l(s) = s w(s), w = 1 + sum iota_n s^n:
    # 1/w - sum_k k delta_k s^k w^{k-1} = 1, solved order by order
    w = [1] + [0] * p
    for n in range(1, p + 1):
        w[n] = 0
        inv = _series.inverse(w, n)
        resid = inv[n]
        for k in range(1, n + 1):
            resid = resid - k * delta[k - 1] * _series.power(w, k - 1, n - k)[n - k]
        w[n] = resid
    return ExpansionCoefficients(p=p, beta=tuple(beta[:p]), delta=tuple(delta), iota=tuple(w[1:]))


def linear_expansion_estimate(a: float, coeffs: ExpansionCoefficients, j: int,
                              t: float) -> AsymptoticEstimate:
    """(t a)^j / j! * exp(-sum_k (iota_k/k) j^{k+1}/t^k)."""
    p = coeffs.p
    corr = sum(float(coeffs.iota[k - 1]) / k * j ** (k + 1) / t ** k for k in range(1, p + 1))
    log_value = j * math.log(t) + j * math.log(float(a)) - math.lgamma(j + 1.0) - corr
    warns = ()
    if j ** (p + 2) / t ** (p + 1) > 0.1:
        warns = (f"j^{p + 2}/t^{p + 1} = {j ** (p + 2) / t ** (p + 1):.3g} > 0.1: "
                 "outside the regime where the expansion is meaningful",)
    return AsymptoticEstimate(log_value, Formula.LINEAR_EXPANSION, None, None, warns)


def auto_estimate(spec: MeasureSpec, rows) -> Formula:
    """Heuristic (non-normative) theorem choice for a sweep of (j, t) rows.

    Picks part (b) when t/j stays within 10% of its mean across the sweep,
    part (a) otherwise.
    """
    ratios = [t / j for j, t in rows]
    if not ratios:
        return Formula.THM_A
    mean = sum(ratios) / len(ratios)
    if all(abs(r - mean) <= 0.1 * mean for r in ratios):
        return Formula.THM_B
    return Formula.THM_A


# ---------------------------------------------------------------------------
# closed-form displays for V(x) = x + 1, where V^{*(j)}(t) = L_j(-t)
# ---------------------------------------------------------------------------

def laguerre_log_G(z: float) -> float:
    """log G(z) = 1/(1+z) + log(1 + 1/z), so that j log G(kappa) = j lambda + t kappa."""
    return 1.0 / (1.0 + z) + math.log1p(1.0 / z)


def _affine_kappa(j, t):
    # (sqrt(1 + 4j/t) - 1)/2 without cancellation for small j/t
    r = 4.0 * j / t
    return 0.5 * r / (math.sqrt(1.0 + r) + 1.0)


def laguerre_case1_log(j: int, t: float) -> float:
    """t >> j: L_j(-t) ~ G(kappa)^j / sqrt(2 pi j)."""
    return j * laguerre_log_G(_affine_kappa(j, t)) - 0.5 * math.log(2.0 * math.pi * j)


def laguerre_case2_prefactor(c: float) -> float:
    """(c^2 + 4c)^{-1/4} / phi(c) with phi(c) the limit of kappa(j) along t = c j."""
    phi = 0.5 * (math.sqrt(1.0 + 4.0 / c) - 1.0)
    return (c * c + 4.0 * c) ** -0.25 / phi


def laguerre_case2_log(j: int, t: float, c: Optional[float] = None) -> float:
    c = t / j if c is None else c
    return (math.log(laguerre_case2_prefactor(c)) - 0.5 * math.log(2.0 * math.pi * t)
            + j * laguerre_log_G(_affine_kappa(j, t)))


def laguerre_case3_log(j: int, t: float) -> float:
    """t << j with G(kappa)^j kept: prefactor 1/(2 (pi^2 t j)^{1/4})."""
    return (-math.log(2.0) - 0.25 * math.log(math.pi ** 2 * t * j)
            + j * laguerre_log_G(_affine_kappa(j, t)))


def perron_log(j: int, t: float) -> float:
    """Perron's asymptotic log L_j(-t) ~ -t/2 + 2 sqrt(t j) - log(2 (pi^2 t j)^{1/4})."""
    return (-math.log(2.0) - 0.25 * math.log(math.pi ** 2 * t * j)
            - 0.5 * t + 2.0 * math.sqrt(t * j))
