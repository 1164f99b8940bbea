"""Laplace-Stieltjes transform of V and the cumulant function lambda = log Vhat.

Closed forms are used for the built-in families.  Everything else goes
through quadrature (densities) or exact lattice sums with a closed-form
geometric tail.  Derivatives are returned as lam1..lam3; the quantity
Vhat'''/Vhat, which the third-moment rate needs, is carried alongside.
"""
from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass
from functools import singledispatch
from typing import Tuple

import numpy as np
from scipy import integrate, special

from .errors import OutOfDomain
from .lognum import LogNumber
from .measure import (Affine, Density, Exp, HeavyExpDensity, Lattice, LogPower, MeasureSpec,
                      PowerLaw, ShiftedExp, SqrtExpDensity, Tabulated)

__all__ = [
    "LaplaceEval",
    "ComplexLaplaceEval",
    "laplace_at",
    "laplace_complex",
    "domain_of",
    "vhat3_from_cumulants",
]


@dataclass(frozen=True)
class LaplaceEval:
    s: float
    Vhat: LogNumber
    lam: float
    lam1: float
    lam2: float
    lam3: float
    vhat3_ratio: float  # Vhat'''(s) / Vhat(s), always <= 0

    @property
    def mean(self) -> float:
        """Mean of the tilted law e^{-sx} dV(x) / Vhat(s), i.e. -lambda'(s)."""
        return -self.lam1


@dataclass(frozen=True)
class ComplexLaplaceEval:
    s: complex
    log_abs: float
    phase: float

    @property
    def value(self) -> complex:
        return cmath.exp(complex(self.log_abs, self.phase))

    def modulus_ratio(self, real_eval: LaplaceEval) -> float:
        """|Vhat(s)| / Vhat(Re s)."""
        return math.exp(self.log_abs - real_eval.lam)


def vhat3_from_cumulants(lam1: float, lam2: float, lam3: float) -> float:
    """Vhat'''/Vhat recovered from the first three derivatives of lambda."""
    return lam3 + 3.0 * lam2 * lam1 + lam1 ** 3


# ---------------------------------------------------------------------------
# domain
# ---------------------------------------------------------------------------

@singledispatch
def domain_of(spec: MeasureSpec) -> Tuple[float, bool]:
    """Abscissa of convergence s0 and whether s0 itself belongs to the domain."""
    return 0.0, False


@domain_of.register
def _(spec: ShiftedExp):
    return spec.a, False


@domain_of.register
def _(spec: Exp):
    return spec.a, False


@domain_of.register
def _(spec: HeavyExpDensity):
    return 1.0, True


@domain_of.register
def _(spec: Density):
    return spec.abscissa, spec.abscissa_included


def _check_domain(spec, s):
    s0, included = domain_of(spec)
    if not (s > s0 or (included and s == s0)) or not math.isfinite(s):
        raise OutOfDomain(s, s0)


def laplace_at(spec: MeasureSpec, s: float) -> LaplaceEval:
    s = float(s)
    _check_domain(spec, s)
    lam, lam1, lam2, lam3, v3 = _real(spec, s)
    return LaplaceEval(s, LogNumber(1, lam), lam, lam1, lam2, lam3, v3)


def laplace_complex(spec: MeasureSpec, s: complex) -> ComplexLaplaceEval:
    s = complex(s)
    _check_domain(spec, s.real)
    if s.imag == 0:
        lam = _real(spec, s.real)[0]
        return ComplexLaplaceEval(s, lam, 0.0)
    logv = _complex_log(spec, s)
    return ComplexLaplaceEval(s, logv.real, logv.imag)


# ---------------------------------------------------------------------------
# real-axis evaluation: returns (lam, lam1, lam2, lam3, vhat3_ratio)
# ---------------------------------------------------------------------------

@singledispatch
def _real(spec, s):
    raise TypeError(f"no Laplace transform for {type(spec).__name__}")


@_real.register
def _(spec: PowerLaw, s):
    al = spec.alpha
    lam = math.log(spec.b) + math.lgamma(al + 1.0) - al * math.log(s)
    return lam, -al / s, al / s ** 2, -2.0 * al / s ** 3, -al * (al + 1) * (al + 2) / s ** 3


@_real.register
def _(spec: Affine, s):
    a, b = spec.a, spec.b
    q = b * s + a
    lam = math.log(q) - math.log(s)
    lam1 = -a / (s * q)
    lam2 = a * (2 * b * s + a) / (s * s * q * q)
    lam3 = -2.0 * a * (3 * b * b * s * s + 3 * a * b * s + a * a) / (s ** 3 * q ** 3)
    v3 = -6.0 * a / (s ** 3 * q)  # -6a/s^4 divided by (b + a/s)
    return lam, lam1, lam2, lam3, v3


@_real.register
def _(spec: ShiftedExp, s):
    d = s - spec.a
    return math.log(spec.a) - math.log(d), -1.0 / d, 1.0 / d ** 2, -2.0 / d ** 3, -6.0 / d ** 3


@_real.register
def _(spec: Exp, s):
    a = spec.a
    d = s - a
    lam = math.log(s) - math.log(d)
    lam1 = -a / (s * d)
    lam2 = a * (2 * s - a) / (s * s * d * d)
    lam3 = -2.0 * a * (3 * s * s - 3 * s * a + a * a) / (s ** 3 * d ** 3)
    v3 = -6.0 * a / (d ** 3 * s)
    return lam, lam1, lam2, lam3, v3


@_real.register
def _(spec: SqrtExpDensity, s):
    # substituting u = sqrt(x): Vhat(s) = int_0^inf exp(u - s u^2) du, a Gaussian in u
    # centred at m = 1/(2s) with variance 1/(2s), truncated to u >= 0.
    m = 0.5 / s
    var = 0.5 / s
    z = 0.5 / math.sqrt(s)  # m / sqrt(2 var)
    half_erfc_neg = 1.0 - 0.5 * special.erfc(z)  # erfc(-z)/2, in [1/2, 1]
    lam = 0.25 / s + 0.5 * math.log(math.pi / s) + math.log(half_erfc_neg)
    # raw moments J_n of v = u - m under the truncated normal
    edge = math.exp(-z * z) / (math.sqrt(2 * math.pi * var) * half_erfc_neg)
    J = [1.0, var * edge]
    for n in range(1, 6):
        J.append(n * var * J[n - 1] + var * (-m) ** n * edge)
    mu1 = J[1]
    mu = [sum(math.comb(k, i) * J[i] * (-mu1) ** (k - i) for i in range(k + 1)) for k in range(7)]
    # X = u^2 = m^2 + 2 m v + v^2; with w = v - mu1 the centred X is c w + (w^2 - mu2)
    c = 2.0 * (m + mu1)
    mean_x = m * m + 2 * m * mu1 + J[2]
    var_x = c * c * mu[2] + 2 * c * mu[3] + mu[4] - mu[2] ** 2
    k3_x = (c ** 3 * mu[3] + 3 * c * c * (mu[4] - mu[2] ** 2)
            + 3 * c * (mu[5] - 2 * mu[2] * mu[3]) + mu[6] - 3 * mu[2] * mu[4] + 2 * mu[2] ** 3)
    raw3 = k3_x + 3 * mean_x * var_x + mean_x ** 3
    return lam, -mean_x, var_x, -k3_x, -raw3


def _lattice_real(points, log_w, tail, tail_start, span, s):
    """Tilted moments of a lattice measure; the tail is tail * sum_n delta_{tail_start + span n}."""
    lw = log_w - s * points
    parts = [lw]
    log_tail = -math.inf
    if tail > 0:
        one_minus_q = -math.expm1(-s * span)
        log_tail = math.log(tail) - s * tail_start - math.log(one_minus_q)
        parts.append(np.array([log_tail]))
    lam = float(np.logaddexp.reduce(np.concatenate(parts)))
    w = np.exp(lw - lam)
    p_tail = math.exp(log_tail - lam)

    def tail_central(mu, k):
        # sum_n (tail_start - mu + span n)^k q^n / sum_n q^n
        q = math.exp(-s * span)
        omq = -math.expm1(-s * span)
        S = [1.0 / omq, q / omq ** 2, q * (1 + q) / omq ** 3, q * (1 + 4 * q + q * q) / omq ** 4]
        d = tail_start - mu
        return sum(math.comb(k, i) * d ** (k - i) * span ** i * S[i] for i in range(k + 1)) * omq

    mean = float(np.dot(w, points))
    if p_tail > 0:
        mean += p_tail * tail_central(0.0, 1)
    dev = points - mean
    c2 = float(np.dot(w, dev ** 2))
    c3 = float(np.dot(w, dev ** 3))
    raw3 = float(np.dot(w, points ** 3))
    if p_tail > 0:
        c2 += p_tail * tail_central(mean, 2)
        c3 += p_tail * tail_central(mean, 3)
        raw3 += p_tail * tail_central(0.0, 3)
    return lam, -mean, c2, -c3, -raw3


@_real.register
def _(spec: Lattice, s):
    masses = np.asarray(spec.masses)
    keep = masses > 0
    with np.errstate(divide="ignore"):
        log_w = np.log(masses[keep])
    tail_start = spec.offset + spec.span * len(masses)
    return _lattice_real(spec.points[keep], log_w, spec.tail, tail_start, spec.span, s)


@_real.register
def _(spec: Tabulated, s):
    return _real(spec.as_lattice(), s)


# densities by quadrature ---------------------------------------------------

def _density_parts(spec):
    if isinstance(spec, HeavyExpDensity):
        return spec.log_density, 0.0
    if isinstance(spec, LogPower):
        def log_f(x):
            with np.errstate(divide="ignore"):
                return np.log(spec.density(x))
        return log_f, 0.0
    if isinstance(spec, Density):
        return spec.log_density, spec.atom_at_zero
    raise TypeError(type(spec).__name__)


def _quad_halfline(g, scale, rtol=1e-11):
    """int_0^inf g(x) dx split at x=1, the tail mapped by x = 1 + scale*y/(1-y)."""
    opts = dict(epsabs=0.0, epsrel=rtol, limit=500)

    def mapped(y):
        if y >= 1.0:
            return 0.0
        omy = 1.0 - y
        return g(1.0 + scale * y / omy) * scale / (omy * omy)

    # near the abscissa the higher moments converge slowly; quad's accuracy
    # warnings there are expected and the values only steer root brackets
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        head = integrate.quad(g, 0.0, 1.0, **opts)[0]
        tail = integrate.quad(mapped, 0.0, 1.0, **opts)[0]
    return head + tail


def _density_scale(spec, s):
    s0, _ = domain_of(spec)
    rate = s - s0 if s > s0 else s
    return 1.0 / max(rate, 1e-12) if rate > 0 else 1.0


def _density_shift(log_f, s, scale):
    # log-scale offset so the integrand peaks near 1 and cannot overflow
    probe = np.concatenate([np.linspace(1e-6, 1.0, 64), 1.0 + scale * np.geomspace(1e-3, 1e3, 256)])
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = log_f(probe) - s * probe
    vals = vals[np.isfinite(vals)]
    return float(np.max(vals)) if vals.size else 0.0


def _density_real(spec, s):
    log_f, atom = _density_parts(spec)
    scale = _density_scale(spec, s)
    shift = _density_shift(log_f, s, scale)

    def weight(x):
        v = float(log_f(np.float64(x))) - s * x - shift
        return math.exp(v) if v > -745 else 0.0

    base = _quad_halfline(weight, scale)
    atom_w = atom * math.exp(-shift) if atom > 0 else 0.0
    total = base + atom_w
    lam = math.log(total) + shift
    mean = _quad_halfline(lambda x: x * weight(x), scale) / total
    c2 = (_quad_halfline(lambda x: (x - mean) ** 2 * weight(x), scale) + atom_w * mean ** 2) / total
    c3 = (_quad_halfline(lambda x: (x - mean) ** 3 * weight(x), scale) - atom_w * mean ** 3) / total
    raw3 = _quad_halfline(lambda x: x ** 3 * weight(x), scale) / total
    return lam, -mean, c2, -c3, -raw3


_real.register(HeavyExpDensity, _density_real)
_real.register(LogPower, _density_real)
_real.register(Density, _density_real)


# ---------------------------------------------------------------------------
# complex arguments: return the principal log of Vhat(s)
# ---------------------------------------------------------------------------

@singledispatch
def _complex_log(spec, s):
    raise TypeError(f"no complex Laplace transform for {type(spec).__name__}")


@_complex_log.register
def _(spec: PowerLaw, s):
    return math.log(spec.b) + math.lgamma(spec.alpha + 1.0) - spec.alpha * cmath.log(s)


@_complex_log.register
def _(spec: Affine, s):
    return cmath.log(spec.b + spec.a / s)


@_complex_log.register
def _(spec: ShiftedExp, s):
    return math.log(spec.a) - cmath.log(s - spec.a)


@_complex_log.register
def _(spec: Exp, s):
    return cmath.log(s) - cmath.log(s - spec.a)


@_complex_log.register
def _(spec: SqrtExpDensity, s):
    z = 0.5 / cmath.sqrt(s)
    return 0.25 / s + 0.5 * cmath.log(math.pi / s) + cmath.log(1.0 - 0.5 * special.erfc(z))


def _lattice_complex(points, masses, tail, tail_start, span, s):
    # scale by the real-part maximum so nothing overflows
    lw = np.log(masses) - s.real * points
    shift = float(np.max(lw)) if lw.size else -math.inf
    if tail > 0:
        shift = max(shift, math.log(tail) - s.real * tail_start)
    total = complex(np.sum(np.exp(lw - shift) * np.exp(-1j * s.imag * points)))
    if tail > 0:
        q = cmath.exp(-s * span)
        total += tail * cmath.exp(-s * tail_start - shift) / (1.0 - q)
    return cmath.log(total) + shift


@_complex_log.register
def _(spec: Lattice, s):
    masses = np.asarray(spec.masses)
    keep = masses > 0
    tail_start = spec.offset + spec.span * len(masses)
    return _lattice_complex(spec.points[keep], masses[keep], spec.tail, tail_start, spec.span, s)


@_complex_log.register
def _(spec: Tabulated, s):
    return _complex_log(spec.as_lattice(), s)


def _density_complex(spec, s):
    log_f, atom = _density_parts(spec)
    sig, u = s.real, s.imag
    scale = _density_scale(spec, sig)
    shift = _density_shift(log_f, sig, scale)

    def g(x):
        v = float(log_f(np.float64(x))) - sig * x - shift
        return math.exp(v) if v > -745 else 0.0

    opts = dict(epsabs=0.0, epsrel=1e-10, limit=500)
    # [0, X] with the oscillatory weights of QUADPACK (QAWO), which are
    # reliable for any frequency on a finite interval
    X = 1.0 + 60.0 * scale
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        re = integrate.quad(g, 0.0, 1.0, weight="cos", wvar=u, **opts)[0]
        im = -integrate.quad(g, 0.0, 1.0, weight="sin", wvar=u, **opts)[0]
        re += integrate.quad(g, 1.0, X, weight="cos", wvar=u, **opts)[0]
        im -= integrate.quad(g, 1.0, X, weight="sin", wvar=u, **opts)[0]
        # what lies beyond X only matters for slowly (polynomially) decaying
        # integrands, e.g. a tilt sitting on an included abscissa
        rest = _quad_halfline(lambda y: g(X + y), scale)
        if rest > 1e-15 * abs(complex(re, im)):
            if abs(u) * scale >= 1.0:
                # Fourier integral over [X, inf): shift so the oscillation starts at 0
                cx, sx = math.cos(u * X), math.sin(u * X)
                gc = integrate.quad(lambda y: g(X + y), 0.0, np.inf, weight="cos", wvar=u,
                                    limlst=200)[0]
                gs = integrate.quad(lambda y: g(X + y), 0.0, np.inf, weight="sin", wvar=u,
                                    limlst=200)[0]
                # e^{-iu(X+y)} = (cos uX - i sin uX)(cos uy - i sin uy)
                re += cx * gc - sx * gs
                im += -(sx * gc + cx * gs)
            else:
                # fewer than one oscillation per decay scale: plain quadrature
                re += _quad_halfline(lambda y: g(X + y) * math.cos(u * (X + y)), scale)
                im -= _quad_halfline(lambda y: g(X + y) * math.sin(u * (X + y)), scale)
    total = complex(re, im)
    if atom > 0:
        total += atom * math.exp(-shift)
    return cmath.log(total) + shift


_complex_log.register(HeavyExpDensity, _density_complex)
_complex_log.register(LogPower, _density_complex)
_complex_log.register(Density, _density_complex)
