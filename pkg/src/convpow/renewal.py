"""Convolution powers of a renewal function U(t) = 1 + sum_n P{xi_1+...+xi_n <= t}.

U grows linearly with slope 1/m (m = E xi), so U^{*(j)} falls under the
linear-growth expansion.  The coefficients depend on the law of xi only
through its first few moments.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import integrate

from ._kernels import renewal_density
from .asymptotics import AsymptoticEstimate, Formula
from .errors import InvalidSpec, MissingMoment, NotProbability
from .measure import (Density, GridMeasure, Lattice, MeasureSpec, Tabulated, discretize,
                      spec_from_dict, spec_to_dict)

__all__ = [
    "RenewalInput",
    "renewal_betas",
    "renewal_b_coeffs",
    "renewal_asymptotic",
    "build_renewal_grid",
    "renewal_input_from_json",
    "renewal_input_to_dict",
    "distribution_moments",
]

MAX_BETA_ORDER = 3


def distribution_moments(dist: MeasureSpec, kmax: int) -> list:
    """E[xi^k], k = 1..kmax, for a probability spec (lattice, tabulated or density)."""
    if isinstance(dist, Tabulated):
        dist = dist.as_lattice()
    if isinstance(dist, Lattice):
        if dist.tail:
            raise InvalidSpec("moments of a lattice with a geometric tail are not supported")
        w = np.asarray(dist.masses, dtype=float)
        x = dist.points
        return [float(np.dot(w, x ** k)) for k in range(1, kmax + 1)]
    if isinstance(dist, Density):
        out = []
        for k in range(1, kmax + 1):
            val, _ = integrate.quad(lambda x: x ** k * float(dist.density(x)), 0.0, np.inf,
                                    limit=200, epsrel=1e-10)
            out.append(val)
        return out
    raise NotProbability(f"{type(dist).__name__} does not describe a probability law")


@dataclass(frozen=True)
class RenewalInput:
    moments: tuple
    dist: Optional[MeasureSpec] = None

    def __post_init__(self):
        mom = tuple(float(m) for m in self.moments)
        object.__setattr__(self, "moments", mom)
        if not mom:
            raise MissingMoment("at least E[xi] is required")
        if not all(math.isfinite(m) for m in mom):
            raise InvalidSpec("moments must be finite")
        if mom[0] <= 0:
            raise InvalidSpec("E[xi] must be positive")
        self._check_hankel(mom)
        if self.dist is not None:
            got = distribution_moments(self.dist, len(mom))
            for k, (a, b) in enumerate(zip(got, mom), start=1):
                if abs(a - b) > 0.01 * abs(b):
                    raise InvalidSpec(f"E[xi^{k}] of dist is {a:.6g}, declared {b:.6g}")

    @staticmethod
    def _check_hankel(mom):
        # positivity of the Hankel determinants of a law on [0, inf)
        m = (1.0,) + mom
        scale = max(abs(x) for x in m)
        tol = 1e-12
        checks = []
        if len(m) >= 3:
            checks.append(("E[xi^2] >= E[xi]^2", m[2] - m[1] ** 2, m[2]))
        if len(m) >= 4:
            checks.append(("E[xi]E[xi^3] >= E[xi^2]^2", m[1] * m[3] - m[2] ** 2, m[1] * m[3]))
        if len(m) >= 5:
            H = np.array([[m[0], m[1], m[2]], [m[1], m[2], m[3]], [m[2], m[3], m[4]]])
            checks.append(("3x3 Hankel determinant >= 0", float(np.linalg.det(H)),
                           scale ** 3))
        for what, val, ref in checks:
            if val < -tol * abs(ref):
                raise InvalidSpec(f"inconsistent moments: {what} fails")

    @property
    def mean(self) -> float:
        return self.moments[0]

    def moment(self, k: int) -> float:
        if k > len(self.moments):
            raise MissingMoment(f"E[xi^{k}] is required")
        return self.moments[k - 1]


def renewal_betas(inp: RenewalInput, p: int) -> list:
    """beta_0..beta_{p-1}: moments of d(U(y) - y/m) in closed form."""
    if p > MAX_BETA_ORDER:
        raise MissingMoment(f"beta_k are available up to p={MAX_BETA_ORDER}")
    m = inp.mean
    out = []
    if p >= 1:
        m2 = inp.moment(2)
        out.append(m2 / (2 * m ** 2))
    if p >= 2:
        m3 = inp.moment(3)
        out.append(m3 / (6 * m ** 2) - m2 ** 2 / (4 * m ** 3))
    if p >= 3:
        m4 = inp.moment(4)
        out.append(m4 / (12 * m ** 2) - m3 * m2 / (3 * m ** 3) + m2 ** 3 / (4 * m ** 4))
    return out


def renewal_b_coeffs(inp: RenewalInput):
    m = inp.mean
    m2, m3, m4 = inp.moment(2), inp.moment(3), inp.moment(4)
    b1 = m2 / (2 * m)
    b2 = -m3 / (6 * m)
    b3 = (m4 / m + 2 * m2 * m3 / m ** 2 - m2 ** 3 / m ** 3) / 24.0
    return b1, b2, b3


def renewal_asymptotic(inp: RenewalInput, j: int, t: float) -> AsymptoticEstimate:
    """log of t^j/(m^j j!) exp(b1 j^2/t + b2 j^3/t^2 + b3 j^4/t^3)."""
    b1, b2, b3 = renewal_b_coeffs(inp)
    m = inp.mean
    log_value = (j * math.log(t) - j * math.log(m) - math.lgamma(j + 1.0)
                 + b1 * j ** 2 / t + b2 * j ** 3 / t ** 2 + b3 * j ** 4 / t ** 3)
    warns = ()
    if j ** 5 / t ** 4 > 0.1:
        warns = (f"j^5/t^4 = {j ** 5 / t ** 4:.3g} > 0.1: outside the regime of the expansion",)
    return AsymptoticEstimate(log_value, Formula.LINEAR_EXPANSION, None, None, warns)


def build_renewal_grid(dist: MeasureSpec, h: float, x_max: float,
                       mass_tol: float = 1e-6) -> GridMeasure:
    """dU on the grid from the cell-wise recursion u = delta_0 + f * u."""
    gm = discretize(dist, h, x_max)
    f = np.exp(gm.log_mass)
    total = float(f.sum())
    if abs(total - 1.0) > mass_tol:
        raise NotProbability(f"grid mass of the inter-arrival law is {total!r}, not 1")
    if f[0] >= 1.0:
        raise NotProbability("all mass sits at 0; the renewal function is infinite")
    u = renewal_density(f, gm.n)
    with np.errstate(divide="ignore"):
        return GridMeasure(h, np.log(u), 0.0)


def renewal_input_to_dict(inp: RenewalInput) -> dict:
    doc = {"moments": list(inp.moments)}
    if inp.dist is not None:
        doc["dist"] = spec_to_dict(inp.dist)
    return doc


def renewal_input_from_json(text_or_doc) -> RenewalInput:
    doc = json.loads(text_or_doc) if isinstance(text_or_doc, str) else text_or_doc
    if not isinstance(doc, dict) or "moments" not in doc:
        raise InvalidSpec("renewal input needs a 'moments' list")
    mom = doc["moments"]
    if not isinstance(mom, list) or not all(isinstance(x, (int, float)) for x in mom):
        raise InvalidSpec("'moments' must be a list of numbers")
    dist = doc.get("dist")
    return RenewalInput(tuple(mom), spec_from_dict(dist) if dist is not None else None)
