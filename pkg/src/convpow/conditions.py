"""Finite-j diagnostics for the hypotheses behind the saddle-point formulas.

Nothing here proves a limit statement.  The report collects the raw
numbers (kappa a(j), T_j / a(j), and a scanned estimate of
sup_{z >= gamma} |Vhat(kappa - i z/T_j)| / Vhat(kappa)) together with a
threshold-based verdict that is meant as a warning light only.
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .errors import ScanInconclusive
from .laplace import laplace_complex
from .measure import Affine, MeasureSpec
from .saddle import solve_kappa

__all__ = ["Regime", "ConditionReport", "check_conditions", "scan_modulus",
           "laguerre_case1_rates"]


class Regime(str, enum.Enum):
    A_OK = "A_ok"
    B_OK = "B_ok"
    SUSPECT = "suspect"


@dataclass(frozen=True)
class ConditionReport:
    j: int
    t: float
    kappa: float
    a_j: float
    T_j: float
    kappa_a: float
    Tj_over_aj: float
    nonlattice_sup: float
    sup_at_z: float
    first_ratio: float
    gamma: float
    z_max: float
    n_z: int
    arithmetic: bool
    regime: Regime

    def to_dict(self) -> dict:
        d = asdict(self)
        d["regime"] = self.regime.value
        d["schema_version"] = 1
        return d

    def to_json(self) -> str:
        def fmt(v):
            if isinstance(v, float):
                return float(f"{v:.12e}")
            return v

        return json.dumps({k: fmt(v) for k, v in self.to_dict().items()}, sort_keys=True)


def scan_modulus(spec: MeasureSpec, kappa: float, T_j: float, z: np.ndarray,
                 lam_kappa: Optional[float] = None) -> np.ndarray:
    """|Vhat(kappa - i z/T_j)| / Vhat(kappa) on the given z grid."""
    if lam_kappa is None:
        lam_kappa = laplace_complex(spec, complex(kappa, 0.0)).log_abs
    out = np.empty(len(z))
    for i, zi in enumerate(z):
        ev = laplace_complex(spec, complex(kappa, -zi / T_j))
        out[i] = math.exp(ev.log_abs - lam_kappa)
    return out


def check_conditions(spec: MeasureSpec, j: int, t: float, gamma: float = 1.0,
                     z_max: Optional[float] = None, n_z: int = 200,
                     tj_threshold: float = 0.2, sup_threshold: float = 0.98,
                     kappa_b_max: float = 10.0) -> ConditionReport:
    """Evaluate the diagnostics at (j, t) and classify the regime.

    A_ok: T_j/a(j) < ``tj_threshold`` and the scanned sup < ``sup_threshold``.
    B_ok: otherwise, when the spec is nonarithmetic, the scanned sup is below
    ``sup_threshold`` and kappa(j) <= ``kappa_b_max`` (a finite-j stand-in
    for kappa(j) having a finite positive limit).
    suspect: everything else.
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    z_max = 1e3 * gamma if z_max is None else float(z_max)
    if not z_max > gamma:
        raise ValueError("z_max must exceed gamma")
    rep = solve_kappa(spec, j, t)
    z = np.geomspace(gamma, z_max, int(n_z))
    mod = scan_modulus(spec, rep.kappa, rep.T_j, z, rep.eval.lam)
    # rounding can push the ratio a hair above 1 for near-degenerate cases
    mod = np.minimum(mod, 1.0)
    k = int(np.argmax(mod))
    if k == len(z) - 1 and len(z) > 1 and mod[-1] > mod[-2]:
        raise ScanInconclusive(f"modulus ratio still rising at z_max={z_max!r}")
    sup = float(mod[k])
    tj_aj = rep.T_j / rep.a_j
    arithmetic = bool(spec.arithmetic)
    if tj_aj < tj_threshold and sup < sup_threshold:
        regime = Regime.A_OK
    elif (not arithmetic) and sup < sup_threshold and rep.kappa <= kappa_b_max:
        regime = Regime.B_OK
    else:
        regime = Regime.SUSPECT
    return ConditionReport(
        j=int(j), t=float(t), kappa=rep.kappa, a_j=rep.a_j, T_j=rep.T_j,
        kappa_a=rep.kappa_a, Tj_over_aj=tj_aj, nonlattice_sup=sup,
        sup_at_z=float(z[k]), first_ratio=float(mod[0]), gamma=float(gamma),
        z_max=z_max, n_z=int(n_z), arithmetic=arithmetic, regime=regime)


def laguerre_case1_rates(j: int, t: float):
    """Ratios a(j)/(t j^{-1/2}), kappa a(j)/sqrt(j), T_j/(7t/j) for V(x) = x + 1."""
    rep = solve_kappa(Affine(1.0, 1.0), j, t)
    return (rep.a_j / (t / math.sqrt(j)),
            rep.kappa_a / math.sqrt(j),
            rep.T_j / (7.0 * t / j))
