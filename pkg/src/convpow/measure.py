"""Measure specifications (the function V) and their grid discretization.

A :class:`MeasureSpec` describes a right-continuous nondecreasing function V
vanishing on the negative half-line.  Built-in families cover the worked
examples; :class:`Lattice`, :class:`Density` and :class:`Tabulated` let users
supply their own measure.  :func:`discretize` turns any spec into a
:class:`GridMeasure`, the carrier used by the convolution oracle.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, ClassVar, Optional, Sequence

import numpy as np
from scipy import integrate

from ._kernels import conv_trunc
from .errors import InvalidSpec
from .lognum import LogNumber

__all__ = [
    "MeasureSpec",
    "PowerLaw",
    "Affine",
    "LogPower",
    "SqrtExpDensity",
    "ShiftedExp",
    "Exp",
    "HeavyExpDensity",
    "Lattice",
    "Density",
    "Tabulated",
    "GridMeasure",
    "discretize",
    "eval_V",
    "spec_from_json",
    "spec_from_dict",
    "spec_to_dict",
    "log_convolve",
]

# grid-index rounding slack: x/h within this of an integer is treated as on the grid
_GRID_EPS = 1e-9


def _positive(name, value):
    if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
        raise InvalidSpec(f"{name} must be a positive real, got {value!r}")
    return float(value)


def _nonneg(name, value):
    if not (isinstance(value, (int, float)) and math.isfinite(value) and value >= 0):
        raise InvalidSpec(f"{name} must be a nonnegative real, got {value!r}")
    return float(value)


@dataclass(frozen=True)
class MeasureSpec:
    """Base class; subclasses are immutable value objects."""

    family: ClassVar[str] = ""
    #: True for piecewise-constant V with jumps on a lattice (declared, not detected)
    arithmetic: ClassVar[bool] = False

    def V(self, x):
        raise NotImplementedError

    def log_cell_masses(self, h: float, n: int) -> np.ndarray:
        """log of mu(((k-1)h, kh]) for k=1..n, with index 0 holding log V(0)."""
        x = np.arange(n + 1) * h
        v = np.asarray(self.V(x), dtype=np.float64)
        m = np.empty(n + 1)
        m[0] = v[0]
        m[1:] = np.diff(v)
        if np.any(m < -1e-12 * np.maximum(np.abs(v), 1.0)):
            raise InvalidSpec("V is not nondecreasing on the grid")
        with np.errstate(divide="ignore"):
            return np.log(np.clip(m, 0.0, None))

    def params(self) -> dict:
        return {}


# ---------------------------------------------------------------------------
# built-in families
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PowerLaw(MeasureSpec):
    """V(x) = b x^alpha."""

    b: float = 1.0
    alpha: float = 1.0
    family: ClassVar[str] = "power_law"

    def __post_init__(self):
        object.__setattr__(self, "b", _positive("b", self.b))
        object.__setattr__(self, "alpha", _positive("alpha", self.alpha))

    def V(self, x):
        x = np.asarray(x, dtype=np.float64)
        return np.where(x >= 0, self.b * np.abs(x) ** self.alpha, 0.0)

    def log_cell_masses(self, h, n):
        k = np.arange(1, n + 1, dtype=np.float64)
        out = np.empty(n + 1)
        out[0] = -np.inf
        # b (kh)^a (1 - (1-1/k)^a), the bracket via expm1/log1p
        with np.errstate(divide="ignore"):
            bracket = -np.expm1(self.alpha * np.log1p(-1.0 / k))
            out[1:] = math.log(self.b) + self.alpha * np.log(k * h) + np.log(bracket)
        return out

    def params(self):
        return {"b": self.b, "alpha": self.alpha}


@dataclass(frozen=True)
class Affine(MeasureSpec):
    """V(x) = a x + b: Lebesgue density a plus an atom b at the origin."""

    a: float = 1.0
    b: float = 1.0
    family: ClassVar[str] = "affine"

    def __post_init__(self):
        object.__setattr__(self, "a", _positive("a", self.a))
        object.__setattr__(self, "b", _positive("b", self.b))

    def V(self, x):
        x = np.asarray(x, dtype=np.float64)
        return np.where(x >= 0, self.a * x + self.b, 0.0)

    def log_cell_masses(self, h, n):
        out = np.full(n + 1, math.log(self.a * h))
        out[0] = math.log(self.b)
        return out

    def params(self):
        return {"a": self.a, "b": self.b}


@dataclass(frozen=True)
class LogPower(MeasureSpec):
    """V(x) = (log(x+1))^alpha."""

    alpha: float = 1.0
    family: ClassVar[str] = "log_power"

    def __post_init__(self):
        object.__setattr__(self, "alpha", _positive("alpha", self.alpha))

    def V(self, x):
        x = np.asarray(x, dtype=np.float64)
        return np.where(x >= 0, np.log1p(np.clip(x, 0, None)) ** self.alpha, 0.0)

    def density(self, x):
        x = np.asarray(x, dtype=np.float64)
        return self.alpha * np.log1p(x) ** (self.alpha - 1.0) / (1.0 + x)

    def params(self):
        return {"alpha": self.alpha}


@dataclass(frozen=True)
class SqrtExpDensity(MeasureSpec):
    """dV = x^{-1/2} e^{sqrt x} dx / 2, so V(x) = e^{sqrt x} - 1."""

    family: ClassVar[str] = "sqrt_exp_density"

    def V(self, x):
        x = np.asarray(x, dtype=np.float64)
        return np.where(x >= 0, np.expm1(np.sqrt(np.clip(x, 0, None))), 0.0)

    def log_cell_masses(self, h, n):
        r = np.sqrt(np.arange(n + 1) * h)
        out = np.empty(n + 1)
        out[0] = -np.inf
        out[1:] = r[:-1] + np.log(np.expm1(np.diff(r)))
        return out


@dataclass(frozen=True)
class ShiftedExp(MeasureSpec):
    """V(x) = e^{ax} - 1."""

    a: float = 1.0
    family: ClassVar[str] = "shifted_exp"

    def __post_init__(self):
        object.__setattr__(self, "a", _positive("a", self.a))

    def V(self, x):
        x = np.asarray(x, dtype=np.float64)
        return np.where(x >= 0, np.expm1(self.a * np.clip(x, 0, None)), 0.0)

    def log_cell_masses(self, h, n):
        k = np.arange(n + 1, dtype=np.float64)
        out = self.a * (k - 1) * h + math.log(math.expm1(self.a * h))
        out[0] = -np.inf
        return out

    def params(self):
        return {"a": self.a}


@dataclass(frozen=True)
class Exp(MeasureSpec):
    """V(x) = e^{ax}: unit atom at the origin plus density a e^{ax}."""

    a: float = 1.0
    family: ClassVar[str] = "exp"

    def __post_init__(self):
        object.__setattr__(self, "a", _positive("a", self.a))

    def V(self, x):
        x = np.asarray(x, dtype=np.float64)
        return np.where(x >= 0, np.exp(self.a * np.clip(x, 0, None)), 0.0)

    def log_cell_masses(self, h, n):
        k = np.arange(n + 1, dtype=np.float64)
        out = self.a * (k - 1) * h + math.log(math.expm1(self.a * h))
        out[0] = 0.0
        return out

    def params(self):
        return {"a": self.a}


@dataclass(frozen=True)
class HeavyExpDensity(MeasureSpec):
    """dV = (x+1)^{-2-alpha} e^x dx on (0, inf); transform finite on [1, inf)."""

    alpha: float = 1.0
    family: ClassVar[str] = "heavy_exp_density"

    def __post_init__(self):
        object.__setattr__(self, "alpha", _positive("alpha", self.alpha))

    def log_density(self, x):
        x = np.asarray(x, dtype=np.float64)
        return x - (2.0 + self.alpha) * np.log1p(x)

    def V(self, x):
        x = np.asarray(x, dtype=np.float64)
        flat = np.atleast_1d(x)
        out = np.zeros(flat.shape)
        for i, xi in enumerate(flat):
            if xi > 0:
                out[i] = integrate.quad(lambda y: math.exp(float(self.log_density(y))), 0.0, xi,
                                        epsabs=0.0, epsrel=1e-12, limit=200)[0]
        return out.reshape(x.shape) if x.ndim else float(out[0])

    def log_cell_masses(self, h, n):
        out = np.empty(n + 1)
        out[0] = -np.inf
        out[1:] = _density_cell_log_masses(self.log_density, h, n)
        return out

    def params(self):
        return {"alpha": self.alpha}


# ---------------------------------------------------------------------------
# user-supplied measures
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Lattice(MeasureSpec):
    """Atoms masses[n] at offset + span*n, and ``tail`` at every later lattice point.

    A positive ``tail`` makes V unbounded; with ``tail == 0`` the measure is
    finite and the unboundedness assumption is only declared.
    """

    span: float = 1.0
    offset: float = 0.0
    masses: tuple = (1.0,)
    tail: float = 0.0
    family: ClassVar[str] = "lattice"
    arithmetic: ClassVar[bool] = True

    def __post_init__(self):
        object.__setattr__(self, "span", _positive("span", self.span))
        object.__setattr__(self, "offset", _nonneg("offset", self.offset))
        masses = tuple(_nonneg("mass", float(m)) for m in self.masses)
        if not masses:
            raise InvalidSpec("lattice needs at least one mass")
        object.__setattr__(self, "masses", masses)
        object.__setattr__(self, "tail", _nonneg("tail", self.tail))
        if sum(masses) == 0 and self.tail == 0:
            raise InvalidSpec("lattice measure is identically zero")

    @property
    def points(self) -> np.ndarray:
        return self.offset + self.span * np.arange(len(self.masses))

    def V(self, x):
        x = np.asarray(x, dtype=np.float64)
        cm = np.cumsum(self.masses)
        nmax = np.floor((x - self.offset) / self.span + _GRID_EPS)
        idx = np.clip(nmax, -1, len(cm) - 1).astype(int)
        finite = np.where(idx >= 0, cm[np.clip(idx, 0, None)], 0.0)
        extra = self.tail * np.clip(nmax - len(cm) + 1, 0, None)
        return finite + extra

    def log_cell_masses(self, h, n):
        lin = np.zeros(n + 1)
        k = np.ceil(self.points / h - _GRID_EPS).astype(int)
        ok = k <= n
        np.add.at(lin, k[ok], np.asarray(self.masses)[ok])
        if self.tail > 0:
            m = len(self.masses)
            last = int(math.floor((n * h - self.offset) / self.span + _GRID_EPS))
            if last >= m:
                pts = self.offset + self.span * np.arange(m, last + 1)
                np.add.at(lin, np.ceil(pts / h - _GRID_EPS).astype(int), self.tail)
        with np.errstate(divide="ignore"):
            return np.log(lin)

    def params(self):
        return {"span": self.span, "offset": self.offset, "masses": list(self.masses),
                "tail": self.tail}


_EXPR_NAMESPACE = {name: getattr(np, name) for name in (
    "exp", "log", "log1p", "expm1", "sqrt", "sin", "cos", "pi", "e", "where", "abs",
    "power", "minimum", "maximum", "heaviside", "ones_like", "zeros_like")}


def _compile_expr(expr: str) -> Callable:
    code = compile(expr, "<density>", "eval")

    def f(x):
        x = np.asarray(x, dtype=np.float64)
        val = eval(code, {"__builtins__": {}}, dict(_EXPR_NAMESPACE, x=x))
        return np.broadcast_to(np.asarray(val, dtype=np.float64), x.shape).copy()

    return f


@dataclass(frozen=True)
class Density(MeasureSpec):
    """dV = atom_at_zero * delta_0 + f(x) dx.

    ``f`` may be any vectorizable callable; alternatively ``expr`` gives the
    density as a numpy expression in ``x`` (this is what JSON documents use).
    The abscissa of convergence cannot be inferred from a black-box density,
    so it is declared through ``abscissa`` / ``abscissa_included``.
    """

    f: Optional[Callable] = None
    atom_at_zero: float = 0.0
    expr: Optional[str] = None
    abscissa: float = 0.0
    abscissa_included: bool = False
    family: ClassVar[str] = "density"

    def __post_init__(self):
        if self.f is None:
            if self.expr is None:
                raise InvalidSpec("density spec needs f or expr")
            object.__setattr__(self, "f", _compile_expr(self.expr))
        object.__setattr__(self, "atom_at_zero", _nonneg("atom_at_zero", self.atom_at_zero))
        object.__setattr__(self, "abscissa", _nonneg("abscissa", self.abscissa))

    def density(self, x):
        x = np.asarray(x, dtype=np.float64)
        try:
            val = np.asarray(self.f(x), dtype=np.float64)
            if val.shape != x.shape:
                val = np.broadcast_to(val, x.shape)
        except (TypeError, ValueError):
            val = np.vectorize(lambda y: float(self.f(y)))(x)
        return np.where(x > 0, val, 0.0)

    def log_density(self, x):
        with np.errstate(divide="ignore"):
            return np.log(self.density(x))

    def V(self, x):
        x = np.asarray(x, dtype=np.float64)
        flat = np.atleast_1d(x)
        out = np.zeros(flat.shape)
        for i, xi in enumerate(flat):
            if xi >= 0:
                out[i] = self.atom_at_zero
                if xi > 0:
                    out[i] += integrate.quad(lambda y: float(self.density(y)), 0.0, xi,
                                             epsabs=0.0, epsrel=1e-10, limit=200)[0]
        return out.reshape(x.shape) if x.ndim else float(out[0])

    def log_cell_masses(self, h, n):
        out = np.empty(n + 1)
        out[0] = math.log(self.atom_at_zero) if self.atom_at_zero > 0 else -np.inf
        out[1:] = _density_cell_log_masses(self.log_density, h, n)
        return out

    def params(self):
        if self.expr is None:
            raise InvalidSpec("a density given by a Python callable cannot be serialized")
        return {"expr": self.expr, "atom": self.atom_at_zero, "abscissa": self.abscissa,
                "abscissa_included": self.abscissa_included}


@dataclass(frozen=True)
class Tabulated(MeasureSpec):
    """V known at k*h, k = 0..len(values)-1; right-continuous step function in between."""

    h: float = 1.0
    values: tuple = (1.0,)
    family: ClassVar[str] = "tabulated"
    arithmetic: ClassVar[bool] = True

    def __post_init__(self):
        object.__setattr__(self, "h", _positive("h", self.h))
        values = tuple(float(v) for v in self.values)
        if not values:
            raise InvalidSpec("tabulated V needs at least one value")
        if any(not math.isfinite(v) or v < 0 for v in values):
            raise InvalidSpec("tabulated values must be finite and nonnegative")
        if any(b < a for a, b in zip(values, values[1:])):
            raise InvalidSpec("tabulated values must be nondecreasing")
        if values[-1] == 0:
            raise InvalidSpec("tabulated V is identically zero")
        object.__setattr__(self, "values", values)

    def as_lattice(self) -> Lattice:
        v = np.asarray(self.values)
        return Lattice(span=self.h, offset=0.0, masses=tuple(np.diff(v, prepend=0.0)))

    def V(self, x):
        x = np.asarray(x, dtype=np.float64)
        idx = np.floor(x / self.h + _GRID_EPS)
        v = np.asarray(self.values)
        return np.where(idx >= 0, v[np.clip(idx, 0, len(v) - 1).astype(int)], 0.0)

    def log_cell_masses(self, h, n):
        return self.as_lattice().log_cell_masses(h, n)

    def params(self):
        return {"h": self.h, "V": list(self.values)}


# ---------------------------------------------------------------------------
# per-cell quadrature of densities
# ---------------------------------------------------------------------------

_GL_LO = np.polynomial.legendre.leggauss(10)
_GL_HI = np.polynomial.legendre.leggauss(20)


def _gl_cells(log_f, lo, hi, rule, shift):
    nodes, weights = rule
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    x = mid[:, None] + half[:, None] * nodes[None, :]
    vals = np.exp(log_f(x) - shift[:, None])
    return half * (vals @ weights)


def _density_cell_log_masses(log_f, h, n, rtol=1e-10):
    """log of the integral of exp(log_f) over ((k-1)h, kh], k = 1..n.

    Two Gauss-Legendre orders on every cell; cells where they disagree beyond
    ``rtol`` (endpoint singularities, steep spots) are redone with adaptive
    Gauss-Kronrod quadrature.
    """
    lo = np.arange(n) * h
    hi = lo + h
    with np.errstate(divide="ignore", invalid="ignore"):
        shift = np.maximum(log_f(np.maximum(lo, 1e-300 + 0 * lo)), log_f(hi))
        shift = np.where(np.isfinite(shift), shift, np.nan)
        # fall back to the midpoint when both endpoints are degenerate
        mid_shift = log_f(0.5 * (lo + hi))
        shift = np.where(np.isnan(shift), mid_shift, shift)
        shift = np.where(np.isfinite(shift), shift, 0.0)
        coarse = _gl_cells(log_f, lo, hi, _GL_LO, shift)
        fine = _gl_cells(log_f, lo, hi, _GL_HI, shift)
    bad = ~(np.abs(fine - coarse) <= rtol * np.abs(fine))
    bad &= ~((fine == 0) & (coarse == 0))
    for i in np.flatnonzero(bad):
        s = shift[i]
        val, _ = integrate.quad(lambda y: math.exp(float(log_f(np.float64(y))) - s),
                                lo[i], hi[i], epsabs=0.0, epsrel=rtol, limit=200)
        fine[i] = val
    if not np.all(np.isfinite(fine)):
        raise InvalidSpec("density is not integrable on some grid cell")
    with np.errstate(divide="ignore"):
        return np.log(fine) + shift


# ---------------------------------------------------------------------------
# JSON (de)serialization
# ---------------------------------------------------------------------------

_FAMILIES = {cls.family: cls for cls in (
    PowerLaw, Affine, LogPower, SqrtExpDensity, ShiftedExp, Exp, HeavyExpDensity,
    Lattice, Density, Tabulated)}


def spec_to_dict(spec: MeasureSpec) -> dict:
    return {"family": spec.family, **spec.params()}


def spec_from_dict(doc: dict) -> MeasureSpec:
    if not isinstance(doc, dict) or "family" not in doc:
        raise InvalidSpec("measure spec must be a JSON object with a 'family' field")
    fam = doc["family"]
    params = {k: v for k, v in doc.items() if k != "family"}
    try:
        if fam == "lattice":
            return Lattice(span=params.pop("span"), offset=params.pop("offset", 0.0),
                           masses=tuple(params.pop("masses")), tail=params.pop("tail", 0.0),
                           **params)
        if fam == "tabulated":
            return Tabulated(h=params.pop("h"), values=tuple(params.pop("V")), **params)
        if fam == "density":
            return Density(expr=params.pop("expr"), atom_at_zero=params.pop("atom", 0.0),
                           **params)
        cls = _FAMILIES[fam]
    except KeyError as exc:
        raise InvalidSpec(f"unknown family or missing field: {exc}") from None
    except TypeError as exc:
        raise InvalidSpec(str(exc)) from None
    try:
        return cls(**params)
    except TypeError as exc:
        raise InvalidSpec(str(exc)) from None


def spec_from_json(text: str) -> MeasureSpec:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidSpec(f"malformed spec JSON: {exc}") from None
    return spec_from_dict(doc)


def eval_V(spec: MeasureSpec, x: float) -> float:
    if x < 0:
        return 0.0
    return float(spec.V(np.float64(x)))


# ---------------------------------------------------------------------------
# grid measures
# ---------------------------------------------------------------------------

def log_convolve(la: np.ndarray, lb: np.ndarray, n_out: int) -> np.ndarray:
    """Convolution of two log-mass arrays, first ``n_out`` cells.

    Each operand is rescaled by its maximum before the (linear, all-positive)
    convolution; cells more than ~700 nats below an operand's maximum
    underflow, which is harmless once masses are tilted toward the target.
    """
    ma = np.max(la) if la.size else -np.inf
    mb = np.max(lb) if lb.size else -np.inf
    if not (np.isfinite(ma) and np.isfinite(mb)):
        return np.full(n_out, -np.inf)
    out = conv_trunc(np.exp(la - ma), np.exp(lb - mb), n_out)
    with np.errstate(divide="ignore"):
        return np.log(out) + (ma + mb)


@dataclass(frozen=True, eq=False)
class GridMeasure:
    """Atomic measure on the uniform grid {k h}; masses stored as logs.

    ``tilt`` records the exponential reweighting already applied: the stored
    mass at k equals e^{-tilt k h} times the untilted mass.
    """

    h: float
    log_mass: np.ndarray = field(repr=False)
    tilt: float = 0.0

    def __post_init__(self):
        arr = np.array(self.log_mass, dtype=np.float64)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("log_mass must be a nonempty 1-D array")
        if np.any(np.isnan(arr)) or np.any(arr == np.inf):
            raise ValueError("log_mass contains NaN or +inf")
        arr.setflags(write=False)
        object.__setattr__(self, "log_mass", arr)

    @property
    def n(self) -> int:
        return self.log_mass.size

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.n) * self.h

    def atoms(self):
        return [(int(k), LogNumber(1, float(self.log_mass[k])))
                for k in np.flatnonzero(np.isfinite(self.log_mass))]

    def total_log_mass(self) -> float:
        return float(np.logaddexp.reduce(self.log_mass))

    def tilted(self, kappa: float) -> "GridMeasure":
        if kappa == self.tilt:
            return self
        return GridMeasure(self.h, self.log_mass - (kappa - self.tilt) * self.x, kappa)

    def untilted(self) -> "GridMeasure":
        return self.tilted(0.0)

    def truncated(self, n: int) -> "GridMeasure":
        return GridMeasure(self.h, self.log_mass[:n], self.tilt)

    def convolve(self, other: "GridMeasure", n_out: Optional[int] = None) -> "GridMeasure":
        if not math.isclose(self.h, other.h, rel_tol=1e-12):
            raise ValueError("grid steps differ")
        if self.tilt != other.tilt:
            other = other.tilted(self.tilt)
        if n_out is None:
            n_out = min(self.n, other.n)
        return GridMeasure(self.h, log_convolve(self.log_mass, other.log_mass, n_out), self.tilt)

    def log_cdf(self) -> np.ndarray:
        """log V(kh) of the untilted measure at every grid point."""
        return np.logaddexp.accumulate(self.log_mass + self.tilt * self.x)


def discretize(spec: MeasureSpec, h: float, x_max: float) -> GridMeasure:
    if not (h > 0 and math.isfinite(h)):
        raise InvalidSpec(f"grid step must be positive, got {h!r}")
    if not x_max >= h * (1.0 - _GRID_EPS):
        raise InvalidSpec("x_max must cover at least one grid step")
    n = int(math.floor(x_max / h + _GRID_EPS))
    if isinstance(spec, (Lattice, Tabulated)):
        lm = spec.log_cell_masses(h, n)
    else:
        with warnings.catch_warnings():
            # quad signals a non-integrable singularity only through a warning
            warnings.simplefilter("error", integrate.IntegrationWarning)
            try:
                v_h = float(eval_V(spec, h))
            except integrate.IntegrationWarning:
                v_h = math.inf
        if not math.isfinite(v_h):
            raise InvalidSpec(f"V(h) is not finite for h={h!r}")
        lm = spec.log_cell_masses(h, n)
    if np.any(np.isnan(lm)) or np.any(lm == np.inf):
        raise InvalidSpec("discretization produced non-finite masses")
    return GridMeasure(h, lm, 0.0)
