import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from convpow.errors import HorizonTooSmall
from convpow.laplace import laplace_at
from convpow.measure import Affine, Lattice, PowerLaw, ShiftedExp, discretize
from convpow.oracle import (convolve_power, default_horizon, exact_family, exact_power_law,
                            exact_shifted_exp, grid_oracle, laguerre_eval, laguerre_sum_log,
                            table_to_csv, tilt_moments)
from convpow.saddle import solve_kappa


def test_dirac_power():
    gm = discretize(Lattice(span=1.0, offset=1.0, masses=(1.0,)), 1.0, 10.0)
    tab = convolve_power(gm, 5)
    nz = np.flatnonzero(np.isfinite(tab.log_mass))
    assert list(nz) == [5]
    assert tab.log_mass[5] == 0.0
    assert tab.value(4.999).sign == 0
    assert tab.log_value(5.0) == 0.0


def test_affine_unit_grid_and_refinement():
    # right-endpoint cells on h=1 put V(0)=1 at 0 and one unit per cell, giving 6 at t=2;
    # the continuous value L_2(-2)=7 is reached only as h -> 0
    tab = convolve_power(discretize(Affine(1.0, 1.0), 1.0, 4.0), 2)
    assert tab.value(2.0).to_float() == pytest.approx(6.0, rel=1e-14)
    errs = []
    for h in (1e-1, 1e-2, 1e-3):
        v = convolve_power(discretize(Affine(1.0, 1.0), h, 2.0), 2).value(2.0).to_float()
        errs.append(abs(v - 7.0))
    assert errs[0] > errs[1] > errs[2] and errs[2] < 7 * 2e-3


@pytest.mark.xfail(strict=True, reason="first-order grid bias is about 0.23% at h=1e-3, above 0.2%")
def test_shifted_exp_small_example_tight():
    spec = ShiftedExp(1.0)
    k = solve_kappa(spec, 3, 2.0).kappa
    v = convolve_power(discretize(spec, 1e-3, 2.0), 3, k).value(2.0).to_float()
    exact = integrate.quad(lambda y: y * y * math.exp(y), 0, 2, epsabs=0, epsrel=1e-13)[0] / 2
    assert abs(v / exact - 1) < 2e-3


def test_shifted_exp_small_example_first_order():
    spec = ShiftedExp(1.0)
    k = solve_kappa(spec, 3, 2.0).kappa
    v = convolve_power(discretize(spec, 1e-3, 2.0), 3, k).value(2.0).to_float()
    exact = integrate.quad(lambda y: y * y * math.exp(y), 0, 2, epsabs=0, epsrel=1e-13)[0] / 2
    assert abs(v / exact - 1) < 3e-3


def test_exact_power_law_fixtures():
    assert exact_power_law(1.0, 1.0, 2, 2.0).to_float() == pytest.approx(2.0, rel=1e-14)
    for j in range(1, 8):
        assert exact_power_law(1.0, 1.0, j, 3.0).to_float() == pytest.approx(3.0 ** j / math.factorial(j), rel=1e-13)
    want = (2 * math.gamma(1.5)) ** 3 / math.gamma(2.5)
    assert exact_power_law(2.0, 0.5, 3, 1.0).to_float() == pytest.approx(want, rel=1e-13)
    assert exact_power_law(1.0, 1.0, 3, 0.0).sign == 0


def test_exact_power_law_against_fine_grid():
    spec = PowerLaw(2.0, 0.5)
    tab = convolve_power(discretize(spec, 1e-4, 1.0), 3)
    want = exact_power_law(2.0, 0.5, 3, 1.0).to_float()
    assert abs(tab.value(1.0).to_float() / want - 1) < 5e-3


def test_exact_shifted_exp_fixtures():
    for t in (0.1, 1.0, 7.5):
        assert exact_shifted_exp(1.0, 1, t).to_float() == pytest.approx(math.expm1(t), rel=1e-14)
    assert exact_shifted_exp(1.0, 2, 1.0).to_float() == pytest.approx(1.0, rel=1e-14)
    ref = integrate.quad(lambda y: y ** 4 * math.exp(y), 0, 6, epsabs=0, epsrel=1e-13)[0] / 24
    assert exact_shifted_exp(2.0, 5, 3.0).to_float() == pytest.approx(ref, rel=1e-12)


@settings(max_examples=80)
@given(st.integers(1, 300), st.floats(1e-3, 2e3))
def test_exact_shifted_exp_against_mpmath(j, x):
    mpmath.mp.dps = 40
    # int_0^x y^{j-1} e^y dy / (j-1)! = x^j/j! 1F1(j; j+1; x)
    ref = mpmath.mpf(x) ** j / mpmath.factorial(j) * mpmath.hyp1f1(j, j + 1, x)
    got = exact_shifted_exp(1.0, j, x).log_abs
    assert got == pytest.approx(float(mpmath.log(ref)), rel=1e-11, abs=1e-11)


def test_laguerre_fixtures():
    assert laguerre_eval(0, 3.0).to_float() == 1.0
    assert laguerre_eval(2, 2.0).to_float() == pytest.approx(7.0, rel=1e-15)
    for t in (0.0, 0.5, 9.0):
        assert laguerre_eval(1, t).to_float() == pytest.approx(1 + t, rel=1e-15)
    with pytest.raises(ValueError):
        laguerre_eval(3, -1.0)


@given(st.integers(0, 3000), st.floats(0.0, 1e6))
def test_laguerre_recurrence_matches_sum(j, t):
    assert laguerre_eval(j, t).log_abs == pytest.approx(laguerre_sum_log(j, t), rel=1e-11, abs=1e-11)


def test_laguerre_against_mpmath():
    mpmath.mp.dps = 30
    for j, t in [(5, 1.0), (50, 5000.0), (500, 1000.0)]:
        ref = float(mpmath.log(mpmath.laguerre(j, 0, -t)))
        assert laguerre_eval(j, t).log_abs == pytest.approx(ref, rel=1e-12)


def test_exact_family_dispatch():
    assert exact_family(Affine(2.0, 3.0), 4, 1.5).log_abs == pytest.approx(
        4 * math.log(3.0) + laguerre_sum_log(4, 1.0), rel=1e-12)
    assert exact_family(Lattice(), 2, 1.0) is None


_grids = {
    "powerlaw": discretize(PowerLaw(1.0, 1.5), 1e-2, 8.0),
    "shiftedexp": discretize(ShiftedExp(1.0), 1e-2, 8.0),
    "lattice": discretize(Lattice(span=0.5, offset=0.3, masses=(0.2, 1.0, 0.0, 2.0), tail=0.1), 0.1, 8.0),
}


@pytest.mark.parametrize("name", sorted(_grids))
@given(st.integers(1, 5), st.integers(1, 5), st.floats(0.0, 3.0))
def test_semigroup(name, j1, j2, kappa):
    gm = _grids[name]
    a = convolve_power(gm, j1, kappa)
    b = convolve_power(gm, j2, kappa)
    both = convolve_power(gm, j1 + j2, kappa)
    ga = gm.__class__(gm.h, a.log_mass, kappa)
    gb = gm.__class__(gm.h, b.log_mass, kappa)
    lhs = ga.convolve(gb, gm.n).log_cdf()
    rhs = both.log_cumulative
    ok = np.isfinite(rhs)
    assert np.array_equal(ok, np.isfinite(lhs))
    assert np.all(np.abs(np.expm1(lhs[ok] - rhs[ok])) < 1e-10)


@pytest.mark.parametrize("spec", [PowerLaw(1.0, 1.0), ShiftedExp(1.0), Affine(1.0, 1.0)],
                         ids=lambda s: type(s).__name__)
@given(st.integers(1, 6), st.floats(0.5, 6.0), st.floats(0.0, 2.0))
def test_tilt_invariance(spec, j, t, frac):
    gm = discretize(spec, 1e-2, 6.0)
    k = solve_kappa(spec, j, t).kappa
    v0 = convolve_power(gm, j, 0.0).log_value(t)
    v1 = convolve_power(gm, j, frac * k).log_value(t)
    assert abs(math.expm1(v1 - v0)) < 1e-8


def test_tables_are_monotone_and_vanish_below_support():
    gm = discretize(ShiftedExp(1.0), 1e-2, 5.0)
    tab = convolve_power(gm, 4, 1.0)
    c = tab.log_cumulative
    assert np.all(np.diff(c[np.isfinite(c)]) >= -1e-12)
    lat = discretize(Lattice(span=1.0, offset=2.0, masses=(1.0, 1.0)), 0.5, 20.0)
    tab = convolve_power(lat, 3)
    assert tab.log_value(5.99) == -math.inf
    assert math.isfinite(tab.log_value(6.0))
    cells = tab.cumulative
    assert cells[0].sign == 0 and cells[12].sign == 1


def test_beyond_horizon_raises():
    tab = convolve_power(discretize(PowerLaw(1.0, 1.0), 0.1, 2.0), 2)
    with pytest.raises(HorizonTooSmall):
        tab.log_value(5.0)
    with pytest.raises(ValueError):
        convolve_power(discretize(PowerLaw(1.0, 1.0), 0.1, 2.0), 0)
    with pytest.raises(ValueError):
        convolve_power(discretize(PowerLaw(1.0, 1.0), 0.1, 2.0), 2, -1.0)


def test_truncation_does_not_change_kept_values():
    gm = discretize(PowerLaw(1.0, 2.0), 0.05, 10.0)
    short = convolve_power(gm, 5, 1.0, 101).log_cumulative
    long = convolve_power(gm, 5, 1.0).log_cumulative[:101]
    np.testing.assert_allclose(short, long, rtol=1e-12)


def test_tilt_moments_affine():
    spec = Affine(1.0, 1.0)
    rep = solve_kappa(spec, 5, 10.0)
    horizon = default_horizon(10.0, rep.a_j, rep.kappa)
    gm = discretize(spec, 1e-3, horizon)
    mean, var = tilt_moments(gm, 5, 10.0, spec=spec)
    assert abs(mean / 10.0 - 1) < 5e-3
    assert abs(var / (5 * laplace_at(spec, rep.kappa).lam2) - 1) < 1e-2


def test_tilt_moments_shifted_exp():
    spec = ShiftedExp(1.0)
    rep = solve_kappa(spec, 3, 6.0)
    horizon = default_horizon(6.0, rep.a_j, rep.kappa - 1.0)
    gm = discretize(spec, 1e-3, horizon)
    mean, _ = tilt_moments(gm, 3, 6.0, spec=spec)
    assert abs(mean / 6.0 - 1) < 5e-3


def test_tilt_moments_short_grid():
    spec = Affine(1.0, 1.0)
    gm = discretize(spec, 1e-2, 12.0)
    with pytest.raises(HorizonTooSmall):
        tilt_moments(gm, 5, 10.0, spec=spec)
    with pytest.raises(HorizonTooSmall):
        tilt_moments(gm, 5, 10.0, kappa=solve_kappa(spec, 5, 10.0).kappa, horizon=12.0)
    with pytest.raises(ValueError):
        tilt_moments(gm, 5, 10.0)


def test_csv_export():
    tab = convolve_power(discretize(PowerLaw(1.0, 1.0), 0.5, 2.0), 2)
    lines = table_to_csv(tab).splitlines()
    assert lines[0] == "grid_x,log_V_star_j"
    assert len(lines) == 1 + tab.log_cumulative.size
    assert lines[1].startswith("0.000000000000e+00,")
    x, v = lines[3].split(",")
    assert float(x) == 1.0 and float(v) == pytest.approx(tab.log_value(1.0), rel=1e-12)
    assert len(table_to_csv(tab, stride=2).splitlines()) == 1 + 3


def test_grid_oracle_matches_exact():
    v = grid_oracle(PowerLaw(1.0, 1.0), 4, 3.0, 1e-3).to_float()
    assert abs(v / exact_power_law(1.0, 1.0, 4, 3.0).to_float() - 1) < 5e-3
    with pytest.raises(HorizonTooSmall):
        grid_oracle(PowerLaw(1.0, 1.0), 4, 1e-4, 1e-3)


@pytest.mark.parametrize("j", [1, 40, 1077, 10 ** 5])
def test_laguerre_tiny_argument(j):
    # L_j(-t) = 1 + j t + O(t^2)
    t = 1e-12
    assert laguerre_eval(j, t).log_abs == pytest.approx(j * t, rel=1e-9)
