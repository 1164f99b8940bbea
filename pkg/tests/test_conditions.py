import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from convpow.conditions import Regime, check_conditions, laguerre_case1_rates, scan_modulus
from convpow.errors import ScanInconclusive
from convpow.laplace import laplace_complex
from convpow.measure import Affine, Density, Lattice, PowerLaw, ShiftedExp
from convpow.saddle import solve_kappa


@given(st.floats(0.2, 4.0), st.integers(2, 500), st.floats(0.1, 20.0))
def test_power_law_first_point_closed_form(alpha, j, ratio):
    # kappa T_j = 2 alpha^2 + 3 alpha + 2 for V = x^alpha, so the first scan point sits at
    # kappa (1 - i/c) with c that constant
    r = check_conditions(PowerLaw(1.0, alpha), j, ratio * j, n_z=20)
    c = 2 * alpha ** 2 + 3 * alpha + 2
    assert r.kappa * r.T_j == pytest.approx(c, rel=1e-9)
    assert r.first_ratio == pytest.approx((1 + 1 / c ** 2) ** (-alpha / 2), rel=1e-9)
    assert r.sup_at_z == pytest.approx(r.gamma)


@pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0, 3.5])
@pytest.mark.parametrize("gamma", [0.3, 1.0, 4.0])
def test_power_law_modulus_on_kappa_scale(alpha, gamma):
    k = 2.7
    ev = laplace_complex(PowerLaw(1.0, alpha), complex(k, -gamma * k))
    ref = laplace_complex(PowerLaw(1.0, alpha), complex(k, 0.0))
    assert math.exp(ev.log_abs - ref.log_abs) == pytest.approx((1 + gamma ** 2) ** (-alpha / 2), rel=1e-12)


@pytest.mark.xfail(strict=True, reason="the scan runs in z/T_j, not z*kappa; the first point gives "
                                       "(1+gamma^2/c^2)^(-alpha/2) with c = 2a^2+3a+2")
def test_power_law_first_point_in_kappa_units():
    r = check_conditions(PowerLaw(1.0, 2.0), 50, 100.0)
    assert abs(r.nonlattice_sup - 2 ** -1.0) < 1e-6


def test_power_law_scan_monotone():
    r = solve_kappa(PowerLaw(1.0, 1.5), 30, 45.0)
    z = np.geomspace(1.0, 1e3, 200)
    mod = scan_modulus(PowerLaw(1.0, 1.5), r.kappa, r.T_j, z)
    assert np.all(np.diff(mod) < 0)
    assert np.all(mod <= 1.0)


def test_laguerre_case_one_sup_limit():
    sups = [check_conditions(Affine(1.0, 1.0), j, float(j * j)).nonlattice_sup for j in (100, 1000, 10000)]
    target = (1 + 1 / 49) ** -0.5
    gaps = [abs(s - target) for s in sups]
    assert gaps[0] > gaps[1] > gaps[2] and gaps[2] < 1e-5


def test_shifted_exp_modulus():
    r = check_conditions(ShiftedExp(1.0), 1000, 1e4, gamma=7.0)
    assert (r.kappa - 1) * r.T_j == pytest.approx(7.0, rel=1e-9)
    assert r.first_ratio == pytest.approx(2 ** -0.5, rel=1e-9)
    assert r.regime is Regime.B_OK


def test_case_three_is_suspect():
    r = check_conditions(Affine(1.0, 1.0), 10 ** 6, 1e3)
    assert r.regime is Regime.SUSPECT
    assert r.nonlattice_sup > 0.98


def test_regime_a_with_relaxed_sup_threshold():
    r = check_conditions(Affine(1.0, 1.0), 10 ** 4, 1e8, sup_threshold=0.995)
    assert r.Tj_over_aj < 0.2
    assert r.regime is Regime.A_OK


def test_lattice_is_never_b():
    r = check_conditions(Lattice(span=1.0, masses=(1.0, 1.0), tail=1.0), 50, 100.0,
                         sup_threshold=0.999999, tj_threshold=1e-9)
    assert r.arithmetic
    assert r.regime is Regime.SUSPECT


@pytest.mark.parametrize("spec", [PowerLaw(1.0, 2.0), Affine(1.0, 1.0)], ids=lambda s: type(s).__name__)
def test_tj_over_aj_decreases_along_square(spec):
    vals = [check_conditions(spec, j, float(j * j), n_z=10).Tj_over_aj for j in (100, 1000, 10000)]
    assert vals[0] > vals[1] > vals[2]


def test_case_one_rates():
    for (j, t), tol in [((10 ** 4, 1e7), 0.02), ((100, 1e4), 0.10), ((10 ** 6, 1e10), 0.005)]:
        assert all(abs(r - 1) < tol for r in laguerre_case1_rates(j, t))


def test_scan_inconclusive_when_still_rising():
    # the lattice modulus is periodic in z with period 2 pi T_j; a scan stopping short of
    # the next peak is still climbing and must not produce a verdict
    spec = Lattice(span=1.0, masses=(1.0, 1.0), tail=1.0)
    rep = solve_kappa(spec, 50, 100.0)
    period = 2 * math.pi * rep.T_j
    with pytest.raises(ScanInconclusive):
        check_conditions(spec, 50, 100.0, gamma=0.6 * period, z_max=0.95 * period, n_z=20)
    full = check_conditions(spec, 50, 100.0, gamma=0.6 * period, z_max=1.3 * period, n_z=200)
    assert full.nonlattice_sup > 0.999


def test_bad_arguments():
    with pytest.raises(ValueError):
        check_conditions(PowerLaw(1.0, 1.0), 10, 5.0, gamma=0.0)
    with pytest.raises(ValueError):
        check_conditions(PowerLaw(1.0, 1.0), 10, 5.0, gamma=2.0, z_max=1.0)


def test_report_json():
    r = check_conditions(ShiftedExp(1.0), 100, 500.0, n_z=20)
    doc = json.loads(r.to_json())
    assert doc["schema_version"] == 1
    assert doc["regime"] == r.regime.value
    assert doc["kappa"] == float(f"{r.kappa:.12e}")
    assert r.to_json() == check_conditions(ShiftedExp(1.0), 100, 500.0, n_z=20).to_json()
