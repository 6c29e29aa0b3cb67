import math

import mpmath as mp
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from renorm.dist_core import CutoffPair, TestFunction
from renorm.mellin_riesz import (
    FuchsianSymbol,
    PoleProximityError,
    laurent,
    mellin,
    mellin_direct,
    pole_table,
    residue_rho,
    residue_rho_direct,
    rg_flow,
    riesz_extend,
)

mp.mp.dps = 20

PHI = TestFunction.gaussian(0.3, 1.0, (1, 0.5))
CUT = CutoffPair()


def phi_mp(h):
    v = mp.mpf(h) - mp.mpf("0.3")
    return (1 + v / 2) * mp.exp(-v * v / 2)


def chi_mp(r):
    u = (mp.mpf(r) - CUT.a) / (CUT.b - CUT.a)
    if u <= 0:
        return mp.mpf(1)
    if u >= 1:
        return mp.mpf(0)
    return 1 - 1 / (1 + mp.exp(1 / u - 1 / (1 - u)))


def psi_mp(r):
    # psi = -r chi' with the derivative of the logistic step written out
    u = (mp.mpf(r) - CUT.a) / (CUT.b - CUT.a)
    if u <= 0 or u >= 1:
        return mp.mpf(0)
    s = 1 / (1 + mp.exp(1 / u - 1 / (1 - u)))
    return r * s * (1 - s) * (1 / u**2 + 1 / (1 - u) ** 2) / (CUT.b - CUT.a)


def psi_moment(p):
    """``int u^p psi(u) du`` over the transition annulus."""
    return mp.quad(lambda u: u**p * psi_mp(u), [CUT.a, CUT.b])


def inverse_square_at_three_halves():
    """``<(H h^-2)^mu, phi>`` at ``mu = 3/2`` in extended precision.

    Swapping the integrals gives ``int s^(-mu-1) psi(s) F(s) ds`` with
    ``F(s) = int_0^s h^(mu-2) phi(h) dh``; for ``mu = 3/2`` the substitution
    ``h = w^2`` makes ``F`` a smooth integral.
    """
    mu = mp.mpf(1.5)

    def F(s):
        return 2 * mp.quad(lambda w: phi_mp(w * w), [0, mp.sqrt(s)])

    return mp.quad(lambda s: s ** (-mu - 1) * psi_mp(s) * F(s), [CUT.a, CUT.b])


def test_psi_has_unit_inverse_moment():
    # psi = -r chi', so int psi / r = chi(a) - chi(b) = 1
    assert float(psi_moment(-1)) == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("r", [1.2, 2.0, 2.7])
def test_psi_oracle_is_minus_r_chi_prime(r):
    assert float(psi_mp(r)) == pytest.approx(float(-r * mp.diff(chi_mp, r)), rel=1e-12)


def test_mellin_matches_kernel_oracle():
    value = mellin(FuchsianSymbol.single(-2.0), PHI, 1.5)
    assert value.real == pytest.approx(float(inverse_square_at_three_halves()), abs=1e-9)
    assert abs(value.imag) < 1e-12


def test_continuation_routes_agree():
    t = FuchsianSymbol.single(-1.0)
    assert mellin(t, PHI, 0.7) == pytest.approx(mellin_direct(t, PHI, 0.7), abs=1e-9)


@settings(max_examples=15, deadline=None)
@given(st.floats(-2.7, 2.0).filter(lambda x: min(abs(x - k) for k in range(-3, 3)) > 0.05), st.floats(-0.5, 0.5))
def test_extra_subtractions_do_not_change_the_value(re, im):
    t = FuchsianSymbol.single(-1.0)
    mu = complex(re, im)
    base = mellin(t, PHI, mu)
    assert mellin(t, PHI, mu, subtract=5) == pytest.approx(base, abs=1e-9)


@settings(max_examples=15, deadline=None)
@given(st.floats(-1.7, 1.5).filter(lambda x: min(abs(x - k) for k in range(-3, 3)) > 0.05), st.floats(0.05, 1.0))
def test_mellin_is_real_on_the_real_axis(re, im):
    t = FuchsianSymbol.single(-2.0)
    assert mellin(t, PHI, complex(re, -im)) == pytest.approx(mellin(t, PHI, complex(re, im)).conjugate(), abs=1e-10)


def test_pole_guard():
    with pytest.raises(PoleProximityError):
        mellin(FuchsianSymbol.single(-2.0), PHI, 1e-9)


def test_pole_table_of_inverse_square():
    # residue at mu = -(a + 1) - k is phi^(k)(0) / k! * int u^(a + k) psi
    rows = pole_table(FuchsianSymbol.single(-2.0), [PHI], lowest=-1.0)
    assert [r["mu_pole"] for r in rows] == [1.0, 0.0, -1.0]
    assert all(r["order"] == 1 for r in rows)
    for r, k in zip(rows, range(3)):
        expected = mp.diff(phi_mp, 0, k) / math.factorial(k) * psi_moment(-2 + k)
        assert r["coeff_on_gauss"] == pytest.approx(float(expected), abs=1e-7)


def test_inverse_square_pole_at_zero_is_first_derivative():
    series = laurent(FuchsianSymbol.single(-2.0), PHI, 0.0)
    assert series.pole_order == 1
    assert series[-1].real == pytest.approx(float(mp.diff(phi_mp, 0)), abs=1e-8)


def test_log_term_has_a_double_pole():
    series = laurent(FuchsianSymbol.single(-1.0, log_power=1), PHI, 0.0)
    assert series.pole_order == 2


@pytest.mark.parametrize("a,log_power", [(-1.0, 0), (-2.0, 0), (-1.0, 1)])
def test_residue_dual_path(a, log_power):
    t = FuchsianSymbol.single(a, log_power=log_power)
    assert residue_rho(t, PHI) == pytest.approx(residue_rho_direct(t, PHI), abs=1e-6)


def test_riesz_extension_of_an_integrable_symbol_is_the_integral():
    ext = riesz_extend(FuchsianSymbol.single(-0.5))
    oracle = mp.quad(lambda h: h ** mp.mpf(-0.5) * phi_mp(h), [0, mp.inf])
    assert ext.pair(PHI).value == pytest.approx(float(oracle), abs=1e-8)


def test_riesz_limit_route():
    ext = riesz_extend(FuchsianSymbol.single(-1.0))
    assert ext.pair_by_limit(PHI) == pytest.approx(ext.pair(PHI).value, abs=1e-6)


def test_rg_flow_slope_is_the_residue():
    t = FuchsianSymbol.single(-1.0)
    fit = rg_flow(t, PHI, degree=1)
    assert fit.residual < 1e-6
    assert fit.slope == pytest.approx(float(phi_mp(0)), abs=1e-6)


def test_rg_flow_of_a_log_term_is_quadratic():
    fit = rg_flow(FuchsianSymbol.single(-1.0, log_power=1), PHI)
    assert fit.degree == 2
    assert fit.residual < 1e-6
