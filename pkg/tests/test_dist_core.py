import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from renorm.dist_core import (
    CutoffPair,
    SampledDistribution,
    TestFunction,
    lp_identity_check,
    pair,
    scaling_degree,
    smooth_step,
    taylor_polynomial,
    taylor_remainder,
)

mp.mp.dps = 40

PHI = TestFunction.gaussian(0.3, 1.0, (1, 0.5))


def phi_mp(h):
    v = mp.mpf(h) - mp.mpf("0.3")
    return (1 + v / 2) * mp.exp(-v * v / 2)


def at(f, h):
    return float(f(np.array([h]))[0])


@pytest.mark.parametrize("h", [-2.0, -0.1, 0.0, 0.7, 3.0])
def test_gaussian_profile(h):
    assert at(PHI, h) == pytest.approx(float(phi_mp(h)), rel=1e-14)


def test_jet_matches_high_precision_derivatives():
    jet = PHI.jet(4)
    for k in range(5):
        assert jet[(k,)] == pytest.approx(float(mp.diff(phi_mp, 0, k)), rel=1e-10, abs=1e-12)


def exact_remainder(m, h):
    return phi_mp(h) - sum(mp.diff(phi_mp, 0, k) * mp.mpf(h) ** k / mp.factorial(k) for k in range(m + 1))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 3), st.floats(1e-3, 0.5))
def test_taylor_remainder_absolute_accuracy(m, h):
    # outside the series radius phi - P_m phi cancels down to machine epsilon of phi
    assert at(taylor_remainder(PHI, m), h) == pytest.approx(float(exact_remainder(m, h)), abs=1e-15)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 3), st.floats(1e-8, 9e-4))
def test_taylor_remainder_relative_accuracy_near_origin(m, h):
    assert at(taylor_remainder(PHI, m), h) == pytest.approx(float(exact_remainder(m, h)), rel=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 3), st.floats(0.05, 1.0), st.floats(1e-4, 0.1))
def test_taylor_remainder_vanishes_to_order(m, h, lam):
    # I_m phi(lam h) / lam^(m+1) stays near phi^(m+1)(0) h^(m+1) / (m+1)!
    rem = taylor_remainder(PHI, m)
    lead = float(mp.diff(phi_mp, 0, m + 1)) * h ** (m + 1) / math.factorial(m + 1)
    bound = abs(lead) + 10 * lam * h ** (m + 1)
    assert abs(at(rem, lam * h)) / lam ** (m + 1) <= bound


def test_taylor_polynomial_of_a_polynomial_is_exact():
    p = TestFunction.from_string("1 + 2*h - h**3")
    poly = taylor_polynomial(p, 3)
    xs = np.linspace(-2, 2, 7)
    assert np.allclose(poly(xs), 1 + 2 * xs - xs**3)


@given(st.floats(-1, 2, allow_nan=False))
def test_smooth_step_symmetry(u):
    s = smooth_step(np.array([u, 1 - u]))
    assert 0.0 <= s[0] <= 1.0
    assert s[0] + s[1] == pytest.approx(1.0, abs=1e-15)


def test_smooth_step_is_monotone():
    values = smooth_step(np.linspace(-0.5, 1.5, 2001))
    assert np.all(np.diff(values) >= 0)


@settings(max_examples=30)
@given(st.floats(0.2, 2.0), st.floats(0.1, 3.0))
def test_cutoff_plateaus(a, gap):
    cut = CutoffPair(a, a + gap)
    assert at(cut.chi, 0.9 * a) == 1.0
    assert at(cut.chi, a + gap) == 0.0
    assert at(cut.psi, 0.5 * a) == 0.0


@settings(max_examples=20)
@given(st.floats(0.2, 2.0), st.floats(0.1, 3.0))
def test_lp_identity(a, gap):
    assert lp_identity_check(CutoffPair(a, a + gap), np.geomspace(1e-3, 10, 25)) <= 1e-12


@settings(max_examples=15, deadline=None)
@given(st.floats(-0.9, 3.0))
def test_power_pairing_closed_form(a):
    # int |h|^a exp(-h^2) dh = Gamma((a + 1) / 2)
    gauss = TestFunction.gaussian(0.0, 1 / math.sqrt(2))
    value = pair(SampledDistribution.power(a), gauss).value
    assert value == pytest.approx(math.gamma((a + 1) / 2), rel=1e-8)


@settings(max_examples=10, deadline=None)
@given(st.floats(-1.8, 2.0))
def test_power_pairing_in_the_plane(a):
    # int_{R^2} |h|^a exp(-|h|^2) = pi Gamma(a / 2 + 1)
    gauss = TestFunction.gaussian(0.0, 1 / math.sqrt(2), dim=2)
    value = pair(SampledDistribution.power(a, dim=2), gauss).value
    assert value == pytest.approx(math.pi * math.gamma(a / 2 + 1), rel=1e-7)


def test_half_power_against_extended_precision():
    oracle = mp.quad(lambda h: abs(h) ** mp.mpf(-0.5) * phi_mp(h), [-mp.inf, 0, mp.inf])
    assert pair(SampledDistribution.power(-0.5), PHI).value == pytest.approx(float(oracle), abs=1e-9)


@settings(max_examples=10, deadline=None)
@given(st.floats(-0.9, 1.5))
def test_scaling_degree_of_powers(a):
    sd = scaling_degree(SampledDistribution.power(a), [PHI])
    assert sd.confident and not sd.log_correction
    assert sd.slope == pytest.approx(a, abs=1e-6)


def test_log_power_is_flagged():
    sd = scaling_degree(SampledDistribution.power(-0.5, log_power=1), [PHI])
    assert sd.log_correction


def test_reported_quadrature_error_bounds_the_actual_error():
    # 20 benchmark pairs against Gamma((a + 1) / 2), with a few ulps of rounding allowed
    gauss = TestFunction.gaussian(0.0, 1 / math.sqrt(2))
    for a in np.linspace(-0.9, 3.0, 20):
        res = pair(SampledDistribution.power(a), gauss)
        actual = abs(res.value - math.gamma((a + 1) / 2))
        assert actual <= max(res.error, 8 * np.finfo(float).eps * abs(res.value))
