import math
import warnings

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from renorm.dist_core import CutoffPair, DistributionSum, PointMass, SampledDistribution, TestFunction, smooth_step
from renorm.extension import (
    DegreeDemotionWarning,
    ExtendedDistribution,
    NonLocalDifferenceError,
    anomaly,
    anomaly_direct,
    extend,
    extension_difference_chi,
    fit_counterterm,
    residue_d,
    residue_d_direct,
    subtraction_order,
)

mp.mp.dps = 30

PHI = TestFunction.gaussian(0.3, 1.0, (1, 0.5))


def phi_mp(h):
    v = mp.mpf(h) - mp.mpf("0.3")
    return (1 + v / 2) * mp.exp(-v * v / 2)


def chi_mp(cut, h):
    u = (abs(mp.mpf(h)) - cut.a) / (cut.b - cut.a)
    if u <= 0:
        return mp.mpf(1)
    if u >= 1:
        return mp.mpf(0)
    return 1 - 1 / (1 + mp.exp(1 / u - 1 / (1 - u)))


def quiet_extend(t, *args, **kwargs):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegreeDemotionWarning)
        return extend(t, *args, **kwargs)


@pytest.mark.parametrize(
    "s,d,m",
    [(-0.5, 1, None), (-1.0, 1, 0), (-1.5, 1, 0), (-2.0, 1, 1), (-2.5, 1, 1), (-3.0, 2, 1), (-1.0, 2, None)],
)
def test_subtraction_order(s, d, m):
    assert subtraction_order(s, d) == m


def test_one_over_h_is_demoted_with_a_warning():
    with pytest.warns(DegreeDemotionWarning):
        ext = extend(SampledDistribution.power(-1.0, support="h>0"))
    assert ext.order == 0


def test_half_line_inverse_matches_finite_part():
    t = SampledDistribution.power(-1.0, support="h>0")
    ext = quiet_extend(t)
    cut = ext.cutoff
    phi0 = phi_mp(0)
    oracle = mp.quad(lambda h: (phi_mp(h) - chi_mp(cut, h) * phi0) / h, [0, cut.a, cut.b, mp.inf])
    assert float(ext.pair(PHI).value) == pytest.approx(float(oracle), abs=1e-8)


def test_three_halves_power_subtracts_the_value():
    t = SampledDistribution.power(-1.5)
    ext = extend(t)
    cut = ext.cutoff
    phi0 = phi_mp(0)
    oracle = 2 * mp.quad(
        lambda h: ((phi_mp(h) + phi_mp(-h)) / 2 - chi_mp(cut, h) * phi0) * h ** mp.mpf(-1.5),
        [0, cut.a, cut.b, mp.inf],
    )
    assert float(ext.pair(PHI).value) == pytest.approx(float(oracle), abs=1e-7)


def test_eps_route_agrees_with_remainder_route():
    ext = extend(SampledDistribution.power(-1.5, support="h>0"))
    assert float(ext.limit_value(PHI).value) == pytest.approx(float(ext.pair(PHI).value), abs=1e-7)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.3, 1.5), st.floats(0.3, 2.0), st.floats(0.3, 1.5), st.floats(0.3, 2.0))
def test_cutoff_change_is_local(a1, g1, a2, g2):
    t = SampledDistribution.power(-1.0, support="h>0")
    change = extension_difference_chi(t, -1.0, CutoffPair(a1, a1 + g1), CutoffPair(a2, a2 + g2), PHI)
    assert change.discrepancy <= 1e-8


@settings(max_examples=10, deadline=None)
@given(st.floats(-0.9, -0.1), st.floats(0.3, 1.5), st.floats(0.3, 2.0))
def test_no_subtraction_no_ambiguity(s, a, gap):
    t = SampledDistribution.power(s)
    change = extension_difference_chi(t, None, CutoffPair(), CutoffPair(a, a + gap), PHI)
    assert abs(change.direct) <= 1e-9 and change.formula == 0.0


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2), st.lists(st.floats(-2, 2), min_size=3, max_size=3))
def test_planted_counterterms_are_recovered(m, coeffs):
    base = quiet_extend(SampledDistribution.power(-1.0, support="h>0"))
    planted = {(k,): coeffs[k] for k in range(m + 1)}
    synthetic = DistributionSum(((1.0, base),) + tuple((c, PointMass(a)) for a, c in planted.items()))
    fit = fit_counterterm(synthetic, base, m)
    for a, c in planted.items():
        assert fit.coefficient(a) == pytest.approx(c, abs=1e-6)


def test_cutoff_change_fits_a_single_delta():
    t = SampledDistribution.power(-1.0, support="h>0")
    base = quiet_extend(t)
    other = ExtendedDistribution(t, CutoffPair(0.5, 2.0), 0, -1.0)
    fit = fit_counterterm(base, other, 0)
    # coefficient of delta: the 1/h moment of chi2 - chi1
    cut1, cut2 = base.cutoff, other.cutoff
    expected = mp.quad(lambda h: (chi_mp(cut2, h) - chi_mp(cut1, h)) / h, [cut2.a, cut1.a, cut2.b, cut1.b])
    assert fit.max_order == 0
    assert fit.coefficient((0,)) == pytest.approx(float(expected), abs=1e-7)


def test_smooth_difference_is_rejected():
    base = quiet_extend(SampledDistribution.power(-1.0, support="h>0"))
    smooth = SampledDistribution.power(0.0).times(lambda p: np.exp(-p[:, 0] ** 2))
    with pytest.raises(NonLocalDifferenceError):
        fit_counterterm(base, smooth, 1)


def test_heaviside_derivative_is_delta():
    heaviside = SampledDistribution.power(0.0, support="h>0")
    cut = CutoffPair()
    phi0 = float(phi_mp(0))
    for value in (
        residue_d(heaviside, cut, PHI),
        residue_d_direct(heaviside, cut, PHI),
        anomaly(heaviside, None, cut, PHI),
        anomaly_direct(heaviside, None, cut, PHI),
    ):
        assert value == pytest.approx(phi0, abs=1e-8)


def test_inverse_abs_residue_with_even_cutoff():
    inv_abs = SampledDistribution.power(-1.0)
    cut = CutoffPair()
    formula = residue_d(inv_abs, cut, PHI)
    assert formula == pytest.approx(residue_d_direct(inv_abs, cut, PHI), abs=1e-8)
    # an even cutoff kills the delta term and leaves twice the first derivative
    assert formula == pytest.approx(2 * float(mp.diff(phi_mp, 0)), abs=1e-8)


def test_smooth_step_agrees_with_the_oracle_cutoff():
    cut = CutoffPair(1.0, 3.0)
    for h in (0.5, 1.3, 2.0, 2.9):
        assert float(cut.chi(np.array([h]))[0]) == pytest.approx(float(chi_mp(cut, h)), abs=1e-14)
    assert smooth_step(np.array([0.5]))[0] == 0.5
