import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from renorm.wightman import (
    BoundaryValue,
    GaussianProfile,
    MinkowskiForm,
    klein_gordon_residual,
    massive_delta_plus,
    poisson_closed,
    poisson_integral,
    subordination_check,
    wf_qs_member,
    wick_boundary_pair,
    wick_oscillatory_pair,
)


@settings(max_examples=12, deadline=None)
@given(st.floats(0.3, 2.0), st.floats(-1.5, 1.5), st.floats(-1.5, 1.5), st.sampled_from([2, 3, 4]))
def test_poisson_closed_form(y, a, b, n):
    x = [a, b, 0.0][: n - 1] if n > 2 else [a]
    assert poisson_integral(y, x, n) == pytest.approx(poisson_closed(y, x, n), rel=1e-7)


@pytest.mark.parametrize("y,r", [(0.7, 0.0), (0.7, 1.2), (1.5, 0.4)])
def test_poisson_kernel_from_its_fourier_side(y, r):
    # (2 pi)^-3 int e^{i x.xi - y|xi|} / |xi| d^3 xi = (2 pi)^-3 4 pi int k e^{-yk} sinc(kr) dk
    def integrand(k):
        return k * mp.exp(-y * k) * (mp.sin(k * r) / (k * r) if r else 1)

    oracle = 4 * mp.pi * mp.quad(integrand, [0, mp.inf]) / (2 * mp.pi) ** 3
    assert poisson_closed(y, [r, 0.0, 0.0], 3) == pytest.approx(float(oracle), rel=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.1, 5.0), st.floats(0.1, 5.0))
def test_subordination_identity(A, y):
    assert subordination_check(A, y) < 1e-9


@pytest.mark.parametrize("t,x", [(0.0, 1.0), (0.5, 2.0), (-0.3, 0.8), (1.0, -3.0)])
def test_spacelike_delta_plus_is_a_bessel_function(t, x):
    value = massive_delta_plus(t, x, 1.0, 1)
    oracle = mp.besselk(0, mp.sqrt(x * x - t * t)) / (2 * mp.pi)
    assert value.real == pytest.approx(float(oracle), abs=1e-7)
    assert abs(value.imag) < 1e-7


@pytest.mark.parametrize("t,x", [(1.3, 0.4), (2.0, 0.0), (0.9, -0.5)])
def test_future_timelike_delta_plus(t, x):
    # positive-frequency integral at x = 0: (1/2pi) int e^{-i m t cosh u} du = -(Y0 + i J0)/4
    z = mp.sqrt(t * t - x * x)
    value = massive_delta_plus(t, x, 1.0, 1)
    assert value.real == pytest.approx(float(-mp.bessely(0, z) / 4), abs=1e-7)
    assert value.imag == pytest.approx(float(-mp.besselj(0, z) / 4), abs=1e-7)


def test_past_timelike_is_the_conjugate():
    assert massive_delta_plus(-1.3, 0.4) == pytest.approx(massive_delta_plus(1.3, 0.4).conjugate(), abs=1e-7)


def test_light_cone_is_refused():
    with pytest.raises(ValueError):
        massive_delta_plus(1.0, 1.0 + 1e-6)


@pytest.mark.parametrize("t,x", [(0.2, 1.5), (1.3, 0.4), (-0.7, 2.1)])
def test_delta_plus_is_boost_invariant(t, x):
    L = MinkowskiForm(1).boost(0.5)
    tb, xb = L @ np.array([t, x])
    assert massive_delta_plus(tb, xb) == pytest.approx(massive_delta_plus(t, x), abs=1e-7)


def test_boost_preserves_the_form():
    form = MinkowskiForm(3)
    L = form.boost(0.5, axis=2)
    v = np.array([0.3, 1.0, -0.4, 2.0])
    assert form.Q(L @ v) == pytest.approx(form.Q(v), rel=1e-13)


@pytest.mark.parametrize("t,x", [(0.0, 1.5), (0.3, 2.0), (2.0, 0.5)])
def test_klein_gordon(t, x):
    assert klein_gordon_residual(t, x, 1.0) < 1e-4


@settings(max_examples=200)
@given(
    st.floats(-3, 3),
    st.floats(0, 3),
    st.floats(1e-3, 1.0),
    st.floats(-2.5, 2.5),
)
def test_boundary_value_uses_the_upper_branch(t, r, eps, s):
    # arg Q(x + i eps theta) is taken in (0, 2 pi), so Q never crosses the cut [0, inf)
    bv = BoundaryValue(s)
    q = complex(t + 1j * eps) ** 2 - r**2
    assert not (q.imag == 0 and q.real >= 0)
    arg = math.atan2(q.imag, q.real) % (2 * math.pi)
    expected = abs(q) ** s * complex(math.cos(s * arg), math.sin(s * arg))
    got = complex(bv.value(np.array(t), np.array(r), eps))
    assert got == pytest.approx(expected, rel=1e-9, abs=1e-12)
    assert bv.branch_margin(np.array([t]), np.array([r]), eps) > 0


def test_branch_margin_is_positive_on_a_grid():
    t, r = np.meshgrid(np.linspace(-3, 3, 61), np.linspace(0, 3, 31))
    assert BoundaryValue(-1.0).branch_margin(t, r, 0.01) > 0


PROFILE = GaussianProfile(0.5, 0.0, 0.0, 3)


def gaussian_mass(sigma, n):
    return (2 * math.pi * sigma**2) ** ((n + 1) / 2)


def test_boundary_pairing_of_the_quadratic_form():
    # Gaussian moments: E[t^2] = sigma^2, E[r^2] = 3 sigma^2
    s2 = PROFILE.sigma**2
    value = wick_boundary_pair(1, PROFILE.radial_value, 3).value
    assert value == pytest.approx(-2 * s2 * gaussian_mass(0.5, 3), rel=1e-10)


def test_boundary_pairing_of_the_squared_form():
    # E[(t^2 - r^2)^2] = 3 - 6 + 15 in units of sigma^4
    s2 = PROFILE.sigma**2
    value = wick_boundary_pair(2, PROFILE.radial_value, 3).value
    assert value == pytest.approx(12 * s2**2 * gaussian_mass(0.5, 3), rel=1e-10)


def test_boundary_pairing_in_two_dimensions():
    # n = 1, E[(t^2 - x^2)^2] = 3 - 2 + 3 in units of sigma^4
    profile = GaussianProfile(0.5, 0.0, 0.0, 1)
    value = wick_boundary_pair(2, profile.value, 1, radial=False).value
    assert value == pytest.approx(4 * 0.5**4 * gaussian_mass(0.5, 1), rel=1e-9)


def test_inverse_form_dual_path():
    boundary = wick_boundary_pair(-1, PROFILE.radial_value, 3)
    oscillatory, calibration = wick_oscillatory_pair(PROFILE)
    # the returned value already carries the calibration factor
    assert calibration == pytest.approx(-1 / (4 * math.pi), rel=1e-12)
    assert boundary.value == pytest.approx(oscillatory, abs=1e-4)


def test_wave_front_membership():
    form = MinkowskiForm(3)
    x = np.array([1.0, 0.6, 0.8, 0.0])
    assert wf_qs_member(x, 3.0 * form.dQ(x))
    assert not wf_qs_member(x, -form.dQ(x))
    assert not wf_qs_member(np.array([1.0, 0.1, 0.0, 0.0]), np.array([1.0, 0.0, 0.0, 0.0]))
    assert wf_qs_member(np.zeros(4), np.array([1.0, 0.3, 0.0, 0.0]))
    assert not wf_qs_member(np.zeros(4), np.array([-1.0, 0.3, 0.0, 0.0]))
