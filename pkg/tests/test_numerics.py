import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from renorm._numerics import adaptive_gl, extrapolate, gauss_legendre, thread_cap


@pytest.mark.parametrize("n", [4, 16, 40])
def test_gauss_legendre_integrates_polynomials_exactly(n):
    x, w = gauss_legendre(n)
    for k in range(2 * n):
        exact = 0.0 if k % 2 else 2.0 / (k + 1)
        assert float(w @ x**k) == pytest.approx(exact, abs=1e-13)


def test_adaptive_quadrature_resolves_a_kink():
    res = adaptive_gl(lambda x: np.abs(x - 0.3), [0.0, 1.0], tol=1e-12)
    assert res.value == pytest.approx(0.29, abs=1e-11)


def test_adaptive_quadrature_of_an_oscillation():
    res = adaptive_gl(lambda x: np.cos(40 * x), [0.0, math.pi / 2], tol=1e-12)
    assert res.value == pytest.approx(math.sin(20 * math.pi) / 40, abs=1e-11)


@settings(max_examples=30)
@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(-5, 5))
def test_extrapolation_recovers_a_planted_intercept(c0, c1, c2):
    eps = 0.2 * 2.0 ** -np.arange(6)
    fit = extrapolate(eps, c0 + c1 * eps + c2 * eps**2, [1.0, 2.0])
    assert fit.value == pytest.approx(c0, abs=1e-10)


def test_thread_cap(monkeypatch):
    monkeypatch.delenv("RENORM_THREADS", raising=False)
    assert thread_cap() == 1
    monkeypatch.setenv("RENORM_THREADS", "zero")
    with pytest.raises(ValueError):
        thread_cap()
