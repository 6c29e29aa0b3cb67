"""Flat-space two-point functions: Poisson kernel, subordination, Wick rotation,
the massive Wightman function and the wave front set of ``Q^s(x + i0 theta)``.

Spatial dimension ``n`` is 1, 2 or 3; spacetime points are ``(t, x_1..x_n)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import special

from ._numerics import adaptive_gl, extrapolate, gauss_legendre
from .microlocal import Cone

__all__ = [
    "BoundaryValue",
    "GaussianProfile",
    "MinkowskiForm",
    "WickPairing",
    "klein_gordon_residual",
    "massive_delta_plus",
    "poisson_closed",
    "poisson_integral",
    "subordination_check",
    "wf_qs_cone",
    "wf_qs_member",
    "wick_boundary_pair",
    "wick_oscillatory_pair",
]


@dataclass(frozen=True)
class MinkowskiForm:
    """``Q(x) = x0^2 - |x_space|^2`` on ``R^{1+n}``."""

    n: int = 3

    @property
    def dim(self) -> int:
        return self.n + 1

    def q(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        x, y = np.asarray(x), np.asarray(y)
        return x[..., 0] * y[..., 0] - np.sum(x[..., 1:] * y[..., 1:], axis=-1)

    def Q(self, x: np.ndarray) -> np.ndarray:
        return self.q(x, x)

    def dQ(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = 2.0 * x.copy()
        out[..., 1:] *= -1.0
        return out

    def is_future(self, x: np.ndarray, closed: bool = True) -> bool:
        x = np.asarray(x, dtype=float)
        val = float(self.Q(x))
        return bool(x[0] > 0 and (val >= 0 if closed else val > 0))

    def boost(self, rapidity: float, axis: int = 1) -> np.ndarray:
        L = np.eye(self.dim)
        ch, sh = math.cosh(rapidity), math.sinh(rapidity)
        L[0, 0] = L[axis, axis] = ch
        L[0, axis] = L[axis, 0] = sh
        return L


# ---------------------------------------------------------------------------
# Poisson kernel and subordination
# ---------------------------------------------------------------------------


def poisson_constant(n: int) -> float:
    return math.gamma((n - 1) / 2) / (2.0 * math.pi ** ((n + 1) / 2))


def poisson_closed(y: float, x: Sequence[float] | float, n: int) -> float:
    """``Gamma((n-1)/2) / (2 pi^{(n+1)/2}) (y^2 + |x|^2)^{-(n-1)/2}``."""
    if n < 2 or y <= 0:
        raise ValueError("need n >= 2 and y > 0")
    r2 = float(np.sum(np.square(x)))
    return poisson_constant(n) * (y * y + r2) ** (-(n - 1) / 2)


def _sphere_average(n: int, s: np.ndarray) -> np.ndarray:
    """``int_{S^{n-1}} exp(i s omega_1) d omega``."""
    s = np.asarray(s, dtype=float)
    if n == 1:
        return 2.0 * np.cos(s)
    if n == 2:
        return 2.0 * math.pi * special.j0(s)
    if n == 3:
        return 4.0 * math.pi * np.sinc(s / math.pi)
    nu = n / 2 - 1
    safe = np.where(s == 0, 1.0, s)
    val = (2 * math.pi) ** (n / 2) * safe ** (-nu) * special.jv(nu, safe)
    return np.where(s == 0, 2 * math.pi ** (n / 2) / math.gamma(n / 2), val)


def poisson_integral(y: float, x: Sequence[float] | float, n: int, tol: float = 1e-12) -> float:
    """``(2 pi)^{-n} int exp(i x.xi - y |xi|) / |xi| d^n xi`` by radial reduction."""
    if n < 2 or y <= 0:
        raise ValueError("need n >= 2 and y > 0")
    rho = math.sqrt(float(np.sum(np.square(x))))
    top = 60.0 / y
    edges = np.linspace(0.0, top, 1 + max(8, int(rho * top / math.pi)))

    def f(r: np.ndarray) -> np.ndarray:
        return r ** (n - 2) * np.exp(-y * r) * _sphere_average(n, r * rho)

    res = adaptive_gl(f, edges, tol=tol)
    return float(res.value) / (2 * math.pi) ** n


def subordination_check(A: float, y: float, tol: float = 1e-13) -> float:
    """``|exp(-A y)/A - pi^{-1/2} int_0^inf exp(-y^2/4t - A^2 t) t^{-1/2} dt|``.

    The integral runs in ``u = log t`` where the integrand is smooth with
    double-exponential decay at both ends.
    """
    if A <= 0 or y < 0:
        raise ValueError("need A > 0 and y >= 0")

    def f(u: np.ndarray) -> np.ndarray:
        t = np.exp(u)
        with np.errstate(over="ignore"):
            return np.exp(-(y * y) / (4 * t) - A * A * t + 0.5 * u)

    centre = math.log(max(y, 1e-300) / (2 * A)) if y > 0 else -2 * math.log(A)
    lo, hi = min(centre, 0.0) - 50.0, max(centre, 0.0) + 10.0
    rhs = adaptive_gl(f, np.linspace(lo, hi, 121), tol=tol).value / math.sqrt(math.pi)
    return abs(math.exp(-A * y) / A - rhs)


# ---------------------------------------------------------------------------
# Massive Wightman function
# ---------------------------------------------------------------------------


def _damped_delta_plus(t: float, rho: float, m: float, n: int, eps: float, tol: float) -> complex:
    """``int d^n xi exp(-(eps + i t) omega + i x.xi) / omega`` via ``|xi| = m sinh u``."""
    top = math.acosh(max(1.0, 45.0 / (eps * m)))

    def f(u: np.ndarray) -> np.ndarray:
        r = m * np.sinh(u)
        w = m * np.cosh(u)
        return r ** (n - 1) * _sphere_average(n, r * rho) * np.exp(-(eps + 1j * t) * w)

    cycles = m * (abs(t) + rho) * math.sinh(top) / (2 * math.pi)
    pieces = 1 + int(min(4000, cycles))
    edges = np.arcsinh(np.linspace(0.0, math.sinh(top), pieces + 1))
    edges = np.unique(np.concatenate([np.linspace(0, min(top, 3.0), 16), edges]))
    return complex(adaptive_gl(f, edges, tol=tol).value)


def massive_delta_plus(
    t: float,
    x: Sequence[float] | float,
    m: float = 1.0,
    n: int = 1,
    eps: Sequence[float] | None = None,
    tol: float = 1e-13,
) -> complex:
    """``Delta_+(t, x) = (2 (2 pi)^n)^{-1} int exp(-i t omega + i x.xi) / omega d^n xi``.

    The integral is damped by ``exp(-eps omega)``; as a function of ``eps``
    it is ``F(t - i eps)`` with ``F`` analytic away from the light cone, so
    the ``eps -> 0`` value is a polynomial extrapolation.  The default
    ``eps`` ladder stays below a fifth of the distance to the cone.
    """
    if n not in (1, 2, 3):
        raise ValueError("spatial dimension must be 1, 2 or 3")
    rho = math.sqrt(float(np.sum(np.square(x))))
    gap = abs(rho - abs(t))
    if gap < 1e-3:
        raise ValueError("point too close to the light cone")
    if eps is None:
        top = min(0.2, gap / 5)
        eps = top * 2.0 ** -np.arange(6)
    eps = np.asarray(eps, dtype=float)
    vals = np.array([_damped_delta_plus(t, rho, m, n, e, tol) for e in eps])
    res = extrapolate(eps, vals, list(range(1, len(eps) - 1)))
    return complex(res.value) / (2.0 * (2 * math.pi) ** n)


def klein_gordon_residual(t: float, x: float, m: float = 1.0, step: float = 0.1) -> float:
    """``|(d_t^2 - d_x^2 + m^2) Delta_+|`` at ``(t, x)`` with 5-point 4th-order stencils (n = 1)."""
    weights = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / (12.0 * step * step)
    offs = step * np.arange(-2, 3)
    centre = massive_delta_plus(t, x, m, 1)
    dtt = sum(w * (massive_delta_plus(t + o, x, m, 1) if o else centre) for w, o in zip(weights, offs))
    dxx = sum(w * (massive_delta_plus(t, x + o, m, 1) if o else centre) for w, o in zip(weights, offs))
    return abs(dtt - dxx + m * m * centre)


# ---------------------------------------------------------------------------
# Wick rotation boundary values
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GaussianProfile:
    """``phi(t, x) = exp(-((t - t0)^2 + |x - x0|^2) / (2 sigma^2))`` on ``R^{1+n}``.

    ``x0`` sits on the first spatial axis; the value is given as a function of
    ``t`` and the first coordinate plus the transverse radius, and the Fourier
    transform ``hat phi(tau, k) = int phi exp(-i (t tau + x.k))`` is closed-form.
    """

    sigma: float = 0.5
    t0: float = 0.0
    x0: float = 0.0
    n: int = 3

    def radial_value(self, t: np.ndarray, rho: np.ndarray) -> np.ndarray:
        if self.x0:
            raise ValueError("radial form needs x0 = 0")
        return np.exp(-((t - self.t0) ** 2 + rho**2) / (2 * self.sigma**2))

    def value(self, t: np.ndarray, x: np.ndarray) -> np.ndarray:
        return np.exp(-((t - self.t0) ** 2 + (x - self.x0) ** 2) / (2 * self.sigma**2))

    def fourier(self, tau: np.ndarray, k: np.ndarray) -> np.ndarray:
        """``hat phi(tau, k)`` with ``|k| = k`` (``x0 = 0``)."""
        if self.x0:
            raise ValueError("radial form needs x0 = 0")
        s2 = self.sigma**2
        norm = (2 * math.pi * s2) ** ((self.n + 1) / 2)
        return norm * np.exp(-1j * tau * self.t0 - s2 * (tau**2 + k**2) / 2)


@dataclass(frozen=True)
class BoundaryValue:
    """``eps -> Q(x + i eps theta)^s`` with ``theta = (theta0, 0, ..., 0)`` and ``0 < arg Q < 2 pi``.

    In light-cone variables ``u = t - r``, ``v = t + r`` the complexified form
    factors as ``(u + i eps') (v + i eps')`` with ``eps' = eps theta0``; each
    factor has argument in ``(0, pi)``, so the product of the principal powers
    is the branch above.
    """

    s: complex
    theta0: float = 1.0

    def __post_init__(self) -> None:
        if self.theta0 <= 0:
            raise ValueError("theta must be future pointing")

    def factors(self, u: np.ndarray, v: np.ndarray, eps: float) -> np.ndarray:
        e = eps * self.theta0
        return (u + 1j * e) ** self.s * (v + 1j * e) ** self.s

    def value(self, t: np.ndarray, r: np.ndarray, eps: float) -> np.ndarray:
        return self.factors(np.asarray(t) - r, np.asarray(t) + r, eps)

    def branch_margin(self, t: np.ndarray, r: np.ndarray, eps: float) -> float:
        """Smallest distance of ``Q(x + i eps theta)`` from ``[0, inf)`` on the grid."""
        e = eps * self.theta0
        q = (np.asarray(t) + 1j * e) ** 2 - np.asarray(r) ** 2
        dist = np.where(q.real >= 0, np.abs(q.imag), np.abs(q))
        return float(dist.min())


def _graded_nodes(centre: float, eps: float, half_width: float, order: int = 24) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes on ``[centre - L, centre + L]`` graded geometrically towards ``centre``."""
    inner = eps / 64
    k = max(1, int(math.ceil(math.log2(half_width / inner))))
    right = np.concatenate([[0.0], inner * 2.0 ** np.arange(k + 1)])
    right = right[right < half_width]
    right = np.append(right, half_width)
    edges = np.unique(np.concatenate([-right[::-1], right])) + centre
    x, w = gauss_legendre(order)
    a, b = edges[:-1], edges[1:]
    mid, half = (a + b) / 2, (b - a) / 2
    return (mid[:, None] + half[:, None] * x).ravel(), (half[:, None] * w).ravel()


@dataclass(frozen=True)
class WickPairing:
    value: complex
    samples: tuple[tuple[float, complex], ...]
    residual: float
    branch_margin: float


def wick_boundary_pair(
    s: complex,
    profile: Callable[[np.ndarray, np.ndarray], np.ndarray],
    n: int,
    eps: Sequence[float] = tuple(0.2 * 2.0 ** -np.arange(7)),
    theta0: float = 1.0,
    extent: float = 8.0,
    radial: bool = True,
) -> WickPairing:
    """``lim <Q^s(. + i eps theta), phi>`` by light-cone quadrature and polynomial extrapolation.

    ``profile(t, r)`` is ``phi`` restricted to ``t`` and the spatial radius for
    ``n >= 2`` (``radial``); for ``n = 1`` it is ``phi(t, x)``.  The pairing is
    ``F(eps) = <Q^s, phi(. - i eps theta)>``, analytic in ``eps`` for entire
    test functions, hence the polynomial extrapolation.
    """
    bv = BoundaryValue(s, theta0)
    if n == 1 and not radial:
        measure = lambda r: np.ones_like(r)  # noqa: E731
        jac = 0.5
    else:
        area = 2 * math.pi ** (n / 2) / math.gamma(n / 2)
        # the (u, v) integrand is symmetric under u <-> v, so the half-plane
        # r >= 0 is half of the full plane
        measure = lambda r: np.abs(r) ** (n - 1)  # noqa: E731
        jac = 0.5 * 0.5 * area
    vals, margin = [], math.inf
    for e in eps:
        u, wu = _graded_nodes(0.0, e * theta0, extent)
        v, wv = u, wu
        U, V = np.meshgrid(u, v, indexing="ij")
        T, R = (U + V) / 2, (V - U) / 2
        f = bv.factors(U, V, e) * measure(R) * profile(T, R if not radial else np.abs(R))
        vals.append(jac * (wu @ f @ wv))
        margin = min(margin, bv.branch_margin(T, R, e))
    eps_arr = np.asarray(eps, dtype=float)
    res = extrapolate(eps_arr, np.array(vals), list(range(1, len(eps_arr) - 1)))
    return WickPairing(complex(res.value), tuple(zip(map(float, eps_arr), vals)), res.residual, margin)


def wick_oscillatory_pair(profile: GaussianProfile, tol: float = 1e-12) -> tuple[complex, float]:
    """``<Q^{-1}(. + i0 theta), phi>`` for ``n = 3`` from the Poisson kernel continued to ``y = eps - i t``.

    Returns ``(value, calibration)`` where ``calibration = -(2 pi)^{-3} / c_3``
    with ``c_3`` the Poisson constant, so that
    ``Q^{-1}(x + i0 theta) = calibration * int exp(i x.xi + i t |xi|) / |xi| d^3 xi``.
    """
    if profile.n != 3:
        raise ValueError("the oscillatory identity is implemented for n = 3")
    calibration = -((2 * math.pi) ** -3) / poisson_constant(3)

    def f(r: np.ndarray) -> np.ndarray:
        return 4 * math.pi * r * profile.fourier(-r, r)

    top = 40.0 / profile.sigma
    value = adaptive_gl(f, np.linspace(0.0, top, 65), tol=tol).value
    return complex(calibration * value), calibration


# ---------------------------------------------------------------------------
# Wave front set of Q^s(. + i0 theta)
# ---------------------------------------------------------------------------


def wf_qs_member(x: Sequence[float], xi: Sequence[float], tol: float = 1e-9) -> bool:
    """``{(x; tau dQ_x) : tau x0 > 0, Q(x) = 0} u {(0; xi) : Q(xi) >= 0, xi0 > 0}``."""
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    form = MinkowskiForm(len(x) - 1)
    if not np.any(xi):
        return False
    scale = max(1.0, float(np.dot(x, x)))
    if np.linalg.norm(x) <= tol:
        return bool(xi[0] > 0 and form.Q(xi) >= -tol * float(np.dot(xi, xi)))
    if abs(form.Q(x)) > tol * scale:
        return False
    g = form.dQ(x)
    tau = float(np.dot(xi, g) / np.dot(g, g))
    if np.linalg.norm(xi - tau * g) > tol * np.linalg.norm(xi):
        return False
    return tau * x[0] > 0


def wf_qs_cone(n: int = 3, origin_share: float = 0.2) -> Cone:
    """The wave front set above as a sampled :class:`Cone` on ``R^{1+n}``."""
    form = MinkowskiForm(n)

    def on_cone(count: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        direction = rng.normal(size=(count, n))
        direction /= np.linalg.norm(direction, axis=1, keepdims=True)
        radius = rng.uniform(0.05, 1.0, count)
        sign = rng.choice([-1.0, 1.0], count)
        pts = np.concatenate([(sign * radius)[:, None], radius[:, None] * direction], axis=1)
        cov = form.dQ(pts) * sign[:, None]
        return pts, cov / np.linalg.norm(cov, axis=1, keepdims=True)

    def future(count: int, rng: np.random.Generator) -> np.ndarray:
        space = rng.normal(size=(count, n))
        space /= np.linalg.norm(space, axis=1, keepdims=True)
        space *= rng.uniform(0, 1, (count, 1))
        cov = np.concatenate([np.ones((count, 1)), space], axis=1)
        return cov / np.linalg.norm(cov, axis=1, keepdims=True)

    def sampler(count: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        k = int(round(origin_share * count))
        pts, cov = on_cone(count - k, rng)
        return np.concatenate([pts, np.zeros((k, n + 1))]), np.concatenate([cov, future(k, rng)])

    def fiber(x: np.ndarray, count: int, rng: np.random.Generator) -> np.ndarray:
        if np.linalg.norm(x) <= 1e-12:
            return future(count, rng)
        if abs(form.Q(x)) > 1e-9 * max(1.0, float(np.dot(x, x))):
            return np.zeros((0, n + 1))
        g = form.dQ(x) * math.copysign(1.0, x[0])
        return (g / np.linalg.norm(g))[None, :]

    return Cone(n + 1, lambda x, xi: wf_qs_member(x, xi), sampler, fiber, f"WF(Q^s), n={n}")
