"""Test functions, cutoffs, singular pairings and scaling degrees.

Distributions here live on ``R^d`` (``d`` = 1 or 2) and are singular only at
the origin.  A density is paired with a test function by integrating in the
logarithm of the radius, which resolves power-law behaviour at the origin
uniformly; whatever lies below the innermost radius is added from the
power-law model licensed by the claimed scaling degree.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable, Protocol, Sequence

import numpy as np
import sympy as sp
from scipy.integrate import solve_ivp
from scipy.special import expit

from ._numerics import adaptive_gl

__all__ = [
    "CutoffPair",
    "Dilated",
    "DistributionSum",
    "EulerField",
    "PairResult",
    "PointMass",
    "SampledDistribution",
    "ScalingDegree",
    "TaylorRemainder",
    "TestFunction",
    "as_points",
    "integrate_singular",
    "lp_identity_check",
    "multi_indices",
    "pair",
    "scale_pair",
    "scaling_degree",
    "smooth_step",
    "taylor_polynomial",
    "taylor_remainder",
]

INNER_RADIUS = 1e-12
ANGULAR_NODES = 64


def as_points(h: np.ndarray | float, dim: int) -> np.ndarray:
    """Coerce ``h`` to an ``(N, dim)`` array."""
    arr = np.asarray(h, dtype=float)
    if dim == 1:
        return arr.reshape(-1, 1)
    return arr.reshape(-1, dim)


def multi_indices(dim: int, order: int) -> list[tuple[int, ...]]:
    """Multi-indices of total order ``order`` in lexicographic order."""
    return sorted(
        (a for a in itertools.product(range(order + 1), repeat=dim) if sum(a) == order),
        reverse=True,
    )


# ---------------------------------------------------------------------------
# Test functions
# ---------------------------------------------------------------------------


class TestLike(Protocol):
    dim: int
    support_radius: float

    def __call__(self, h: np.ndarray) -> np.ndarray: ...

    def derivative(self, alpha: Sequence[int], h: np.ndarray) -> np.ndarray: ...


def _symbols(dim: int) -> tuple[sp.Symbol, ...]:
    return sp.symbols(f"h0:{dim}", real=True)


@dataclass(frozen=True)
class TestFunction:
    """Closed-form test function on ``R^dim`` with exact derivatives.

    The function is a sympy expression in ``h0, h1, ...``; derivatives are
    taken symbolically once and compiled to numpy on first use.
    ``support_radius`` bounds the support (or the truncation radius for
    Gaussian families, beyond which the function is below 1e-30).
    """

    __test__ = False  # keep pytest from collecting this class

    expr: sp.Expr
    dim: int = 1
    support_radius: float = 10.0
    name: str = "phi"
    _cache: dict = field(default_factory=dict, compare=False, repr=False, hash=False)

    @property
    def symbols(self) -> tuple[sp.Symbol, ...]:
        return _symbols(self.dim)

    @classmethod
    def from_string(cls, text: str, dim: int = 1, support_radius: float = 10.0, name: str = "phi") -> "TestFunction":
        local = {f"h{i}": s for i, s in enumerate(_symbols(dim))}
        if dim == 1:
            local["h"] = local["h0"]
        return cls(sp.sympify(text, locals=local), dim, support_radius, name)

    @classmethod
    def gaussian(
        cls,
        center: float | Sequence[float] = 0.0,
        width: float = 1.0,
        poly: Sequence[float] | str = (1.0,),
        dim: int = 1,
        name: str = "gauss",
    ) -> "TestFunction":
        """``P(v) exp(-|v|^2 / 2)`` with ``v = (h - center) / width``."""
        hs = _symbols(dim)
        c = np.broadcast_to(np.asarray(center, dtype=float), (dim,))
        v = [(hs[i] - sp.Float(c[i])) / sp.Float(width) for i in range(dim)]
        expr = _poly_expr(poly, v) * sp.exp(-sum(vi**2 for vi in v) / 2)
        radius = float(np.linalg.norm(c)) + 12.0 * width
        return cls(expr, dim, radius, name)

    @classmethod
    def bump(
        cls,
        center: float | Sequence[float] = 0.0,
        width: float = 1.0,
        poly: Sequence[float] | str = (1.0,),
        dim: int = 1,
        name: str = "bump",
    ) -> "TestFunction":
        """``P(v) exp(-1 / (1 - |v|^2))`` on ``|v| < 1``, zero outside."""
        hs = _symbols(dim)
        c = np.broadcast_to(np.asarray(center, dtype=float), (dim,))
        v = [(hs[i] - sp.Float(c[i])) / sp.Float(width) for i in range(dim)]
        r2 = sum(vi**2 for vi in v)
        expr = sp.Piecewise(
            (_poly_expr(poly, v) * sp.exp(-1 / (1 - r2)) * sp.E, r2 < 1), (0, True)
        )
        radius = float(np.linalg.norm(c)) + width
        return cls(expr, dim, radius, name)

    def _symbolic(self, alpha: tuple[int, ...]) -> sp.Expr:
        key = ("sym", alpha)
        if key not in self._cache:
            if not any(alpha):
                self._cache[key] = self.expr
            else:
                # differentiate the cached lower-order derivative in the last active variable
                i = max(k for k, a in enumerate(alpha) if a)
                lower = list(alpha)
                lower[i] -= 1
                self._cache[key] = sp.diff(self._symbolic(tuple(lower)), self.symbols[i])
        return self._cache[key]

    def _compiled(self, alpha: tuple[int, ...]) -> Callable:
        if alpha not in self._cache:
            self._cache[alpha] = sp.lambdify(self.symbols, self._symbolic(alpha), modules="numpy")
        return self._cache[alpha]

    def derivative(self, alpha: Sequence[int], h: np.ndarray) -> np.ndarray:
        alpha = tuple(int(a) for a in alpha)
        if len(alpha) != self.dim:
            raise ValueError(f"multi-index {alpha} does not match dimension {self.dim}")
        pts = as_points(h, self.dim)
        fn = self._compiled(alpha)
        with np.errstate(all="ignore"):
            out = fn(*[pts[:, i] for i in range(self.dim)])
        out = np.broadcast_to(np.asarray(out, dtype=float), (len(pts),)).copy()
        out[~np.isfinite(out)] = 0.0
        return out

    def __call__(self, h: np.ndarray) -> np.ndarray:
        return self.derivative((0,) * self.dim, h)

    def jet(self, order: int) -> dict[tuple[int, ...], float]:
        """Derivatives at the origin up to total ``order``."""
        zero = np.zeros((1, self.dim))
        return {
            a: float(self.derivative(a, zero)[0])
            for k in range(order + 1)
            for a in multi_indices(self.dim, k)
        }

    def dilate(self, k: float) -> "Dilated":
        return Dilated(self, k)

    def times(self, other_expr: str | sp.Expr, name: str | None = None) -> "TestFunction":
        """Product with a polynomial or smooth expression in ``h0, h1, ...``."""
        if isinstance(other_expr, str):
            other = TestFunction.from_string(other_expr, self.dim).expr
        else:
            other = other_expr
        return TestFunction(self.expr * other, self.dim, self.support_radius, name or self.name)

    def euler_transport(self) -> "TestFunction":
        """``(d + rho) phi = d * phi + h . grad phi`` (transpose of ``-rho``)."""
        expr = self.dim * self.expr + sum(s * sp.diff(self.expr, s) for s in self.symbols)
        return TestFunction(expr, self.dim, self.support_radius, f"(d+rho){self.name}")

    def reflected(self) -> "TestFunction":
        subs = {s: -s for s in self.symbols}
        return TestFunction(self.expr.subs(subs, simultaneous=True), self.dim, self.support_radius, f"{self.name}(-h)")


def _poly_expr(poly: Sequence[float] | str, v: list[sp.Expr]) -> sp.Expr:
    if isinstance(poly, str):
        local = {f"v{i}": vi for i, vi in enumerate(v)}
        if len(v) == 1:
            local["v"] = v[0]
        return sp.sympify(poly, locals=local)
    return sum(sp.Float(c) * v[0] ** k for k, c in enumerate(poly))


@dataclass(frozen=True)
class Dilated:
    """``phi(k h)`` with derivatives from the chain rule."""

    base: TestLike
    k: float

    @property
    def dim(self) -> int:
        return self.base.dim

    @property
    def support_radius(self) -> float:
        return self.base.support_radius / self.k

    @property
    def name(self) -> str:
        return f"{getattr(self.base, 'name', 'phi')}({self.k:g}h)"

    def __call__(self, h: np.ndarray) -> np.ndarray:
        return self.base(as_points(h, self.dim) * self.k)

    def derivative(self, alpha: Sequence[int], h: np.ndarray) -> np.ndarray:
        return self.k ** sum(alpha) * self.base.derivative(alpha, as_points(h, self.dim) * self.k)

    def jet(self, order: int) -> dict[tuple[int, ...], float]:
        zero = np.zeros((1, self.dim))
        return {
            a: float(self.derivative(a, zero)[0])
            for k in range(order + 1)
            for a in multi_indices(self.dim, k)
        }


def _jet(phi: TestLike, order: int) -> dict[tuple[int, ...], float]:
    if hasattr(phi, "jet"):
        return phi.jet(order)
    zero = np.zeros((1, phi.dim))
    return {
        a: float(phi.derivative(a, zero)[0])
        for k in range(order + 1)
        for a in multi_indices(phi.dim, k)
    }


def _monomials(pts: np.ndarray, alpha: tuple[int, ...]) -> np.ndarray:
    out = np.ones(len(pts))
    for i, a in enumerate(alpha):
        if a:
            out = out * pts[:, i] ** a / math.factorial(a)
    return out


@dataclass(frozen=True)
class TaylorPolynomial:
    """``P_m phi (h) = sum_{|a| <= m} h^a / a! d^a phi(0)``."""

    phi: TestLike
    order: int

    @property
    def dim(self) -> int:
        return self.phi.dim

    @cached_property
    def coefficients(self) -> dict[tuple[int, ...], float]:
        return _jet(self.phi, self.order)

    def __call__(self, h: np.ndarray) -> np.ndarray:
        pts = as_points(h, self.dim)
        out = np.zeros(len(pts))
        for a, c in self.coefficients.items():
            if c:
                out += c * _monomials(pts, a)
        return out


@dataclass(frozen=True)
class TaylorRemainder:
    """``I_m phi = phi - P_m phi``, evaluated from the series near the origin.

    Inside ``series_radius`` the remainder is summed from the jet of orders
    ``m+1 .. m+extra``, which avoids cancellation between ``phi`` and its
    Taylor polynomial.
    """

    phi: TestLike
    order: int
    extra: int = 4
    series_radius: float = 1e-3

    @property
    def dim(self) -> int:
        return self.phi.dim

    @cached_property
    def _poly(self) -> TaylorPolynomial:
        return TaylorPolynomial(self.phi, self.order)

    @cached_property
    def _tail_jet(self) -> dict[tuple[int, ...], float]:
        full = _jet(self.phi, self.order + self.extra)
        return {a: c for a, c in full.items() if sum(a) > self.order}

    @cached_property
    def _radius(self) -> float:
        scale = getattr(self.phi, "support_radius", 1.0)
        return self.series_radius * min(1.0, scale / 10.0)

    def __call__(self, h: np.ndarray) -> np.ndarray:
        pts = as_points(h, self.dim)
        r = np.linalg.norm(pts, axis=1)
        out = self.phi(pts) - self._poly(pts)
        near = r < self._radius
        if near.any():
            sub = pts[near]
            series = np.zeros(len(sub))
            for a, c in self._tail_jet.items():
                if c:
                    series += c * _monomials(sub, a)
            out[near] = series
        return out


def taylor_polynomial(phi: TestLike, m: int) -> TaylorPolynomial:
    if m < 0:
        raise ValueError("Taylor order must be non-negative")
    return TaylorPolynomial(phi, m)


def taylor_remainder(phi: TestLike, m: int) -> TaylorRemainder:
    if m < 0:
        raise ValueError("Taylor order must be non-negative")
    return TaylorRemainder(phi, m)


# ---------------------------------------------------------------------------
# Cutoffs
# ---------------------------------------------------------------------------


def smooth_step(u: np.ndarray) -> np.ndarray:
    """``e^{-1/u} / (e^{-1/u} + e^{-1/(1-u)})``, clamped to 0 and 1 outside (0, 1)."""
    u = np.asarray(u, dtype=float)
    out = np.where(u >= 1.0, 1.0, 0.0)
    inside = (u > 0.0) & (u < 1.0)
    ui = u[inside]
    # 1/u overflows for subnormal u; expit(-inf) = 0 is the right limit
    with np.errstate(over="ignore"):
        out[inside] = expit(1.0 / (1.0 - ui) - 1.0 / ui)
    return out


def smooth_step_prime(u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    inside = (u > 0.0) & (u < 1.0)
    ui = u[inside]
    with np.errstate(over="ignore", invalid="ignore"):
        s = expit(1.0 / (1.0 - ui) - 1.0 / ui)
        out[inside] = np.nan_to_num(s * (1.0 - s) * (1.0 / ui**2 + 1.0 / (1.0 - ui) ** 2))
    return out


@dataclass(frozen=True)
class CutoffPair:
    """Radial cutoff ``chi`` (1 on ``|h| <= a``, 0 on ``|h| >= b``) and ``psi = -rho chi``.

    ``chi(h) = 1 - s((|h| - a) / (b - a))`` with the smooth step ``s``, and
    ``psi(h) = -|h| chi'(|h|)``, which is supported in ``a <= |h| <= b``.
    """

    a: float = 1.0
    b: float = 3.0
    dim: int = 1

    def __post_init__(self) -> None:
        if not 0.0 < self.a < self.b:
            raise ValueError("cutoff radii must satisfy 0 < a < b")

    def _radius(self, h: np.ndarray) -> np.ndarray:
        return np.linalg.norm(as_points(h, self.dim), axis=1)

    def chi(self, h: np.ndarray) -> np.ndarray:
        return 1.0 - smooth_step((self._radius(h) - self.a) / (self.b - self.a))

    def chi_radial_prime(self, r: np.ndarray) -> np.ndarray:
        return -smooth_step_prime((np.asarray(r) - self.a) / (self.b - self.a)) / (self.b - self.a)

    def psi(self, h: np.ndarray) -> np.ndarray:
        r = self._radius(h)
        return -r * self.chi_radial_prime(r)

    def grad_chi(self, h: np.ndarray) -> np.ndarray:
        pts = as_points(h, self.dim)
        r = np.linalg.norm(pts, axis=1)
        safe = np.where(r > 0, r, 1.0)
        return (self.chi_radial_prime(r) / safe)[:, None] * pts

    def scaled(self, ell: float) -> "CutoffPair":
        """Cutoff ``chi(ell h)``: plateau radii divided by ``ell``."""
        return replace(self, a=self.a / ell, b=self.b / ell)

    @property
    def breakpoints(self) -> tuple[float, float]:
        return (self.a, self.b)


def lp_identity_check(pair: CutoffPair, h_grid: Sequence[float], tol: float = 1e-12) -> float:
    """Max deviation of ``chi(h)`` from ``int_0^1 dlam/lam psi(h/lam)`` on a grid.

    Computed in ``u = log lam``; the integrand is supported where
    ``a <= |h|/lam <= b``.
    """
    worst = 0.0
    for h in h_grid:
        r = float(np.linalg.norm(np.atleast_1d(h)))
        if r == 0.0:
            raise ValueError("the identity holds off the origin only")
        point = np.zeros(pair.dim)
        point[0] = r
        lo, hi = math.log(max(r / pair.b, 1e-300)), math.log(min(r / pair.a, 1.0))
        if lo >= hi:
            integral = 0.0
        else:

            def f(u: np.ndarray) -> np.ndarray:
                lam = np.exp(u)
                return pair.psi((point[None, :] / lam[:, None]).reshape(-1, pair.dim))

            integral = adaptive_gl(f, [lo, hi], tol=tol).value
        worst = max(worst, abs(float(pair.chi(np.array([point]))[0]) - integral))
    return worst


# ---------------------------------------------------------------------------
# Singular integration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PairResult:
    value: float
    error: float
    diverged: bool = False

    def __float__(self) -> float:
        return float(self.value)


def integrate_singular(
    g: Callable[[np.ndarray], np.ndarray],
    dim: int,
    r_max: float,
    *,
    support: str = "all",
    tail_power: float | str | None = "auto",
    breakpoints: Sequence[float] = (),
    tol: float = 1e-10,
    r_min: float = INNER_RADIUS,
) -> PairResult:
    """``int g(h) dh`` over ``0 < |h| < r_max``, singular only at the origin.

    The radial variable is integrated in ``log r``.  ``tail_power`` is the
    exponent ``p`` with ``|g| r^{dim-1} ~ r^{p-1}`` near the origin; the ball
    ``|h| < r_min`` contributes ``r_min * g(r_min) / p`` and a nonpositive
    ``p`` flags divergence.  With ``tail_power="auto"`` the exponent is
    measured from the radial integrand at two radii below ``r_min``.
    """
    if support not in ("all", "h>0"):
        raise ValueError(f"unknown support {support!r}")
    if support == "h>0" and dim != 1:
        raise ValueError("half-line support is defined for d = 1 only")
    lo, hi = math.log(r_min), math.log(r_max)
    cuts = [lo, hi] + [math.log(b) for b in breakpoints if r_min < b < r_max]

    if dim == 1:
        signs = (1.0,) if support == "h>0" else (1.0, -1.0)

        def radial(r: np.ndarray, absolute: bool = False) -> np.ndarray:
            parts = [g((sgn * r).reshape(-1, 1)) for sgn in signs]
            return sum(np.abs(p) for p in parts) if absolute else sum(parts)

    elif dim == 2:
        theta = 2.0 * np.pi * np.arange(ANGULAR_NODES) / ANGULAR_NODES
        unit = np.stack([np.cos(theta), np.sin(theta)], axis=1)

        def radial(r: np.ndarray, absolute: bool = False) -> np.ndarray:
            pts = (r[:, None, None] * unit[None, :, :]).reshape(-1, 2)
            vals = g(pts).reshape(len(r), ANGULAR_NODES)
            if absolute:
                vals = np.abs(vals)
            return r * vals.mean(axis=1) * 2.0 * np.pi

    else:
        raise ValueError("singular integration supports d = 1 or 2")

    def integrand(u: np.ndarray) -> np.ndarray:
        r = np.exp(u)
        return radial(r) * r

    if tail_power == "auto":
        # measured on |g| so that cancellation between directions cannot fake a power
        tail_power = _local_power(lambda r: radial(r, absolute=True) * r, r_min)
    if tail_power is not None and tail_power <= 0:
        return PairResult(float("nan"), float("inf"), True)
    res = adaptive_gl(integrand, cuts, tol=tol, min_panels=4)
    value = res.value
    err = res.error
    if tail_power is not None:
        edge = radial(np.array([r_min]))[0] * r_min
        tail = edge / tail_power
        value += tail
        err += abs(tail) * 1e-3
    return PairResult(value, err, not res.converged and err > tol)


def _local_power(f: Callable[[np.ndarray], np.ndarray], r0: float) -> float | None:
    """Exponent ``p`` with ``f(r) ~ r^p`` just below ``r0``; ``None`` if ``f`` vanishes there."""
    radii = np.array([r0 * 1e-2, r0 * 1e-1, r0])
    vals = np.abs(f(radii))
    if np.all(vals == 0):
        return None
    if np.any(vals == 0):
        return float("inf")
    slopes = np.diff(np.log(vals)) / np.diff(np.log(radii))
    # log corrections bend the slope; take the pessimistic one
    return float(np.min(slopes))


# ---------------------------------------------------------------------------
# Distributions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SampledDistribution:
    """Density on ``R^d`` minus the origin with a claimed scaling degree.

    ``support`` is ``"all"`` or ``"h>0"`` (half line, ``d = 1``).  The
    optional ``gradient`` returns an ``(N, dim)`` array off the origin.
    """

    density: Callable[[np.ndarray], np.ndarray]
    degree: float
    dim: int = 1
    support: str = "all"
    name: str = "t"
    gradient: Callable[[np.ndarray], np.ndarray] | None = None

    def __call__(self, h: np.ndarray) -> np.ndarray:
        pts = as_points(h, self.dim)
        out = np.asarray(self.density(pts if self.dim > 1 else pts[:, 0]), dtype=float)
        if self.support == "h>0":
            out = np.where(pts[:, 0] > 0, out, 0.0)
        return out

    @classmethod
    def power(cls, exponent: float, dim: int = 1, support: str = "all", log_power: int = 0, coef: float = 1.0) -> "SampledDistribution":
        """``coef |h|^exponent (log |h|)^log_power`` (times ``H(h)`` for half-line support)."""

        def radial(r: np.ndarray, a: float, j: int) -> np.ndarray:
            with np.errstate(divide="ignore", invalid="ignore"):
                out = r**a
                if j:
                    out = out * np.log(r) ** j
            return out

        def density(h: np.ndarray) -> np.ndarray:
            r = np.linalg.norm(as_points(h, dim), axis=1)
            return coef * radial(r, exponent, log_power)

        def gradient(h: np.ndarray) -> np.ndarray:
            pts = as_points(h, dim)
            r = np.linalg.norm(pts, axis=1)
            dr = exponent * radial(r, exponent - 1, log_power)
            if log_power:
                dr = dr + log_power * radial(r, exponent - 1, log_power - 1)
            with np.errstate(divide="ignore", invalid="ignore"):
                return (coef * dr / r)[:, None] * pts

        tag = f"|h|^{exponent:g}" + (f"log^{log_power}" if log_power else "")
        if support == "h>0":
            tag = "H(h)" + tag
        return cls(density, float(exponent), dim, support, tag, gradient)

    def scaled(self, lam: float) -> "SampledDistribution":
        """``t_lam(h) = t(lam h)`` as a density."""
        base = self

        def density(h: np.ndarray) -> np.ndarray:
            return base(as_points(h, base.dim) * lam)

        return SampledDistribution(density, self.degree, self.dim, "all", f"{self.name}_{lam:g}")

    def times(self, weight: Callable[[np.ndarray], np.ndarray], name: str | None = None) -> "SampledDistribution":
        base = self

        def density(h: np.ndarray) -> np.ndarray:
            pts = as_points(h, base.dim)
            return base(pts) * weight(pts)

        return SampledDistribution(density, self.degree, self.dim, self.support, name or self.name)

    def integrate(
        self,
        g: Callable[[np.ndarray], np.ndarray],
        r_max: float,
        *,
        breakpoints: Sequence[float] = (),
        tol: float = 1e-10,
        exclusion: float | None = None,
    ) -> PairResult:
        """``int t(h) g(h) dh``, or over ``|h| > exclusion`` when given."""
        def integrand(pts: np.ndarray) -> np.ndarray:
            return self(pts) * g(pts)

        return integrate_singular(
            integrand,
            self.dim,
            r_max,
            support=self.support,
            tail_power=None if exclusion is not None else "auto",
            breakpoints=breakpoints,
            tol=tol,
            r_min=exclusion if exclusion is not None else INNER_RADIUS,
        )

    def pair(self, phi: TestLike, tol: float = 1e-9) -> PairResult:
        return self.integrate(phi, phi.support_radius, tol=tol)


@dataclass(frozen=True)
class PointMass:
    """``coef * d^alpha delta_0`` acting by ``(-1)^{|alpha|} coef d^alpha phi(0)``."""

    alpha: tuple[int, ...] = (0,)
    coef: float = 1.0

    @property
    def dim(self) -> int:
        return len(self.alpha)

    @property
    def degree(self) -> float:
        return -float(self.dim + sum(self.alpha))

    def pair(self, phi: TestLike, tol: float = 1e-9) -> PairResult:
        value = phi.derivative(self.alpha, np.zeros((1, self.dim)))[0]
        return PairResult((-1) ** sum(self.alpha) * self.coef * float(value), 0.0)

    def scaled(self, lam: float) -> "PointMass":
        return PointMass(self.alpha, self.coef * lam ** (-self.dim - sum(self.alpha)))


@dataclass(frozen=True)
class DistributionSum:
    """Finite linear combination of objects with a ``pair`` method."""

    parts: tuple[tuple[float, object], ...]

    @property
    def dim(self) -> int:
        return self.parts[0][1].dim

    def pair(self, phi: TestLike, tol: float = 1e-9) -> PairResult:
        value, err, div = 0.0, 0.0, False
        for c, part in self.parts:
            res = part.pair(phi, tol)
            value += c * float(res.value)
            err += abs(c) * res.error
            div = div or res.diverged
        return PairResult(value, err, div)


def pair(t, phi: TestLike, tol: float = 1e-9) -> PairResult:
    """``<t, phi>`` for any distribution-like object."""
    return t.pair(phi, tol)


def scale_pair(t, phi: TestLike, lam: float, tol: float = 1e-9) -> PairResult:
    """``<t_lam, phi> = lam^{-d} <t, phi(./lam)>``."""
    if not 0.0 < lam <= 1.0:
        raise ValueError("scaling parameter must lie in (0, 1]")
    if hasattr(t, "scaled"):
        return t.scaled(lam).pair(phi, tol)
    res = t.pair(Dilated(phi, 1.0 / lam), tol)
    return PairResult(lam ** (-t.dim) * res.value, lam ** (-t.dim) * res.error, res.diverged)


# ---------------------------------------------------------------------------
# Scaling degree
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScalingDegree:
    """Regression of ``log |<t_lam, phi>|`` against ``log lam``.

    ``slope`` is the smallest slope over probes; ``log_correction`` is set when
    the model ``lam^s (c0 + c1 log lam)`` fits markedly better than a pure
    power for some probe, in which case ``slope`` is the exponent ``s`` of
    that model.
    """

    slope: float
    r_squared: float
    confident: bool
    log_correction: bool
    per_probe: tuple[float, ...]


def _fit_power(loglam: np.ndarray, logv: np.ndarray) -> tuple[float, float]:
    slope, intercept = np.polyfit(loglam, logv, 1)
    pred = slope * loglam + intercept
    ss_res = float(np.sum((logv - pred) ** 2))
    ss_tot = float(np.sum((logv - logv.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(slope), r2


def _fit_power_log(loglam: np.ndarray, values: np.ndarray, guess: float) -> tuple[float, float, float]:
    """Best ``s`` for ``v = lam^s (c0 + c1 log lam)``; returns ``(s, rel_resid, c1/c0 weight)``."""
    best = (guess, np.inf, 0.0)
    for s in np.linspace(guess - 0.5, guess + 0.5, 1001):
        design = np.stack([np.ones_like(loglam), loglam], axis=1) * np.exp(s * loglam)[:, None]
        coef, *_ = np.linalg.lstsq(design, values, rcond=None)
        rel = float(np.max(np.abs(design @ coef - values) / np.abs(values)))
        if rel < best[1]:
            best = (float(s), rel, float(abs(coef[1]) / max(abs(coef[0]), abs(coef[1]), 1e-300)))
    return best


def scaling_degree(
    t,
    probes: Sequence[TestLike],
    lam_grid: Sequence[float] | None = None,
    r2_threshold: float = 0.999,
    tol: float = 1e-11,
) -> ScalingDegree:
    """Estimate the scaling degree from the decay of ``<t_lam, phi>`` as ``lam -> 0``."""
    lams = np.geomspace(1e-4, 1.0, 40) if lam_grid is None else np.asarray(lam_grid, dtype=float)
    loglam = np.log(lams)
    slopes, r2s, logflags = [], [], []
    for phi in probes:
        vals = np.array([float(scale_pair(t, phi, lam, tol).value) for lam in lams])
        if np.any(vals == 0) or not np.all(np.isfinite(vals)):
            raise ValueError(f"pairing vanished or diverged for probe {getattr(phi, 'name', phi)}")
        slope, r2 = _fit_power(loglam, np.log(np.abs(vals)))
        s_log, rel, weight = _fit_power_log(loglam, vals, round(slope))
        pure = np.exp(np.polyval(np.polyfit(loglam, np.log(np.abs(vals)), 1), loglam))
        pure_rel = float(np.max(np.abs(pure - np.abs(vals)) / np.abs(vals)))
        if rel < 1e-6 and weight > 1e-3 and pure_rel > 100 * rel:
            slopes.append(s_log)
            logflags.append(True)
            r2 = 1.0 - rel
        else:
            slopes.append(slope)
            logflags.append(False)
        r2s.append(r2)
    k = int(np.argmin(slopes))
    return ScalingDegree(
        slope=float(slopes[k]),
        r_squared=float(min(r2s)),
        confident=bool(min(r2s) >= r2_threshold),
        log_correction=bool(any(logflags)),
        per_probe=tuple(float(s) for s in slopes),
    )


# ---------------------------------------------------------------------------
# Euler vector fields
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EulerField:
    """``rho = h^j d_{h^j} + h^i A_i^j d_{x^j} + h^i h^j B_ij^k d_{h^k}`` on ``R^n x R^d``.

    ``A(x, h)`` returns an ``(d, n)`` array and ``B(x, h)`` a ``(d, d, d)`` array;
    both default to zero, giving the standard field ``h . d_h``.
    """

    n: int = 0
    d: int = 1
    A: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None
    B: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None

    def vector(self, x: np.ndarray, h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        x = np.asarray(x, dtype=float)
        h = np.asarray(h, dtype=float)
        vx = np.zeros(self.n)
        vh = h.copy()
        if self.A is not None:
            vx = vx + h @ np.asarray(self.A(x, h))
        if self.B is not None:
            vh = vh + np.einsum("i,j,ijk->k", h, h, np.asarray(self.B(x, h)))
        return vx, vh

    def defect(self, x: np.ndarray, h: np.ndarray) -> float:
        """``max_k |rho(h^k) - h^k|``; an Euler field makes this ``O(|h|^2)``."""
        _, vh = self.vector(x, h)
        return float(np.max(np.abs(vh - np.asarray(h, dtype=float))))

    def check(self, samples: int = 50, seed: int = 0) -> float:
        """Largest ratio ``defect / |h|^2`` over random points with shrinking ``h``."""
        rng = np.random.default_rng(seed)
        worst = 0.0
        for _ in range(samples):
            x = rng.uniform(-1, 1, self.n)
            direction = rng.normal(size=self.d)
            direction /= np.linalg.norm(direction)
            for scale in (1e-1, 1e-2, 1e-3):
                h = scale * direction
                worst = max(worst, self.defect(x, h) / scale**2)
        return worst

    def flow(self, x: np.ndarray, h: np.ndarray, log_lambda: float, rtol: float = 1e-10) -> tuple[np.ndarray, np.ndarray]:
        """Point reached after flowing for time ``log_lambda`` along ``rho``."""
        y0 = np.concatenate([np.asarray(x, dtype=float), np.asarray(h, dtype=float)])

        def rhs(_t: float, y: np.ndarray) -> np.ndarray:
            vx, vh = self.vector(y[: self.n], y[self.n :])
            return np.concatenate([vx, vh])

        sol = solve_ivp(rhs, (0.0, log_lambda), y0, rtol=rtol, atol=rtol * 1e-2)
        end = sol.y[:, -1]
        return end[: self.n], end[self.n :]
