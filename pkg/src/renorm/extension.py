"""Extension of weakly homogeneous distributions across the origin.

The extension with cutoff ``chi`` and subtraction order ``m`` is

    <Rt, phi> = <t chi, I_m phi> + <t (1 - chi), phi>,

where ``I_m phi`` is the Taylor remainder of ``phi`` at the origin.  The same
number is the ``eps -> 0`` limit of ``<t (1 - chi_eps), phi> - c_eps`` with
the local counterterm ``c_eps = <t (chi - chi_eps), P_m phi>``; both routes
are implemented and compared.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import sympy as sp

from ._numerics import extrapolate
from .dist_core import (
    CutoffPair,
    PairResult,
    PointMass,
    SampledDistribution,
    TestFunction,
    TestLike,
    as_points,
    multi_indices,
    scaling_degree,
    taylor_polynomial,
    taylor_remainder,
)

__all__ = [
    "AffineField",
    "DegreeDemotionWarning",
    "DegreeMismatchError",
    "DualValue",
    "ExtendedDistribution",
    "LocalCounterterm",
    "NonLocalDifferenceError",
    "NotTangentError",
    "ambiguity",
    "anomaly",
    "anomaly_direct",
    "extend",
    "extension_difference_chi",
    "fit_counterterm",
    "residue_d",
    "residue_d_direct",
    "subtraction_order",
]


class DegreeDemotionWarning(UserWarning):
    """``s + d`` is a nonpositive integer: the extension loses a logarithm."""


class DegreeMismatchError(ValueError):
    pass


class NonLocalDifferenceError(ValueError):
    """A difference of extensions is not a combination of derivatives of delta."""


class NotTangentError(ValueError):
    pass


def subtraction_order(s: float, d: int) -> int | None:
    """``m`` with ``-m - 1 < s + d <= -m``, or ``None`` when ``s + d > 0``."""
    total = s + d
    if total > 0:
        return None
    return int(math.floor(-total + 1e-12))


def _is_integer(x: float) -> bool:
    return abs(x - round(x)) < 1e-12


def _off_origin_probes(dim: int) -> list[TestFunction]:
    centers = [2.0, 1.5] if dim == 1 else [(2.0, 0.0), (-0.5, 1.8)]
    return [TestFunction.bump(c, 0.9, dim=dim, name=f"annulus{k}") for k, c in enumerate(centers)]


# ---------------------------------------------------------------------------
# Extended distributions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExtendedDistribution:
    """``Rt`` for a sampled ``t`` with cutoff ``cutoff`` and subtraction order ``order``."""

    base: SampledDistribution
    cutoff: CutoffPair
    order: int | None
    degree: float
    log_demoted: bool = False

    @property
    def dim(self) -> int:
        return self.base.dim

    def _integrand(self, phi: TestLike):
        chi = self.cutoff.chi
        if self.order is None:
            return phi
        rem = taylor_remainder(phi, self.order)

        def g(pts: np.ndarray) -> np.ndarray:
            c = chi(pts)
            return c * rem(pts) + (1.0 - c) * phi(pts)

        return g

    def pair(self, phi: TestLike, tol: float = 1e-10) -> PairResult:
        r_max = max(self.cutoff.b, phi.support_radius)
        return self.base.integrate(
            self._integrand(phi), r_max, breakpoints=self.cutoff.breakpoints, tol=tol
        )

    def counterterm(self, phi: TestLike, eps: float, tol: float = 1e-11) -> float:
        """``c_eps(phi) = <t (chi - chi_eps), P_m phi>``."""
        if self.order is None:
            return 0.0
        inner = self.cutoff.scaled(1.0 / eps)
        poly = taylor_polynomial(phi, self.order)

        def g(pts: np.ndarray) -> np.ndarray:
            return (self.cutoff.chi(pts) - inner.chi(pts)) * poly(pts)

        return float(
            self.base.integrate(
                g,
                self.cutoff.b,
                breakpoints=(inner.a, inner.b, self.cutoff.a),
                tol=tol,
                exclusion=inner.a,
            ).value
        )

    def regularized(self, phi: TestLike, eps: float, tol: float = 1e-11) -> float:
        """``<t (1 - chi_eps), phi> - c_eps(phi)``."""
        inner = self.cutoff.scaled(1.0 / eps)

        def g(pts: np.ndarray) -> np.ndarray:
            return (1.0 - inner.chi(pts)) * phi(pts)

        raw = self.base.integrate(
            g,
            max(self.cutoff.b, phi.support_radius),
            breakpoints=(inner.a, inner.b, self.cutoff.a, self.cutoff.b),
            tol=tol,
            exclusion=inner.a,
        ).value
        return float(raw) - self.counterterm(phi, eps, tol)

    def limit_value(self, phi: TestLike, levels: Sequence[int] = range(5, 17)) -> PairResult:
        """``eps -> 0`` limit of :meth:`regularized` by extrapolation in ``eps = 2^-k``."""
        eps = np.array([2.0**-k for k in levels])
        vals = np.array([self.regularized(phi, e) for e in eps])
        rate = self.degree + self.dim + (self.order if self.order is not None else -1) + 1
        res = extrapolate(eps, vals, [rate, rate + 1, rate + 2])
        return PairResult(res.value, abs(res.value - vals[-1]) * 1e-3 + res.residual, False)


def extend(
    t: SampledDistribution,
    s: float | None = None,
    cutoff: CutoffPair | None = None,
    *,
    validate: bool = True,
    degree_tol: float = 0.1,
) -> ExtendedDistribution:
    """Extend ``t`` across the origin.

    ``s`` defaults to ``t.degree``.  With ``validate`` the degree is checked
    against the measured scaling of ``t`` on probes supported off the origin.
    """
    s = t.degree if s is None else float(s)
    cutoff = cutoff or CutoffPair(dim=t.dim)
    if cutoff.dim != t.dim:
        raise ValueError("cutoff dimension does not match the distribution")
    if validate:
        measured = scaling_degree(t, _off_origin_probes(t.dim), np.geomspace(0.05, 1.0, 12))
        if abs(measured.slope - s) > degree_tol and measured.slope < s:
            raise DegreeMismatchError(f"claimed degree {s} but measured {measured.slope:.4f}")
    m = subtraction_order(s, t.dim)
    demoted = m is not None and _is_integer(s + t.dim)
    if demoted:
        warnings.warn(
            f"s + d = {s + t.dim:g} is a nonpositive integer; the extension scales with a logarithm",
            DegreeDemotionWarning,
            stacklevel=2,
        )
    return ExtendedDistribution(t, cutoff, m, s, demoted)


# ---------------------------------------------------------------------------
# Ambiguities and counterterms
# ---------------------------------------------------------------------------


def ambiguity(t, cutoff: CutoffPair, m: int | None, phi: TestLike, tol: float = 1e-10) -> PairResult:
    """``A t(phi) = <t chi, P_m phi>``; zero when there is no subtraction."""
    if m is None:
        return PairResult(0.0, 0.0)
    if isinstance(t, PointMass):
        # chi is identically 1 near the origin, so only the jet of P_m phi matters
        if sum(t.alpha) > m:
            return PairResult(0.0, 0.0)
        return t.pair(phi)
    poly = taylor_polynomial(phi, m)

    def g(pts: np.ndarray) -> np.ndarray:
        return cutoff.chi(pts) * poly(pts)

    return t.integrate(g, cutoff.b, breakpoints=cutoff.breakpoints, tol=tol)


@dataclass(frozen=True)
class DualValue:
    """A quantity evaluated by a closed formula and by direct computation."""

    formula: float
    direct: float

    @property
    def discrepancy(self) -> float:
        return abs(self.formula - self.direct)


def extension_difference_chi(
    t: SampledDistribution,
    s: float | None,
    cutoff1: CutoffPair,
    cutoff2: CutoffPair,
    phi: TestLike,
    tol: float = 1e-11,
) -> DualValue:
    """``(R^1 - R^2) t (phi)`` as ``<t (chi2 - chi1), P_m phi>`` and as a difference of extensions."""
    s = t.degree if s is None else s
    m = subtraction_order(s, t.dim)
    e1 = ExtendedDistribution(t, cutoff1, m, s)
    e2 = ExtendedDistribution(t, cutoff2, m, s)
    direct = float(e1.pair(phi, tol).value) - float(e2.pair(phi, tol).value)
    if m is None:
        return DualValue(0.0, direct)
    poly = taylor_polynomial(phi, m)

    def g(pts: np.ndarray) -> np.ndarray:
        return (cutoff2.chi(pts) - cutoff1.chi(pts)) * poly(pts)

    lo = min(cutoff1.a, cutoff2.a)
    formula = t.integrate(
        g,
        max(cutoff1.b, cutoff2.b),
        breakpoints=(cutoff1.a, cutoff1.b, cutoff2.a, cutoff2.b),
        tol=tol,
        exclusion=lo,
    ).value
    return DualValue(float(formula), direct)


@dataclass(frozen=True)
class LocalCounterterm:
    """``sum_alpha c_alpha d^alpha delta_0`` with the fit residual that certifies it."""

    terms: tuple[tuple[tuple[int, ...], float], ...]
    residual: float = 0.0

    def coefficient(self, alpha: Sequence[int]) -> float:
        return dict(self.terms).get(tuple(alpha), 0.0)

    @property
    def max_order(self) -> int:
        nonzero = [sum(a) for a, c in self.terms if abs(c) > 1e-12]
        return max(nonzero, default=-1)

    def pair(self, phi: TestLike, tol: float = 1e-9) -> PairResult:
        return PairResult(sum(float(PointMass(a, c).pair(phi).value) for a, c in self.terms), 0.0)


def default_probes(dim: int = 1, count: int = 8) -> list[TestFunction]:
    """Gaussian probes with varied centres, widths and polynomial parts."""
    rng = np.random.default_rng(1234 + dim)
    probes = []
    for k in range(count):
        center = rng.uniform(-0.6, 0.6, dim)
        width = rng.uniform(0.6, 1.4)
        coeffs = [1.0] + list(rng.uniform(-1, 1, 2))
        if dim == 1:
            probes.append(TestFunction.gaussian(float(center[0]), width, coeffs, name=f"probe{k}"))
        else:
            poly = f"1 + {coeffs[1]:.6f}*v0 + {coeffs[2]:.6f}*v1"
            probes.append(TestFunction.gaussian(tuple(center), width, poly, dim=dim, name=f"probe{k}"))
    return probes


def fit_counterterm(
    first,
    second,
    m: int,
    probes: Sequence[TestLike] | None = None,
    tol: float = 1e-7,
) -> LocalCounterterm:
    """Fit ``first - second = sum_{|alpha| <= m} c_alpha d^alpha delta``.

    The fit is least squares over ``probes`` against the columns
    ``(-1)^{|alpha|} d^alpha phi(0)``.  A residual above ``tol`` (relative
    to the size of the differences, floored at 1) raises
    :class:`NonLocalDifferenceError`.
    """
    dim = first.dim
    probes = list(probes) if probes is not None else default_probes(dim, max(8, 3 * (m + 1) ** dim))
    alphas = [a for k in range(m + 1) for a in multi_indices(dim, k)]
    zero = np.zeros((1, dim))
    rows, rhs = [], []
    for phi in probes:
        rows.append([(-1) ** sum(a) * float(phi.derivative(a, zero)[0]) for a in alphas])
        rhs.append(float(first.pair(phi).value) - float(second.pair(phi).value))
    design, target = np.array(rows), np.array(rhs)
    coef, *_ = np.linalg.lstsq(design, target, rcond=None)
    residual = float(np.max(np.abs(design @ coef - target)))
    scale = max(1.0, float(np.max(np.abs(target))))
    if residual > tol * scale:
        raise NonLocalDifferenceError(
            f"difference not supported at the origin: residual {residual:.3e} with |alpha| <= {m}"
        )
    coef = np.where(np.abs(coef) < 10 * tol * scale, 0.0, coef)
    return LocalCounterterm(tuple((a, float(c)) for a, c in zip(alphas, coef)), residual)


# ---------------------------------------------------------------------------
# Residues and anomalies
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AffineField:
    """Vector field ``X(h) = c + A h`` on ``R^d``."""

    c: tuple[float, ...]
    A: tuple[tuple[float, ...], ...]

    @classmethod
    def translation(cls, dim: int = 1, axis: int = 0) -> "AffineField":
        c = [0.0] * dim
        c[axis] = 1.0
        return cls(tuple(c), tuple((0.0,) * dim for _ in range(dim)))

    @classmethod
    def from_arrays(cls, c: Sequence[float], A: Sequence[Sequence[float]]) -> "AffineField":
        return cls(tuple(float(x) for x in c), tuple(tuple(float(x) for x in row) for row in A))

    @property
    def dim(self) -> int:
        return len(self.c)

    @property
    def divergence(self) -> float:
        return float(np.trace(np.array(self.A)))

    @property
    def vanishes_at_origin(self) -> bool:
        return not any(self.c)

    def __call__(self, h: np.ndarray) -> np.ndarray:
        pts = as_points(h, self.dim)
        return np.array(self.c)[None, :] + pts @ np.array(self.A).T

    def apply(self, phi: TestFunction) -> TestFunction:
        """``X . grad phi`` as a closed-form test function."""
        hs = phi.symbols
        comps = [
            sp.Float(self.c[i]) + sum(sp.Float(self.A[i][j]) * hs[j] for j in range(self.dim))
            for i in range(self.dim)
        ]
        expr = sum(comps[i] * sp.diff(phi.expr, hs[i]) for i in range(self.dim))
        return TestFunction(expr, phi.dim, phi.support_radius, f"X.grad {phi.name}")

    def lie_derivative(self, t: SampledDistribution) -> SampledDistribution:
        """``L_X t = X . grad t + (div X) t`` off the origin, for a density ``t``."""
        if t.gradient is None:
            raise ValueError(f"{t.name} carries no gradient")
        div = self.divergence
        field_ = self

        def density(h: np.ndarray) -> np.ndarray:
            pts = as_points(h, field_.dim)
            grad = np.asarray(t.gradient(pts))
            return np.sum(field_(pts) * grad, axis=1) + div * t(pts)

        degree = t.degree if self.vanishes_at_origin else t.degree - 1.0
        return SampledDistribution(density, degree, t.dim, t.support, f"L_X {t.name}")


def _as_affine(X: AffineField | None, dim: int) -> AffineField:
    return AffineField.translation(dim) if X is None else X


def anomaly(
    t: SampledDistribution,
    X: AffineField | None,
    cutoff: CutoffPair,
    phi: TestFunction,
    *,
    require_tangent: bool = False,
    tol: float = 1e-11,
) -> float:
    """``(L_X R - R L_X) t (phi)`` from the cutoff-gradient formula.

    The value is ``-<t (X . grad chi), P_{m'} phi>`` plus the polynomial
    defect ``<t chi, P_m (X . grad phi) - X . grad P_{m'} phi>``, where ``m``
    and ``m'`` are the subtraction orders of ``t`` and ``L_X t``.  The
    defect vanishes unless ``X`` has both a constant and a linear part.
    """
    X = _as_affine(X, t.dim)
    if require_tangent and not X.vanishes_at_origin:
        raise NotTangentError("X does not vanish at the singular point")
    m = subtraction_order(t.degree, t.dim)
    lie_degree = t.degree if X.vanishes_at_origin else t.degree - 1.0
    m_lie = subtraction_order(lie_degree, t.dim)
    if m_lie is None:
        return 0.0
    poly_lie = taylor_polynomial(phi, m_lie)

    def boundary(pts: np.ndarray) -> np.ndarray:
        along = np.sum(X(pts) * cutoff.grad_chi(pts), axis=1)
        return along * poly_lie(pts)

    value = -float(
        t.integrate(boundary, cutoff.b, breakpoints=cutoff.breakpoints, tol=tol, exclusion=cutoff.a).value
    )
    if not X.vanishes_at_origin and any(any(row) for row in X.A):
        moved = taylor_polynomial(X.apply(phi), m) if m is not None else None
        lie_poly = X.apply(
            TestFunction(
                sum(
                    sp.Float(c) * sp.prod([s**k / sp.factorial(k) for s, k in zip(phi.symbols, a)])
                    for a, c in poly_lie.coefficients.items()
                ),
                phi.dim,
                phi.support_radius,
            )
        )

        def defect(pts: np.ndarray) -> np.ndarray:
            base = moved(pts) if moved is not None else 0.0
            return cutoff.chi(pts) * (base - lie_poly(pts))

        value += float(t.integrate(defect, cutoff.b, breakpoints=cutoff.breakpoints, tol=tol).value)
    return value


def anomaly_direct(
    t: SampledDistribution,
    X: AffineField | None,
    cutoff: CutoffPair,
    phi: TestFunction,
    lie: SampledDistribution | None = None,
    tol: float = 1e-11,
) -> float:
    """``-R t (X . grad phi) - R(L_X t)(phi)`` evaluated with two extensions."""
    X = _as_affine(X, t.dim)
    lie = X.lie_derivative(t) if lie is None else lie
    rt = ExtendedDistribution(t, cutoff, subtraction_order(t.degree, t.dim), t.degree)
    rl = ExtendedDistribution(lie, cutoff, subtraction_order(lie.degree, t.dim), lie.degree)
    return -float(rt.pair(X.apply(phi), tol).value) - float(rl.pair(phi, tol).value)


def residue_d(t: SampledDistribution, cutoff: CutoffPair, phi: TestFunction, tol: float = 1e-11) -> float:
    """``(d R - R d) t (phi)`` for a 0-form on the line, from the formula."""
    if t.dim != 1:
        raise ValueError("residue_d is the one-dimensional scalar case")
    return anomaly(t, None, cutoff, phi, tol=tol)


def residue_d_direct(t: SampledDistribution, cutoff: CutoffPair, phi: TestFunction, tol: float = 1e-11) -> float:
    """``-R t (phi') - R(t')(phi)`` with ``t'`` taken off the origin."""
    if t.dim != 1:
        raise ValueError("residue_d is the one-dimensional scalar case")
    return anomaly_direct(t, None, cutoff, phi, tol=tol)


@dataclass(frozen=True)
class CountertermReport:
    """One row of the extension report."""

    phi_id: str
    raw: float
    extended: float
    counterterm_fit: float
    residual: float
    extra: dict = field(default_factory=dict)
