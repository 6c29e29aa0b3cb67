"""Meromorphic regularization of Fuchsian symbols on the line.

For a term ``c h^a (log h)^j`` (on the half line, or its even or odd
extension) and a cutoff ``chi`` with ``psi = -rho chi``,

    <T^mu, phi> = int_0^1 dlam/lam lam^mu <T psi(./lam), phi>
                = c sum_i binom(j, i) int_0^1 lam^(mu+a) (log lam)^i g_{j-i}(lam) dlam,

with ``g_q(lam) = int u^a (log u)^q psi(u) phi_p(lam u) du`` and ``phi_p`` the
parity-adapted test function.  Subtracting the first ``K`` Taylor terms of
``g_q`` continues the integral to ``Re mu > -(a + 1) - K``; the subtracted
terms are explicit poles at ``mu = -(a + 1) - k`` of order ``i + 1``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Sequence

import numpy as np
from scipy.special import comb

from ._numerics import adaptive_gl, extrapolate, gauss_legendre
from .dist_core import (
    CutoffPair,
    PairResult,
    SampledDistribution,
    TestFunction,
    TestLike,
    as_points,
    taylor_remainder,
)

__all__ = [
    "FuchsianSymbol",
    "FuchsianTerm",
    "LaurentSeries",
    "NonPolynomialFlowError",
    "PoleProximityError",
    "RGFit",
    "RadiusError",
    "RieszExtension",
    "laurent",
    "laurent_scale_derivative",
    "mellin",
    "mellin_direct",
    "pole_table",
    "residue_rho",
    "residue_rho_direct",
    "rg_flow",
    "riesz_extend",
]

POLE_GUARD = 1e-6
GRID_ORDER = 20
GRID_PANEL = 0.5


class PoleProximityError(ValueError):
    pass


class RadiusError(ValueError):
    """Laurent coefficients failed to stabilize on the requested contour."""


class NonPolynomialFlowError(ValueError):
    pass


@dataclass(frozen=True)
class FuchsianTerm:
    """``coef * h^exponent * (log |h|)^log_power`` with a parity.

    ``parity`` is ``"half"`` (times ``H(h)``), ``"even"`` (``|h|^a``) or
    ``"odd"`` (``sign(h) |h|^a``).
    """

    coef: float
    exponent: float
    log_power: int = 0
    parity: str = "half"

    def __post_init__(self) -> None:
        if self.parity not in ("half", "even", "odd"):
            raise ValueError(f"unknown parity {self.parity!r}")
        if self.log_power < 0:
            raise ValueError("log power must be non-negative")

    def density(self, h: np.ndarray) -> np.ndarray:
        h = np.asarray(h, dtype=float).reshape(-1)
        r = np.abs(h)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = self.coef * r**self.exponent
            if self.log_power:
                out = out * np.log(r) ** self.log_power
        if self.parity == "half":
            out = np.where(h > 0, out, 0.0)
        elif self.parity == "odd":
            out = np.sign(h) * out
        return np.where(h == 0, 0.0, out)

    def gradient(self, h: np.ndarray) -> np.ndarray:
        h = np.asarray(h, dtype=float).reshape(-1)
        r = np.abs(h)
        a, j = self.exponent, self.log_power
        with np.errstate(divide="ignore", invalid="ignore"):
            logr = np.log(r)
            dr = a * r ** (a - 1) * logr**j
            if j:
                dr = dr + j * r ** (a - 1) * logr ** (j - 1)
        dr = self.coef * dr
        if self.parity == "half":
            out = np.where(h > 0, dr, 0.0)
        elif self.parity == "even":
            out = np.sign(h) * dr
        else:
            out = dr
        return out.reshape(-1, 1)

    def poles(self, lowest: float) -> list[float]:
        """Candidate pole locations ``-(a + 1) - k`` above ``lowest``."""
        first = -(self.exponent + 1.0)
        return [first - k for k in range(int(max(0, math.floor(first - lowest))) + 1) if first - k >= lowest]


@dataclass(frozen=True)
class FuchsianSymbol:
    """Finite sum of exactly scaling terms plus an optional remainder density.

    A term ``h^a log^j h`` satisfies ``(rho - a)^{j+1} T = 0``; its degree
    ``a`` plays the role of the eigenvalue of the degree matrix.  The
    remainder, if present, must scale with a degree above every term.
    """

    terms: tuple[FuchsianTerm, ...]
    remainder: SampledDistribution | None = None
    cutoff: CutoffPair = field(default_factory=CutoffPair)
    name: str = "T"

    @classmethod
    def single(cls, exponent: float, coef: float = 1.0, log_power: int = 0, parity: str = "half", cutoff: CutoffPair | None = None) -> "FuchsianSymbol":
        term = FuchsianTerm(coef, exponent, log_power, parity)
        tag = {"half": "H(h)", "even": "|h|", "odd": "sgn|h|"}[parity]
        return cls((term,), None, cutoff or CutoffPair(), f"{coef:g}*{tag}^{exponent:g}" + (f"log^{log_power}" if log_power else ""))

    def with_cutoff(self, cutoff: CutoffPair) -> "FuchsianSymbol":
        return FuchsianSymbol(self.terms, self.remainder, cutoff, self.name)

    @property
    def spectrum(self) -> tuple[float, ...]:
        return tuple(sorted({t.exponent for t in self.terms}))

    @property
    def jordan_size(self) -> int:
        return max((t.log_power + 1 for t in self.terms), default=1)

    def density(self, h: np.ndarray) -> np.ndarray:
        out = sum(t.density(h) for t in self.terms)
        if self.remainder is not None:
            out = out + self.remainder(as_points(h, 1))
        return out

    def as_distribution(self) -> SampledDistribution:
        terms = self.terms

        def gradient(h: np.ndarray) -> np.ndarray:
            return sum(t.gradient(h) for t in terms)

        support = "h>0" if all(t.parity == "half" for t in terms) and self.remainder is None else "all"
        return SampledDistribution(
            self.density, min(self.spectrum), 1, support, self.name,
            gradient if self.remainder is None else None,
        )

    def poles(self, lowest: float = -4.0) -> list[float]:
        found = sorted({round(p, 12) for t in self.terms for p in t.poles(lowest)}, reverse=True)
        return found

    def check_scaling(self, lams: Sequence[float] = (0.5, 0.25)) -> float:
        """Largest deviation of ``<(T_k)_lam, phi> lam^{-a}`` from a log-polynomial in ``log lam``.

        Pure powers must give a constant; log terms are compared against
        their exact expansion ``(log lam + log h)^j``.
        """
        h = np.linspace(0.3, 2.5, 23)
        worst = 0.0
        for t in self.terms:
            for lam in lams:
                scaled = t.density(lam * h)
                expected = t.coef * lam**t.exponent * h**t.exponent * (np.log(lam) + np.log(h)) ** t.log_power
                worst = max(worst, float(np.max(np.abs(scaled - expected))))
        return worst


# ---------------------------------------------------------------------------
# Mellin transform
# ---------------------------------------------------------------------------


def _parity_adapted(phi: TestFunction, parity: str) -> TestFunction:
    if parity == "half":
        return phi
    sign = 1 if parity == "even" else -1
    expr = phi.expr + sign * phi.reflected().expr
    return TestFunction(expr, 1, phi.support_radius, f"{phi.name}[{parity}]")


def _u_nodes(cutoff: CutoffPair, panels: int = 6, order: int = 40) -> tuple[np.ndarray, np.ndarray]:
    x, w = gauss_legendre(order)
    edges = np.linspace(cutoff.a, cutoff.b, panels + 1)
    mids, halves = 0.5 * (edges[1:] + edges[:-1]), 0.5 * (edges[1:] - edges[:-1])
    u = (mids[:, None] + halves[:, None] * x[None, :]).ravel()
    wt = (halves[:, None] * w[None, :]).ravel()
    return u, wt


@dataclass(frozen=True)
class _TermPairing:
    """Precomputed pieces of ``<T^mu, phi>`` for one term."""

    term: FuchsianTerm
    phi: TestFunction
    cutoff: CutoffPair
    cache: dict = field(default_factory=dict, compare=False, repr=False, hash=False)

    @cached_property
    def adapted(self) -> TestFunction:
        return _parity_adapted(self.phi, self.term.parity)

    @cached_property
    def nodes(self) -> tuple[np.ndarray, np.ndarray]:
        u, w = _u_nodes(self.cutoff)
        return u, w * self.cutoff.psi(u) * u**self.term.exponent

    def moment(self, k: int, q: int) -> float:
        """``int u^(a+k) (log u)^q psi(u) du``."""
        u, w = self.nodes
        return float(np.sum(w * u**k * np.log(u) ** q))

    def taylor(self, k: int) -> float:
        return self.adapted.jet(k)[(k,)] / math.factorial(k)

    def g_remainder(self, lam: np.ndarray, q: int, K: int) -> np.ndarray:
        """``int u^a (log u)^q psi(u) [I_{K-1} phi_p](lam u) du`` for each ``lam``."""
        u, w = self.nodes
        key = ("remainder", K)
        if key not in self.cache:
            self.cache[key] = self.adapted if K == 0 else taylor_remainder(self.adapted, K - 1)
        func = self.cache[key]
        vals = func((lam[:, None] * u[None, :]).ravel()).reshape(len(lam), len(u))
        return vals @ (w * np.log(u) ** q)

    def remainder_grid(self, q: int, K: int, depth: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Nodes ``s = log lam`` on ``[-depth, 0]``, weights, and ``g_remainder`` there.

        The table does not depend on ``mu``, so a whole contour reuses it.
        """
        key = ("grid", q, K, depth)
        if key not in self.cache:
            x, wx = gauss_legendre(GRID_ORDER)
            panels = int(math.ceil(depth / GRID_PANEL))
            edges = np.linspace(-depth, 0.0, panels + 1)
            mids, halves = 0.5 * (edges[1:] + edges[:-1]), 0.5 * (edges[1:] - edges[:-1])
            nodes = (mids[:, None] + halves[:, None] * x[None, :]).ravel()
            weights = (halves[:, None] * wx[None, :]).ravel()
            self.cache[key] = (nodes, weights, self.g_remainder(np.exp(nodes), q, K))
        return self.cache[key]


@lru_cache(maxsize=512)
def _pairing(term: FuchsianTerm, phi: TestFunction, cutoff: CutoffPair) -> _TermPairing:
    return _TermPairing(term, phi, cutoff)


def _pole_integral(z: complex, i: int) -> complex:
    """``int_0^1 lam^(z-1) (log lam)^i dlam = (-1)^i i! / z^(i+1)``."""
    return (-1) ** i * math.factorial(i) / z ** (i + 1)


def _grid_depth(p: float) -> float:
    """Depth in ``log lam`` where ``lam^p`` falls below 1e-17, rounded up to a multiple of 4."""
    return 4.0 * math.ceil(39.0 / p / 4.0)


def _term_mellin(tp: _TermPairing, mu: complex, K: int, depth: float | None = None) -> complex:
    a, j = tp.term.exponent, tp.term.log_power
    p = mu.real + a + 1.0 + K
    if p <= 0:
        raise ValueError("too few subtracted terms for this mu")
    depth = _grid_depth(p) if depth is None else depth
    total = 0j
    for i in range(j + 1):
        q = j - i
        binom = comb(j, i, exact=True)
        for k in range(K):
            total += binom * tp.taylor(k) * tp.moment(k, q) * _pole_integral(mu + a + k + 1.0, i)
        nodes, weights, g = tp.remainder_grid(q, K, depth)
        total += binom * np.sum(weights * np.exp((mu + a + 1.0) * nodes) * nodes**i * g)
    return tp.term.coef * total


def _guard(t: FuchsianSymbol, mu: complex) -> None:
    for term in t.terms:
        for pole in term.poles(mu.real - 1.0):
            if abs(mu - pole) < POLE_GUARD:
                raise PoleProximityError(f"mu = {mu} lies within {POLE_GUARD:g} of the pole {pole:g}")


def _subtractions(t: FuchsianSymbol, mu: complex, extra: int = 1) -> int:
    lowest = min(t.spectrum)
    return max(0, math.floor(-(mu.real + lowest + 1.0)) + 1 + extra) if t.terms else 0


def _remainder_mellin(t: FuchsianSymbol, phi: TestLike, mu: complex, tol: float) -> complex:
    if t.remainder is None:
        return 0j
    return _h_space_mellin(t.remainder, t.cutoff, phi, mu, tol)


def mellin(
    t: FuchsianSymbol,
    phi: TestFunction,
    mu: complex,
    *,
    subtract: int | None = None,
    depth: float | None = None,
    tol: float = 1e-12,
) -> complex:
    """``<T^mu, phi>`` by the continuation formula with ``subtract`` Taylor terms.

    The default number of subtractions makes the remainder integral
    absolutely convergent with margin; ``subtract=0`` is the raw
    ``lam``-integral and needs ``Re mu`` large enough.  ``depth`` fixes the
    ``log lam`` range of the remainder integral so that repeated calls share
    one tabulation.
    """
    mu = complex(mu)
    _guard(t, mu)
    K = _subtractions(t, mu) if subtract is None else subtract
    total = 0j
    for term in t.terms:
        total += _term_mellin(_pairing(term, phi, t.cutoff), mu, K, depth)
    return total + _remainder_mellin(t, phi, mu, tol)


def _h_space_mellin(density: SampledDistribution, cutoff: CutoffPair, phi: TestLike, mu: complex, tol: float) -> complex:
    """``int t(h) phi(h) |h|^mu K_mu(|h|) dh`` with ``K_mu(r) = int_r^inf s^(-mu-1) psi(s) ds``.

    Swapping the order of the ``lam`` and ``h`` integrals turns the Mellin
    regularization into multiplication by ``|h|^mu K_mu(|h|)``; ``K_mu`` is
    constant below ``a`` and zero above ``b``.
    """
    u, w = _u_nodes(cutoff, panels=12)
    weights = w * cutoff.psi(u) * u ** (-mu - 1.0)
    plateau = complex(np.sum(weights))

    def kernel(r: np.ndarray) -> np.ndarray:
        out = np.zeros(len(r), dtype=complex)
        out[r <= cutoff.a] = plateau
        mid = (r > cutoff.a) & (r < cutoff.b)
        if mid.any():
            # tail integral of the kernel from r to b by Gauss-Legendre on [r, b]
            x, wx = gauss_legendre(60)
            rm = r[mid]
            lo, hi = rm[:, None], cutoff.b
            s = 0.5 * (lo + hi) + 0.5 * (hi - lo) * x[None, :]
            vals = cutoff.psi(s.ravel()).reshape(s.shape) * s ** (-mu - 1.0)
            out[mid] = 0.5 * (hi - rm) * (vals @ wx)
        return out

    def g(pts: np.ndarray) -> np.ndarray:
        r = np.abs(pts[:, 0])
        with np.errstate(divide="ignore", invalid="ignore"):
            rmu = np.where(r > 0, r.astype(complex) ** mu, 0.0)
        return density(pts) * phi(pts) * rmu * kernel(r)

    support = density.support
    signs = (1.0,) if support == "h>0" else (1.0, -1.0)
    p = density.degree + 1.0 + mu.real
    if p <= 0:
        raise ValueError("the h-space Mellin integral diverges at this mu")
    r_min = math.exp(-38.0 / p)
    breaks = np.log(np.array([r_min, cutoff.a, (cutoff.a + cutoff.b) / 2, cutoff.b]))

    def integrand(s: np.ndarray) -> np.ndarray:
        r = np.exp(s)
        return r * sum(g((sgn * r).reshape(-1, 1)) for sgn in signs)

    return complex(adaptive_gl(integrand, breaks, tol=tol).value)


def mellin_direct(t: FuchsianSymbol, phi: TestFunction, mu: complex, tol: float = 1e-12) -> complex:
    """``<T^mu, phi>`` for ``Re mu`` large, from the ``h``-space kernel."""
    mu = complex(mu)
    _guard(t, mu)
    return _h_space_mellin(t.as_distribution(), t.cutoff, phi, mu, tol)


# ---------------------------------------------------------------------------
# Laurent series
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LaurentSeries:
    """Coefficients ``T^(k)`` of ``<T^mu, phi>`` around ``center``."""

    center: float
    radius: float
    points: int
    coefficients: dict[int, complex]
    probe: str = "phi"

    def __getitem__(self, k: int) -> complex:
        return self.coefficients.get(k, 0j)

    @property
    def pole_order(self) -> int:
        neg = [k for k, c in self.coefficients.items() if k < 0 and abs(c) > 1e-9]
        return -min(neg) if neg else 0

    def principal_part(self, mu: complex) -> complex:
        return sum(c * (mu - self.center) ** k for k, c in self.coefficients.items() if k < 0)

    def to_json(self) -> str:
        return json.dumps(
            {
                "center": self.center,
                "radius": self.radius,
                "points": self.points,
                "probe": self.probe,
                "coefficients": {str(k): [c.real, c.imag] for k, c in sorted(self.coefficients.items())},
            },
            indent=2,
        )


def _default_radius(t: FuchsianSymbol, center: float) -> float:
    others = [p for p in t.poles(center - 6.0) if abs(p - center) > 1e-9]
    gap = min((abs(p - center) for p in others), default=2.0)
    return 0.5 * gap


def laurent(
    t: FuchsianSymbol,
    phi: TestFunction,
    center: float = 0.0,
    radius: float | None = None,
    *,
    orders: Sequence[int] | None = None,
    points: int = 64,
    stable_tol: float = 1e-8,
    max_points: int = 1024,
) -> LaurentSeries:
    """Cauchy-integral Laurent coefficients on a circle of ``points`` nodes, doubled until stable."""
    radius = _default_radius(t, center) if radius is None else radius
    n_max = t.jordan_size
    orders = list(range(-n_max - 1, 3)) if orders is None else list(orders)
    K = _subtractions(t, complex(center - radius))
    depth = _grid_depth(center - radius + min(t.spectrum) + 1.0 + K)
    cache: dict[complex, complex] = {}

    def values(M: int) -> dict[int, complex]:
        theta = 2.0 * np.pi * (np.arange(M) + 0.5) / M
        z = radius * np.exp(1j * theta)
        f = []
        for zi in z:
            key = complex(round(zi.real, 15), round(zi.imag, 15))
            if key not in cache:
                cache[key] = mellin(t, phi, center + zi, subtract=K, depth=depth)
            f.append(cache[key])
        f = np.array(f)
        return {k: complex(np.mean(f * z ** (-k))) for k in orders}

    M = points
    current = values(M)
    while True:
        if 2 * M > max_points:
            raise RadiusError(f"coefficients not stable at radius {radius:g} with {M} points")
        refined = values(2 * M)
        change = max(abs(refined[k] - current[k]) for k in orders)
        scale = max(1.0, max(abs(v) for v in refined.values()))
        M *= 2
        current = refined
        if change < stable_tol * scale:
            break
    return LaurentSeries(center, radius, M, current, getattr(phi, "name", "phi"))


def pole_table(
    t: FuchsianSymbol,
    probes: Sequence[TestFunction],
    lowest: float = -3.0,
) -> list[dict]:
    """Rows ``(mu_pole, order, coeff_on_probe_j)`` for every candidate pole above ``lowest``.

    ``coeff`` is the residue ``T^(-1)`` on each probe.
    """
    rows = []
    for pole in t.poles(lowest):
        series = [laurent(t, phi, pole) for phi in probes]
        rows.append(
            {
                "mu_pole": pole,
                "order": max(s.pole_order for s in series),
                **{f"coeff_on_{s.probe}": s[-1].real for s in series},
            }
        )
    return rows


# ---------------------------------------------------------------------------
# Riesz extension, residues and the RG flow
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RieszExtension:
    """``R T = T^(0) + T (1 - chi)`` with ``T^(0)`` the constant Laurent term at 0."""

    symbol: FuchsianSymbol

    @property
    def dim(self) -> int:
        return 1

    def constant_term(self, phi: TestFunction) -> complex:
        return laurent(self.symbol, phi, 0.0)[0]

    def outer(self, phi: TestLike, tol: float = 1e-11) -> float:
        """``<T (1 - chi), phi>``."""
        cut = self.symbol.cutoff
        dist = self.symbol.as_distribution()

        def g(pts: np.ndarray) -> np.ndarray:
            return (1.0 - cut.chi(pts)) * phi(pts)

        return float(
            dist.integrate(g, max(cut.b, phi.support_radius), breakpoints=cut.breakpoints, tol=tol, exclusion=cut.a).value
        )

    def pair(self, phi: TestFunction, tol: float = 1e-10) -> PairResult:
        return PairResult(self.constant_term(phi).real + self.outer(phi), 0.0)

    def pair_by_limit(self, phi: TestFunction) -> float:
        """``mu -> 0`` limit of ``T^mu`` minus its poles, sampled at ``+-0.1``, ``+-0.05``, ``+-0.1i``, ``+-0.05i``.

        Averaging over ``+-mu`` leaves a power series in ``x = mu^2``
        (negative on the imaginary axis); the four averages are
        extrapolated to ``x = 0`` with a cubic.
        """
        series = laurent(self.symbol, phi, 0.0)

        def regular(mu: complex) -> complex:
            return mellin(self.symbol, phi, mu) - series.principal_part(mu)

        steps = (0.1, 0.05, 0.1j, 0.05j)
        xs = [(m * m).real for m in steps]
        avgs = [0.5 * (regular(m) + regular(-m)).real for m in steps]
        return float(extrapolate(xs, avgs, [1.0, 2.0, 3.0]).value) + self.outer(phi)


def riesz_extend(t: FuchsianSymbol) -> RieszExtension:
    return RieszExtension(t)


def residue_rho(t: FuchsianSymbol, phi: TestFunction) -> float:
    """``Res_rho T (phi) = T^(-1)(phi)``, the residue at ``mu = 0``."""
    return laurent(t, phi, 0.0)[-1].real


def _rho_of_symbol(t: FuchsianSymbol) -> list[tuple[float, FuchsianSymbol]]:
    """``rho T`` as a combination of symbols: ``rho(h^a log^j) = a h^a log^j + j h^a log^(j-1)``."""
    parts = []
    for term in t.terms:
        parts.append((term.exponent, FuchsianSymbol((term,), None, t.cutoff)))
        if term.log_power:
            lower = FuchsianTerm(term.coef * term.log_power, term.exponent, term.log_power - 1, term.parity)
            parts.append((1.0, FuchsianSymbol((lower,), None, t.cutoff)))
    return parts


def residue_rho_direct(t: FuchsianSymbol, phi: TestFunction) -> float:
    """``(rho R - R rho) T (phi)`` with ``<rho u, phi> = -<u, phi + h phi'>``."""
    if t.remainder is not None:
        raise ValueError("the direct residue path needs an exactly Fuchsian symbol")
    transported = phi.euler_transport()
    lhs = -riesz_extend(t).pair(transported).value
    rhs = sum(c * riesz_extend(s).pair(phi).value for c, s in _rho_of_symbol(t))
    return float(lhs - rhs)


@dataclass(frozen=True)
class RGFit:
    """Polynomial ``sum_k c_k (log ell)^k`` fitted to ``R^ell T (phi)``."""

    coefficients: tuple[float, ...]
    residual: float
    degree: int
    ells: tuple[float, ...]
    values: tuple[float, ...]

    @property
    def slope(self) -> float:
        return self.coefficients[1] if len(self.coefficients) > 1 else 0.0


def _riesz_at_scale(t: FuchsianSymbol, phi: TestFunction, ell: float) -> float:
    return riesz_extend(t.with_cutoff(t.cutoff.scaled(ell))).pair(phi).value


def rg_flow(
    t: FuchsianSymbol,
    phi: TestFunction,
    ells: Sequence[float] | None = None,
    degree: int | None = None,
    tol: float = 1e-6,
) -> RGFit:
    """Fit ``R^ell T (phi)`` as a polynomial in ``log ell``; the cutoff is ``chi(ell h)``.

    ``degree`` defaults to the Jordan size of the terms with a pole at 0.
    """
    ells = np.geomspace(1 / 8, 8, 13) if ells is None else np.asarray(ells, dtype=float)
    if degree is None:
        at_zero = [term for term in t.terms if any(abs(p) < 1e-12 for p in term.poles(-0.5))]
        degree = max((term.log_power + 1 for term in at_zero), default=0)
    values = np.array([_riesz_at_scale(t, phi, ell) for ell in ells])
    logs = np.log(ells)
    design = np.stack([logs**k for k in range(degree + 1)], axis=1)
    coef, *_ = np.linalg.lstsq(design, values, rcond=None)
    residual = float(np.max(np.abs(design @ coef - values)))
    if residual > tol * max(1.0, float(np.max(np.abs(values)))):
        raise NonPolynomialFlowError(f"degree-{degree} fit in log ell leaves residual {residual:.3e}")
    return RGFit(tuple(float(c) for c in coef), residual, degree, tuple(ells), tuple(values))


def laurent_scale_derivative(t: FuchsianSymbol, phi: TestFunction, k: int, ell: float = 1.0, step: float = 1e-2) -> tuple[float, float]:
    """``ell d/d ell`` of the ``k``-th coefficient against the ``(k-1)``-th, at scale ``ell``.

    For ``k = 0`` the constant term is the full ``R^ell T``, since the
    outer part ``T (1 - chi)`` moves with the cutoff too.
    """

    def coeff(scale: float, order: int) -> float:
        if order == 0:
            return _riesz_at_scale(t, phi, scale)
        return laurent(t.with_cutoff(t.cutoff.scaled(scale)), phi, 0.0)[order].real

    fd = (
        -coeff(ell * math.exp(2 * step), k)
        + 8 * coeff(ell * math.exp(step), k)
        - 8 * coeff(ell * math.exp(-step), k)
        + coeff(ell * math.exp(-2 * step), k)
    ) / (12 * step)
    return fd, coeff(ell, k - 1)
