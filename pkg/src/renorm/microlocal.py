"""Finite-sample cone calculus on the cotangent bundle of R^N.

A :class:`Cone` is a membership predicate on ``(x, xi)`` together with a
seeded sampler of unit covectors.  Set-level statements (soft landing,
disjointness, inclusion) are certified at the sampled resolution and return
their margins and witnesses.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import sympy as sp
from scipy.optimize import nnls

from .causal_order import CausalStructure, leq

__all__ = [
    "Cone",
    "DisjointnessReport",
    "HormanderViolation",
    "MorseFamily",
    "PolarizationContext",
    "SoftLandingReport",
    "cone_sum",
    "component_count",
    "conormal",
    "hormander_disjoint",
    "image_samples",
    "is_polarized",
    "isotropy_defect",
    "lagrange_map",
    "lagrange_residual",
    "landing_ratio",
    "morse_critical",
    "morse_sum",
    "pullback_cone",
    "sector_cone",
    "soft_landing_check",
    "zero_family",
]

Sampler = Callable[[int, np.random.Generator], tuple[np.ndarray, np.ndarray]]
Fiber = Callable[[np.ndarray, int, np.random.Generator], np.ndarray]


def _unit(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.ndim == 1:
        v = v[None, :]
    n = np.sqrt(np.einsum("ij,ij->i", v, v))[:, None]
    return v / np.where(n > 0, n, 1.0)


@dataclass(frozen=True)
class Cone:
    """Closed conic subset of ``T^* R^N`` minus the zero section.

    ``predicate(x, xi)`` decides membership of a single covector;
    ``sampler(n, rng)`` returns base points and unit covectors;
    ``fiber(x, n, rng)`` returns unit covectors over ``x`` (possibly none).
    """

    base_dim: int
    predicate: Callable[[np.ndarray, np.ndarray], bool]
    sampler: Sampler
    fiber: Fiber | None = None
    tag: str = "cone"

    def contains(self, x: Sequence[float], xi: Sequence[float]) -> bool:
        xi = np.asarray(xi, dtype=float)
        if not np.any(xi):
            return False
        return bool(self.predicate(np.asarray(x, dtype=float), xi))

    def sample(self, n: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        return self.sampler(n, rng)

    def fiber_sample(self, x: Sequence[float], n: int, rng: np.random.Generator) -> np.ndarray:
        if self.fiber is None:
            raise ValueError(f"cone {self.tag} has no fiber sampler")
        return self.fiber(np.asarray(x, dtype=float), n, rng)


# ---------------------------------------------------------------------------
# Conormal bundles
# ---------------------------------------------------------------------------


def _parse(expressions: Sequence[str | sp.Expr], names: Sequence[sp.Symbol], extra: dict | None = None) -> list[sp.Expr]:
    local = {str(s): s for s in names}
    if extra:
        local.update(extra)
    return [sp.sympify(e, locals=local) if isinstance(e, str) else e for e in expressions]


@dataclass(frozen=True)
class _Level:
    """Vectorized values and Jacobian of ``f_1 .. f_r`` on ``R^N``."""

    exprs: tuple
    dim: int

    @property
    def symbols(self) -> tuple[sp.Symbol, ...]:
        return sp.symbols(f"x0:{self.dim}", real=True)

    def __post_init__(self) -> None:
        xs = self.symbols
        jac = [[sp.diff(f, x) for x in xs] for f in self.exprs]
        object.__setattr__(self, "_f", sp.lambdify([xs], list(self.exprs), "numpy"))
        object.__setattr__(self, "_j", sp.lambdify([xs], jac, "numpy"))

    def values(self, x: np.ndarray) -> np.ndarray:
        return np.array(np.broadcast_arrays(*self._f(np.asarray(x, dtype=float))), dtype=float).reshape(len(self.exprs))

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        rows = self._j(np.asarray(x, dtype=float))
        return np.array([[float(v) for v in row] for row in rows])

    def project(self, x: np.ndarray, steps: int = 50) -> np.ndarray | None:
        """Gauss-Newton projection onto the zero set, ``None`` if it fails."""
        x = np.array(x, dtype=float)
        for _ in range(steps):
            f = self.values(x)
            if np.max(np.abs(f)) < 1e-13:
                return x
            J = self.jacobian(x)
            step, *_ = np.linalg.lstsq(J, f, rcond=None)
            x = x - step
        return x if np.max(np.abs(self.values(x))) < 1e-10 else None


def conormal(
    defining: Sequence[str | sp.Expr],
    base_dim: int,
    box: float = 1.0,
    rank_floor: float = 1e-3,
    tol: float = 1e-8,
    tag: str | None = None,
) -> Cone:
    """Conormal bundle of ``{f_1 = ... = f_r = 0}``; variables are ``x0 .. x{N-1}``.

    Points where the differentials drop rank (below ``rank_floor`` in the
    smallest singular value) are excluded from sampling and membership.
    """
    xs = sp.symbols(f"x0:{base_dim}", real=True)
    level = _Level(tuple(_parse(defining, xs)), base_dim)
    r = len(level.exprs)

    def regular(J: np.ndarray) -> bool:
        return np.linalg.svd(J, compute_uv=False)[-1] >= rank_floor

    def predicate(x: np.ndarray, xi: np.ndarray) -> bool:
        if np.max(np.abs(level.values(x))) > tol:
            return False
        J = level.jacobian(x)
        if not regular(J):
            return False
        coef, *_ = np.linalg.lstsq(J.T, xi, rcond=None)
        return bool(np.linalg.norm(J.T @ coef - xi) <= tol * max(1.0, np.linalg.norm(xi)))

    def fiber(x: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
        if np.max(np.abs(level.values(x))) > tol:
            return np.zeros((0, base_dim))
        J = level.jacobian(x)
        if not regular(J):
            return np.zeros((0, base_dim))
        return _unit(rng.normal(size=(n, r)) @ J)

    def sampler(n: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        pts, covs = [], []
        attempts = 0
        while len(pts) < n and attempts < 20 * n:
            attempts += 1
            x = level.project(rng.uniform(-box, box, base_dim))
            if x is None or np.max(np.abs(x)) > 2 * box:
                continue
            J = level.jacobian(x)
            if not regular(J):
                continue
            pts.append(x)
            covs.append(_unit(rng.normal(size=r) @ J)[0])
        return np.array(pts).reshape(-1, base_dim), np.array(covs).reshape(-1, base_dim)

    label = tag or "conormal{" + ", ".join(str(e) for e in level.exprs) + "}"
    return Cone(base_dim, predicate, sampler, fiber, label)


# ---------------------------------------------------------------------------
# Soft landing
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SoftLandingReport:
    holds: bool
    delta: float
    witness: tuple[tuple[float, ...], tuple[float, ...]] | None
    shell_max: tuple[float, ...]
    samples: int

    def to_dict(self) -> dict:
        return {
            "holds": self.holds,
            "delta": self.delta,
            "witness": None if self.witness is None else {"point": list(self.witness[0]), "covector": list(self.witness[1])},
            "shell_max": list(self.shell_max),
            "samples": self.samples,
        }


def landing_ratio(point: np.ndarray, covector: np.ndarray, n: int) -> np.ndarray:
    """``|k| / (|h| |xi|)`` for chart points ``(x, h)`` and covectors ``(k, xi)``."""
    point = np.atleast_2d(point)
    covector = np.atleast_2d(covector)
    k = np.linalg.norm(covector[:, :n], axis=1)
    h = np.linalg.norm(point[:, n:], axis=1)
    xi = np.linalg.norm(covector[:, n:], axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = k / (h * xi)
    ratio = np.where(k <= 1e-12 * np.maximum(xi, 1e-300), 0.0, ratio)
    return np.where(np.isnan(ratio), np.inf, ratio)


def soft_landing_check(
    cone: Cone,
    n: int,
    eps: float = 1.0,
    samples: int = 10_000,
    seed: int = 0,
    growth: float = 4.0,
) -> SoftLandingReport:
    """Test ``|k| <= delta |h| |xi|`` on samples with ``|h| <= eps``.

    The chart splits coordinates as ``(x, h)`` with ``x`` the first ``n``.
    Samples are grouped in dyadic shells of ``|h|``; the condition fails if
    a covector with ``h = 0`` has ``k != 0`` or if the largest ratio in the
    innermost third of the populated shells exceeds ``growth`` times the
    largest ratio in the outermost third.
    """
    rng = np.random.default_rng(seed)
    pts, covs = cone.sample(samples, rng)
    hnorm = np.linalg.norm(pts[:, n:], axis=1)
    keep = hnorm <= eps
    pts, covs, hnorm = pts[keep], covs[keep], hnorm[keep]
    ratio = landing_ratio(pts, covs, n)
    if np.isinf(ratio).any():
        i = int(np.argmax(np.isinf(ratio)))
        return SoftLandingReport(False, math.inf, (tuple(pts[i]), tuple(covs[i])), (), int(keep.sum()))
    with np.errstate(divide="ignore"):
        shell = np.where(hnorm > 0, np.floor(np.log2(eps / np.maximum(hnorm, 1e-300))), -1).astype(int)
    populated = sorted(set(shell[shell >= 0].tolist()))
    shell_max = tuple(float(ratio[shell == j].max()) for j in populated)
    delta = float(ratio.max()) if len(ratio) else 0.0
    if len(shell_max) >= 3:
        third = max(1, len(shell_max) // 3)
        top = max(shell_max[:third])
        deep = max(shell_max[-third:])
        if deep > growth * max(top, 1e-300) and deep > 1e-9:
            j = populated[len(shell_max) - third + int(np.argmax(shell_max[-third:]))]
            mask = np.where(shell == j)[0]
            i = int(mask[np.argmax(ratio[mask])])
            return SoftLandingReport(False, math.inf, (tuple(pts[i]), tuple(covs[i])), shell_max, len(pts))
    return SoftLandingReport(True, delta, None, shell_max, len(pts))


def sector_cone(angle: float, half_width: float, delta: float, depth: float = 1e-6) -> Cone:
    """Soft-landing cone over ``(x, h) in R x R^2``.

    The fiber over ``(x, h)`` holds ``(k, xi)`` with the direction of ``xi``
    within ``half_width`` of ``angle`` and ``|k| <= delta |h| |xi|``.  The
    sampler draws ``|h|`` log-uniformly in ``[depth, 1]``.
    """
    if not 0 < half_width < math.pi / 2:
        raise ValueError("half width must lie in (0, pi/2)")

    def predicate(p: np.ndarray, c: np.ndarray) -> bool:
        xi = c[1:]
        r = np.linalg.norm(xi)
        if r == 0:
            return False
        off = abs((math.atan2(xi[1], xi[0]) - angle + math.pi) % (2 * math.pi) - math.pi)
        return bool(off <= half_width and abs(c[0]) <= delta * np.linalg.norm(p[1:]) * r)

    def covectors(h: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        count = len(h)
        beta = angle + rng.uniform(-half_width, half_width, count)
        k = delta * np.linalg.norm(h, axis=1) * rng.uniform(-1, 1, count)
        return _unit(np.stack([k, np.cos(beta), np.sin(beta)], axis=1))

    def sampler(n: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        radius = 10.0 ** rng.uniform(math.log10(depth), 0.0, n)
        ang = rng.uniform(0, 2 * math.pi, n)
        h = radius[:, None] * np.stack([np.cos(ang), np.sin(ang)], axis=1)
        pts = np.concatenate([rng.uniform(-1, 1, (n, 1)), h], axis=1)
        return pts, covectors(h, rng)

    def fiber(p: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
        return covectors(np.repeat(p[None, 1:], n, axis=0), rng)

    return Cone(3, predicate, sampler, fiber, f"sector({angle:.3f}, {half_width:.3f}, {delta:.3f})")


# ---------------------------------------------------------------------------
# Sums, disjointness, pull-backs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DisjointnessReport:
    disjoint: bool
    gap: float
    witness: tuple | None = None

    def __bool__(self) -> bool:
        return self.disjoint


def _angle(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a, b = _unit(a), _unit(b)
    return np.arccos(np.clip(np.sum(a * b, axis=1), -1.0, 1.0))


def hormander_disjoint(
    first: Cone,
    second: Cone,
    samples: int = 2000,
    fiber_samples: int = 16,
    seed: int = 0,
    threshold: float = 1e-3,
) -> DisjointnessReport:
    """Minimum cosphere angle between ``first`` and ``-second`` over shared base points."""
    rng = np.random.default_rng(seed)
    pts, covs = first.sample(samples, rng)
    gap, witness = math.pi, None
    for x, xi in zip(pts, covs):
        other = second.fiber_sample(x, fiber_samples, rng)
        if len(other) == 0:
            continue
        ang = _angle(np.repeat(xi[None, :], len(other), 0), -other)
        j = int(np.argmin(ang))
        if ang[j] < gap:
            gap, witness = float(ang[j]), (tuple(x), tuple(xi), tuple(other[j]))
    return DisjointnessReport(gap >= threshold, gap, witness)


def _in_sum(x: np.ndarray, xi: np.ndarray, first: Cone, second: Cone, a: np.ndarray, b: np.ndarray, tol: float) -> bool:
    target = xi / np.linalg.norm(xi)
    # convex fibers: the sum is the conic hull of both fibers; the split found
    # by NNLS is then confirmed with the exact predicates, which keeps
    # non-convex fibers from passing through their own hull
    coef, res = nnls(np.concatenate([a, b]).T, target)
    if res < tol:
        u, v = a.T @ coef[: len(a)], b.T @ coef[len(a) :]
        small = tol * 10
        u_ok = np.linalg.norm(u) < small or first.contains(x, u)
        v_ok = np.linalg.norm(v) < small or second.contains(x, v)
        if u_ok and v_ok:
            return True
    # ray fibers: a two-term split over sampled directions
    for p in a:
        for q in b:
            coef, res = nnls(np.stack([p, q], axis=1), target)
            if res < tol and coef.min() > 0:
                return True
    return False


def cone_sum(first: Cone, second: Cone, fiber_samples: int = 48, tol: float = 1e-6) -> Cone:
    """``first u second u (first + second)`` with fiberwise sums over shared base points.

    Membership of a covector in the sum part is decided by a non-negative
    decomposition over fiber samples of both cones, so it is exact for ray
    fibers and an inner approximation (up to sampling) for convex ones.
    """
    if first.base_dim != second.base_dim:
        raise ValueError("cones live over different dimensions")

    def predicate(x: np.ndarray, xi: np.ndarray) -> bool:
        if first.contains(x, xi) or second.contains(x, xi):
            return True
        rng = np.random.default_rng(0)
        a = first.fiber_sample(x, fiber_samples, rng)
        b = second.fiber_sample(x, fiber_samples, rng)
        if len(a) == 0 or len(b) == 0:
            return False
        return _in_sum(x, np.asarray(xi, dtype=float), first, second, a, b, tol)

    def fiber(x: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
        a = first.fiber_sample(x, n, rng)
        b = second.fiber_sample(x, n, rng)
        parts = [a, b]
        if len(a) and len(b):
            w = np.exp(rng.uniform(-2, 2, size=(n, 1)))
            parts.append(_unit(a[rng.integers(len(a), size=n)] + w * b[rng.integers(len(b), size=n)]))
        out = np.concatenate([p for p in parts if len(p)], axis=0) if any(len(p) for p in parts) else np.zeros((0, first.base_dim))
        return out[rng.permutation(len(out))[:n]] if len(out) else out

    def sampler(n: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        pts, covs = first.sample(n, rng)
        out_p, out_c = [], []
        for x, xi in zip(pts, covs):
            b = second.fiber_sample(x, 1, rng)
            out_p.append(x)
            if len(b) and rng.random() < 0.75:
                out_c.append(xi + math.exp(rng.uniform(-2, 2)) * b[0])
            else:
                out_c.append(xi)
        p2, c2 = second.sample(max(1, n // 4), rng)
        return (
            np.concatenate([np.array(out_p).reshape(-1, first.base_dim), p2]),
            np.concatenate([_unit(np.array(out_c).reshape(-1, first.base_dim)), c2]),
        )

    return Cone(first.base_dim, predicate, sampler, fiber, f"({first.tag})+({second.tag})")


def pullback_cone(
    phi: Callable[[np.ndarray], np.ndarray],
    jacobian: Callable[[np.ndarray], np.ndarray],
    cone: Cone,
    lift: Callable[[np.ndarray, np.random.Generator], np.ndarray],
    source_dim: int,
    tol: float = 1e-9,
) -> Cone:
    """``Phi^* Gamma = {(x; dPhi_x^T xi) : (Phi(x); xi) in Gamma}``.

    ``lift(y, rng)`` returns a point of ``Phi^{-1}(y)`` (the inverse for a
    diffeomorphism, a section for a submersion).  Membership solves
    ``dPhi_x^T xi = eta`` by least squares, which covers submersions.
    """

    def predicate(x: np.ndarray, eta: np.ndarray) -> bool:
        J = np.atleast_2d(jacobian(x))
        xi, *_ = np.linalg.lstsq(J.T, eta, rcond=None)
        if np.linalg.norm(J.T @ xi - eta) > tol * max(1.0, np.linalg.norm(eta)):
            return False
        if not np.any(np.abs(xi) > 0):
            return False
        return cone.contains(phi(x), xi)

    def fiber(x: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
        J = np.atleast_2d(jacobian(x))
        xi = cone.fiber_sample(phi(x), n, rng)
        return _unit(xi @ J) if len(xi) else np.zeros((0, source_dim))

    def sampler(n: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        ys, xis = cone.sample(n, rng)
        xs = np.array([lift(y, rng) for y in ys]).reshape(-1, source_dim)
        etas = np.array([xi @ np.atleast_2d(jacobian(x)) for x, xi in zip(xs, xis)]).reshape(-1, source_dim)
        return xs, _unit(etas)

    return Cone(source_dim, predicate, sampler, fiber, f"pullback({cone.tag})")


# ---------------------------------------------------------------------------
# Polarization
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PolarizationContext:
    """Constant metric ``diag(1, -1, ..., -1)`` and the widened causal order."""

    structure: CausalStructure = field(default_factory=lambda: CausalStructure(1, 0.1))
    tol: float = 1e-12

    @property
    def dim(self) -> int:
        return self.structure.dim

    def q(self, xi: np.ndarray) -> np.ndarray:
        xi = np.atleast_2d(xi)
        return xi[:, 0] ** 2 - np.sum(xi[:, 1:] ** 2, axis=1)

    def in_energy_cone(self, xi: np.ndarray) -> bool:
        """``xi`` in ``E^+ = {q(xi) >= 0, xi_0 > 0}``."""
        xi = np.asarray(xi, dtype=float)
        scale = np.linalg.norm(xi) ** 2
        return bool(xi[0] > 0 and self.q(xi)[0] >= -self.tol * max(scale, 1.0))

    def check_cone(self, samples: int = 1000, seed: int = 0) -> bool:
        """Convexity and ``E^+ n -E^+ = {}`` on random members."""
        rng = np.random.default_rng(seed)
        members = []
        while len(members) < samples:
            xi = rng.normal(size=self.dim)
            xi[0] = abs(xi[0]) + np.linalg.norm(xi[1:]) * rng.uniform(1.0, 2.0)
            members.append(xi)
        members = np.array(members)
        for a, b in zip(members[::2], members[1::2]):
            if not self.in_energy_cone(a + rng.uniform(0, 3) * b):
                return False
        return not any(self.in_energy_cone(-m) for m in members)


def _trace(points: np.ndarray, covectors: np.ndarray, tol: float) -> list[tuple[np.ndarray, np.ndarray]]:
    """Group equal base points and add their covectors; points carrying only zero covectors drop out."""
    groups: list[tuple[np.ndarray, np.ndarray, bool]] = []
    for x, xi in zip(points, covectors):
        nonzero = np.linalg.norm(xi) > tol
        for i, (y, s, any_nonzero) in enumerate(groups):
            if np.linalg.norm(x - y) <= tol:
                groups[i] = (y, s + xi, any_nonzero or nonzero)
                break
        else:
            groups.append((x.copy(), xi.copy(), bool(nonzero)))
    return [(y, s) for y, s, keep in groups if keep]


def is_polarized(points: Sequence[Sequence[float]], covectors: Sequence[Sequence[float]], ctx: PolarizationContext | None = None) -> str:
    """Classify ``p = ((x_1; xi_1), ..., (x_k; xi_k))`` as ``"strict"``, ``"weak"`` or ``"no"``.

    The trace sums covectors over coinciding base points.  At every base point
    that is maximal for the widened causal order the summed covector must lie
    in ``-E^+``; ``"weak"`` allows a zero sum there.
    """
    ctx = ctx or PolarizationContext()
    pts = np.asarray(points, dtype=float)
    covs = np.asarray(covectors, dtype=float)
    trace = _trace(pts, covs, 1e-12)
    if not trace:
        return "weak"
    verdict = "strict"
    for i, (x, s) in enumerate(trace):
        dominated = any(
            j != i and leq(ctx.structure, x, y) and not np.allclose(x, y)
            for j, (y, _) in enumerate(trace)
        )
        if dominated:
            continue
        if np.linalg.norm(s) <= 1e-12 * max(1.0, np.abs(covs).max()):
            verdict = "weak"
        elif not ctx.in_energy_cone(-s):
            return "no"
    return verdict


# ---------------------------------------------------------------------------
# Morse families
# ---------------------------------------------------------------------------


class HormanderViolation(ValueError):
    """The phase of a summed Morse family has a critical point with ``dS = 0``."""


@dataclass(frozen=True)
class MorseFamily:
    """Phase ``S(x, theta)`` on ``R^m x (R^k minus 0)``, homogeneous of degree 1 in each fiber block.

    ``blocks`` lists the fiber dimensions of the blocks; a sum of ``r``
    families has ``r`` blocks, each normalized separately when sampling.
    ``components`` holds the families whose images are the Lagrange
    immersions; a plain family is its own single component.
    """

    expr: sp.Expr
    base_dim: int
    blocks: tuple[int, ...] = (1,)
    components: tuple["MorseFamily", ...] = ()
    name: str = "S"

    @classmethod
    def from_string(cls, text: str, base_dim: int, fiber_dim: int = 1, name: str | None = None) -> "MorseFamily":
        xs = sp.symbols(f"x0:{base_dim}", real=True)
        ts = sp.symbols(f"t0:{fiber_dim}", real=True)
        expr = _parse([text], list(xs) + list(ts))[0]
        return cls(expr, base_dim, (fiber_dim,), (), name or text)

    @property
    def fiber_dim(self) -> int:
        return sum(self.blocks)

    @property
    def x_symbols(self) -> tuple[sp.Symbol, ...]:
        return sp.symbols(f"x0:{self.base_dim}", real=True)

    @property
    def t_symbols(self) -> tuple[sp.Symbol, ...]:
        return sp.symbols(f"t0:{self.fiber_dim}", real=True)

    @property
    def parts(self) -> tuple["MorseFamily", ...]:
        return self.components or (self,)

    def _compiled(self) -> dict:
        cache = self.__dict__.get("_fns")
        if cache is None:
            xs, ts = self.x_symbols, self.t_symbols
            allv = list(xs) + list(ts)
            dx = [sp.diff(self.expr, v) for v in xs]
            dt = [sp.diff(self.expr, v) for v in ts]
            jac = [[sp.diff(f, v) for v in allv] for f in dt]
            cache = {
                "S": sp.lambdify([allv], self.expr, "numpy"),
                "dx": sp.lambdify([allv], dx, "numpy"),
                "dt": sp.lambdify([allv], dt, "numpy"),
                "jac": sp.lambdify([allv], jac, "numpy"),
            }
            object.__setattr__(self, "_fns", cache)
        return cache

    def value(self, x: np.ndarray, theta: np.ndarray) -> float:
        return float(self._compiled()["S"](np.concatenate([x, theta])))

    def d_x(self, x: np.ndarray, theta: np.ndarray) -> np.ndarray:
        return np.array(self._compiled()["dx"](np.concatenate([x, theta])), dtype=float).reshape(self.base_dim)

    def d_theta(self, x: np.ndarray, theta: np.ndarray) -> np.ndarray:
        return np.array(self._compiled()["dt"](np.concatenate([x, theta])), dtype=float).reshape(self.fiber_dim)

    def critical_jacobian(self, x: np.ndarray, theta: np.ndarray) -> np.ndarray:
        rows = self._compiled()["jac"](np.concatenate([x, theta]))
        return np.array([[float(v) for v in row] for row in rows]).reshape(self.fiber_dim, self.base_dim + self.fiber_dim)

    def block_slices(self) -> list[slice]:
        out, start = [], 0
        for b in self.blocks:
            out.append(slice(start, start + b))
            start += b
        return out

    def homogeneity_defect(self, samples: int = 50, seed: int = 0) -> float:
        """Largest ``|S(x, lam theta_b) - lam S(x, theta)|`` over blocks ``b`` of the lone phase."""
        rng = np.random.default_rng(seed)
        worst = 0.0
        for _ in range(samples):
            x = rng.uniform(-1, 1, self.base_dim)
            theta = rng.normal(size=self.fiber_dim)
            lam = rng.uniform(0.1, 10)
            worst = max(worst, abs(self.value(x, lam * theta) - lam * self.value(x, theta)))
        return worst


def _newton_critical(S: MorseFamily, x0: np.ndarray, t0: np.ndarray, steps: int = 60) -> np.ndarray | None:
    """Damped Gauss-Newton on ``d_theta S = 0`` with each fiber block on its unit sphere."""
    m = S.base_dim
    y = np.concatenate([x0, t0])
    slices = S.block_slices()

    def residual(v: np.ndarray) -> np.ndarray:
        x, t = v[:m], v[m:]
        return np.concatenate([S.d_theta(x, t), [np.dot(t[s], t[s]) - 1.0 for s in slices]])

    for _ in range(steps):
        r = residual(y)
        if np.max(np.abs(r)) < 1e-13:
            return y
        J = S.critical_jacobian(y[:m], y[m:])
        sphere = np.zeros((len(slices), len(y)))
        for i, s in enumerate(slices):
            sphere[i, m + s.start : m + s.stop] = 2.0 * y[m:][s]
        step, *_ = np.linalg.lstsq(np.vstack([J, sphere]), r, rcond=None)
        damping = 1.0
        while damping > 1e-4:
            trial = y - damping * step
            if np.linalg.norm(residual(trial)) < np.linalg.norm(r):
                y = trial
                break
            damping /= 2
        else:
            return None
    return y if np.max(np.abs(residual(y))) < 1e-10 else None


def morse_critical(
    S: MorseFamily,
    box: float = 1.0,
    base_grid: int = 3,
    fiber_grid: int = 32,
    max_points: int = 4000,
    seed: int = 0,
    merge: float = 1e-6,
) -> np.ndarray:
    """Sampled critical set ``{d_theta S = 0}`` as rows ``(x, theta)`` with unit fiber blocks.

    Seeds are a ``base_grid^m`` grid on the box times ``fiber_grid`` points
    per fiber dimension on each block sphere (random rotations for blocks of
    dimension above 2); duplicates within ``merge`` are dropped.
    """
    rng = np.random.default_rng(seed)
    m = S.base_dim
    axis = np.linspace(-box, box, base_grid) + (box / (2 * base_grid))
    base_seeds = np.array(list(itertools.product(axis, repeat=m)))
    fiber_seeds = []
    for b in S.blocks:
        if b == 1:
            fiber_seeds.append(np.array([[1.0], [-1.0]]))
        elif b == 2:
            ang = 2 * np.pi * (np.arange(fiber_grid) + 0.5) / fiber_grid
            fiber_seeds.append(np.stack([np.cos(ang), np.sin(ang)], axis=1))
        else:
            fiber_seeds.append(_unit(rng.normal(size=(fiber_grid, b))))
    combos = list(itertools.product(*fiber_seeds))
    found: list[np.ndarray] = []
    seeds = [(x, np.concatenate(c)) for x in base_seeds for c in combos]
    order = rng.permutation(len(seeds))
    for idx in order:
        if len(found) >= max_points:
            break
        x0, t0 = seeds[idx]
        x0 = x0 + rng.uniform(-0.5, 0.5, m) * box / base_grid
        root = _newton_critical(S, x0, t0)
        if root is None or np.max(np.abs(root[:m])) > 1.5 * box:
            continue
        if found and np.min(np.linalg.norm(np.array(found) - root, axis=1)) < merge:
            continue
        found.append(root)
    return np.array(found).reshape(-1, m + S.fiber_dim)


def lagrange_map(S: MorseFamily, critical: np.ndarray, rng: np.random.Generator | None = None) -> tuple[np.ndarray, np.ndarray]:
    """``(x; d_x S)`` on critical samples; each fiber block gets an independent positive weight.

    For a single block the weight only rescales the covector.  For sums it
    sweeps the image over all relative scalings of the summands.
    """
    m = S.base_dim
    rng = rng or np.random.default_rng(0)
    pts, covs = [], []
    for row in critical:
        x, theta = row[:m], row[m:].copy()
        for s in S.block_slices():
            theta[s] *= math.exp(rng.uniform(-1.5, 1.5))
        pts.append(x)
        covs.append(S.d_x(x, theta))
    return np.array(pts).reshape(-1, m), np.array(covs).reshape(-1, m)


def _block_hull_distance(vectors: np.ndarray) -> float:
    """Distance from 0 to the convex hull of the unit vectors ``vectors``."""
    A = _unit(vectors).T
    big = 1e3
    aug = np.vstack([A, big * np.ones((1, A.shape[1]))])
    rhs = np.concatenate([np.zeros(A.shape[0]), [big]])
    w, _ = nnls(aug, rhs)
    return float(np.linalg.norm(A @ w))


def morse_sum(
    first: MorseFamily,
    second: MorseFamily,
    check: bool = True,
    threshold: float = 1e-3,
    box: float = 1.0,
) -> MorseFamily:
    """Family ``S_1 + S_2`` on the fibered product with components
    ``{A} u {B} u {A + B}`` for components ``A`` of ``first`` and ``B`` of ``second``.

    With ``check`` each new combined component is sampled and a critical
    point where the block covectors can cancel (``dS = 0`` for some positive
    weights) raises :class:`HormanderViolation`.
    """
    if first.base_dim != second.base_dim:
        raise ValueError("families live over different bases")
    parts_a = first.parts if first.fiber_dim else ()
    parts_b = second.parts if second.fiber_dim else ()
    combined = []
    for a, b in itertools.product(parts_a, parts_b):
        sum_family = _add(a, b)
        if check:
            crit = morse_critical(sum_family, box=box, base_grid=3, fiber_grid=8, max_points=400)
            for row in crit:
                x, theta = row[: sum_family.base_dim], row[sum_family.base_dim :]
                vecs = []
                start = 0
                for part, b_dim in zip(_block_families(a) + _block_families(b), sum_family.blocks):
                    vecs.append(part.d_x(x, theta[start : start + b_dim]))
                    start += b_dim
                vecs = np.array(vecs)
                if np.min(np.linalg.norm(vecs, axis=1)) < 1e-12:
                    continue
                if _block_hull_distance(vecs) < threshold:
                    raise HormanderViolation(f"components {a.name} and {b.name} cancel at x = {x}")
        combined.append(sum_family)
    components = tuple(parts_a) + tuple(parts_b) + tuple(combined)
    if not components:
        return MorseFamily(sp.Integer(0), first.base_dim, (), (), "0")
    blocks = first.blocks + second.blocks if first.fiber_dim and second.fiber_dim else (first.blocks if first.fiber_dim else second.blocks)
    total = combined[0] if combined else (parts_a[0] if parts_a else parts_b[0])
    name = f"{first.name} + {second.name}"
    return MorseFamily(total.expr, first.base_dim, blocks if combined else total.blocks, components, name)


def _block_families(S: MorseFamily) -> list[MorseFamily]:
    stored = S.__dict__.get("_summands")
    return list(stored) if stored is not None else [S]


def _add(a: MorseFamily, b: MorseFamily) -> MorseFamily:
    """``a(x, t_A) + b(x, t_B)`` with ``b``'s fiber symbols shifted past ``a``'s."""
    shift = {
        s: sp.Symbol(f"t{i + a.fiber_dim}", real=True) for i, s in enumerate(b.t_symbols)
    }
    expr = a.expr + b.expr.xreplace(shift)
    out = MorseFamily(expr, a.base_dim, a.blocks + b.blocks, (), f"{a.name} + {b.name}")
    object.__setattr__(out, "_summands", tuple(_block_families(a) + _block_families(b)))
    return out


def component_count(S: MorseFamily) -> int:
    if S.fiber_dim == 0:
        return 0
    return len(S.parts)


def zero_family(base_dim: int) -> MorseFamily:
    """The empty family: adding it leaves components unchanged."""
    return MorseFamily(sp.Integer(0), base_dim, (), (), "0")


def image_samples(S: MorseFamily, box: float = 1.0, seed: int = 0, per_component: int = 400) -> list[tuple[str, np.ndarray, np.ndarray]]:
    """Lagrange-map samples of every component, tagged with the component name.

    Critical points where some fiber block is numerically zero belong to a
    smaller component and are dropped.
    """
    rng = np.random.default_rng(seed)
    out = []
    for comp in S.parts:
        crit = morse_critical(comp, box=box, max_points=per_component, seed=seed)
        pts, covs = lagrange_map(comp, crit, rng)
        out.append((comp.name, pts, covs))
    return out


def lagrange_residual(S: MorseFamily, x: Sequence[float], xi: Sequence[float], seeds: int = 8, seed: int = 0) -> float:
    """Distance of ``(x; xi)`` from the Lagrange image of ``S`` over the fiber above ``x``.

    Minimizes ``|d_theta S(x, theta)| + |d_x S(x, theta) - xi|`` over
    ``theta`` from random seeds; zero iff some critical ``theta`` maps to
    ``xi``.  Homogeneity makes the scale of ``xi`` irrelevant.
    """
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    rng = np.random.default_rng(seed)

    def residual(theta: np.ndarray) -> np.ndarray:
        return np.concatenate([S.d_theta(x, theta), S.d_x(x, theta) - xi])

    def jac(theta: np.ndarray) -> np.ndarray:
        J = S.critical_jacobian(x, theta)
        m = S.base_dim
        rows = [J[:, m:]]
        step = 1e-7
        cols = []
        for k in range(S.fiber_dim):
            e = np.zeros(S.fiber_dim)
            e[k] = step
            cols.append((S.d_x(x, theta + e) - S.d_x(x, theta - e)) / (2 * step))
        rows.append(np.array(cols).T.reshape(m, S.fiber_dim))
        return np.vstack(rows)

    best = math.inf
    scale = np.linalg.norm(xi)
    for _ in range(seeds):
        theta = rng.normal(size=S.fiber_dim) * scale
        for _ in range(30):
            r = residual(theta)
            step, *_ = np.linalg.lstsq(jac(theta), r, rcond=None)
            theta = theta - step
            if np.linalg.norm(step) < 1e-14 * max(1.0, np.linalg.norm(theta)):
                break
        best = min(best, float(np.linalg.norm(residual(theta))))
        if best < 1e-12:
            break
    return best


def isotropy_defect(S: MorseFamily, critical: np.ndarray, step: float = 1e-6) -> float:
    """Largest ``|omega(d lam v1, d lam v2)|`` over tangent pairs of the critical set.

    Tangent vectors span the kernel of the Jacobian of ``d_theta S``; their
    images under the Lagrange map are taken by central differences.
    """
    m = S.base_dim
    worst = 0.0
    for row in critical:
        J = S.critical_jacobian(row[:m], row[m:])
        _, sing, vt = np.linalg.svd(J)
        rank = int(np.sum(sing > 1e-9))
        kernel = vt[rank:]
        images = []
        for v in kernel:
            plus, minus = row + step * v, row - step * v
            dx = (plus[:m] - minus[:m]) / (2 * step)
            dxi = (S.d_x(plus[:m], plus[m:]) - S.d_x(minus[:m], minus[m:])) / (2 * step)
            images.append((dx, dxi))
        for (dx1, dxi1), (dx2, dxi2) in itertools.combinations(images, 2):
            worst = max(worst, abs(float(dxi1 @ dx2 - dxi2 @ dx1)))
    return worst
