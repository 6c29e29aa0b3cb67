"""Causal order on flat spacetime and the causal recursion for n-point amplitudes.

Points are arrays ``(x^0, x^1, ..., x^p)`` with signature ``(+, -, ..., -)``.
The order can be widened by a constant ``c``: ``x <= y`` iff ``y - x`` lies
in the closed future cone of ``eta + c^2 (dx^0)^2``.  With ``c = 0`` this is
the Minkowski order.

Region ``I`` (a proper nonempty subset of point labels 1..n) collects the
configurations where no point of ``I`` precedes a point outside ``I``.  Every
configuration off the thin diagonal lies in at least one region, which lets
an n-point amplitude be assembled from lower ones with a partition of unity.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.special import logsumexp

from .fields_hopf import (
    FieldMonomial,
    SingularConfigurationError,
    coproduct,
    eval_amplitude,
    laplace,
)

__all__ = [
    "CausalRecursion",
    "CausalStructure",
    "HasseDiagram",
    "PartitionFamily",
    "admissible_sets",
    "assemble_tn",
    "factorized_value",
    "hasse",
    "in_region",
    "leq",
    "maximal_vertex_region",
    "proper_subsets",
]

Subset = frozenset[int]


@dataclass(frozen=True)
class CausalStructure:
    """Flat spacetime of dimension ``1 + spatial_dim`` with cone-widening ``c``."""

    spatial_dim: int = 1
    c: float = 0.0

    def __post_init__(self) -> None:
        if self.spatial_dim < 0:
            raise ValueError("spatial dimension must be non-negative")
        if self.c < 0:
            raise ValueError("cone-widening constant must be non-negative")

    @property
    def dim(self) -> int:
        return self.spatial_dim + 1

    def quadratic(self, v: np.ndarray) -> np.ndarray:
        """``Q_c(v) = (1 + c^2) v0^2 - |v_space|^2`` along the last axis."""
        v = np.asarray(v, dtype=float)
        return (1.0 + self.c**2) * v[..., 0] ** 2 - np.sum(v[..., 1:] ** 2, axis=-1)

    def widened(self, c: float) -> "CausalStructure":
        return CausalStructure(self.spatial_dim, c)


def leq(s: CausalStructure, x: Sequence[float], y: Sequence[float]) -> bool:
    """``x <= y``: ``y - x`` is in the closed future cone (reflexive)."""
    d = np.asarray(y, dtype=float) - np.asarray(x, dtype=float)
    if d.shape != (s.dim,):
        raise ValueError(f"points must have dimension {s.dim}")
    return bool(d[0] >= 0.0 and s.quadratic(d) >= 0.0)


def _order_matrix(s: CausalStructure, points: np.ndarray) -> np.ndarray:
    """Boolean matrix ``L[i, j] = points[i] <= points[j]``."""
    d = points[None, :, :] - points[:, None, :]
    return (d[..., 0] >= 0.0) & (s.quadratic(d) >= 0.0)


def _as_points(s: CausalStructure, cfg: Sequence[Sequence[float]]) -> np.ndarray:
    pts = np.asarray(cfg, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != s.dim or len(pts) < 1:
        raise ValueError(f"configuration must be an (n, {s.dim}) array with n >= 1")
    return pts


# ---------------------------------------------------------------------------
# Hasse diagrams
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HasseDiagram:
    """Covering graph of the distinct points of a configuration."""

    vertices: tuple[tuple[float, ...], ...]
    decorations: tuple[tuple[int, ...], ...]
    edges: tuple[tuple[int, int], ...]

    def to_dot(self, name: str = "hasse") -> str:
        lines = [f"digraph {name} {{"]
        for k, (pt, labels) in enumerate(zip(self.vertices, self.decorations)):
            text = ",".join(str(i) for i in labels)
            coords = ",".join(f"{v:g}" for v in pt)
            lines.append(f'  v{k} [label="{text}" pos="{coords}"];')
        for a, b in self.edges:
            lines.append(f"  v{a} -> v{b};")
        lines.append("}")
        return "\n".join(lines) + "\n"

    def maximal_vertices(self) -> list[int]:
        sources = {a for a, _ in self.edges}
        return [k for k in range(len(self.vertices)) if k not in sources]


def hasse(s: CausalStructure, cfg: Sequence[Sequence[float]]) -> HasseDiagram:
    """Hasse diagram by transitive reduction of the order on distinct points."""
    pts = _as_points(s, cfg)
    vertices: list[tuple[float, ...]] = []
    decorations: list[list[int]] = []
    for label, pt in enumerate(pts, start=1):
        key = tuple(float(v) for v in pt)
        if key in vertices:
            decorations[vertices.index(key)].append(label)
        else:
            vertices.append(key)
            decorations.append([label])
    order = _order_matrix(s, np.asarray(vertices))
    r = len(vertices)
    np.fill_diagonal(order, False)
    edges = []
    for a in range(r):
        for b in range(r):
            if order[a, b] and not any(order[a, c] and order[c, b] for c in range(r)):
                edges.append((a, b))
    return HasseDiagram(tuple(vertices), tuple(tuple(d) for d in decorations), tuple(edges))


# ---------------------------------------------------------------------------
# Regions of the cover
# ---------------------------------------------------------------------------


def proper_subsets(n: int) -> list[Subset]:
    """Nonempty proper subsets of ``{1..n}`` ordered by size, then lexicographically."""
    labels = range(1, n + 1)
    return [frozenset(c) for k in range(1, n) for c in itertools.combinations(labels, k)]


def _validate_subset(I: Sequence[int] | Subset, n: int) -> Subset:
    I = frozenset(I)
    if not I or len(I) >= n or not I <= set(range(1, n + 1)):
        raise ValueError(f"{sorted(I)} is not a proper nonempty subset of 1..{n}")
    return I


def in_region(s: CausalStructure, cfg: Sequence[Sequence[float]], I: Sequence[int] | Subset) -> bool:
    """True iff ``x_i <= x_j`` fails for every ``i`` in ``I`` and ``j`` outside."""
    pts = _as_points(s, cfg)
    I = _validate_subset(I, len(pts))
    order = _order_matrix(s, pts)
    inside = [i - 1 for i in I]
    outside = [j for j in range(len(pts)) if j + 1 not in I]
    return not order[np.ix_(inside, outside)].any()


def admissible_sets(s: CausalStructure, cfg: Sequence[Sequence[float]]) -> list[Subset]:
    """All regions containing the configuration."""
    pts = _as_points(s, cfg)
    n = len(pts)
    order = _order_matrix(s, pts)
    out = []
    for I in proper_subsets(n):
        inside = [i - 1 for i in I]
        outside = [j for j in range(n) if j + 1 not in I]
        if not order[np.ix_(inside, outside)].any():
            out.append(I)
    return out


def maximal_vertex_region(s: CausalStructure, cfg: Sequence[Sequence[float]]) -> Subset | None:
    """Constructive witness: the labels sitting on one maximal Hasse vertex.

    Returns ``None`` on the thin diagonal, where the diagram has one vertex.
    """
    diagram = hasse(s, cfg)
    if len(diagram.vertices) == 1:
        return None
    top = diagram.maximal_vertices()[0]
    return frozenset(diagram.decorations[top])


# ---------------------------------------------------------------------------
# Scale-invariant partition of unity
# ---------------------------------------------------------------------------


def _log_step(t: np.ndarray) -> np.ndarray:
    """``log(exp(-1/t))`` for ``t > 0`` and ``-inf`` otherwise."""
    t = np.asarray(t, dtype=float)
    out = np.full(t.shape, -np.inf)
    pos = t > 0
    out[pos] = -1.0 / t[pos]
    return out


@dataclass(frozen=True)
class PartitionFamily:
    """Partition of unity subordinate to the widened regions.

    For a pair ``(i, j)`` the weight ``g_ij`` is a smooth function of the
    normalized relative configuration that is positive exactly when
    ``x_i <= x_j`` fails for the widened order.  The region weight is
    ``w_I = prod g_ij`` over ``I x I^c`` and ``chi_I = w_I / sum_J w_J``.
    Normalizing by the total spread makes every ``chi_I`` a function on the
    sphere of relative configurations, hence invariant under translations and
    dilations about any point.
    """

    structure: CausalStructure
    n: int
    sharpness: float = 4.0
    subsets: tuple[Subset, ...] = field(init=False)

    def __post_init__(self) -> None:
        if self.n < 2:
            raise ValueError("a partition needs at least two points")
        object.__setattr__(self, "subsets", tuple(proper_subsets(self.n)))

    def _log_pair_weights(self, pts: np.ndarray) -> np.ndarray:
        rel = pts[1:] - pts[0]
        scale = np.sqrt(np.sum(rel**2))
        if scale == 0.0:
            raise SingularConfigurationError("configuration lies on the thin diagonal")
        d = (pts[None, :, :] - pts[:, None, :]) / scale
        # positive when x_i <= x_j fails in the widened order
        past = _log_step(-self.sharpness * d[..., 0])
        spacelike = _log_step(-self.sharpness * self.structure.quadratic(d))
        return np.logaddexp(past, spacelike)

    def log_weights(self, cfg: Sequence[Sequence[float]]) -> np.ndarray:
        pts = _as_points(self.structure, cfg)
        if len(pts) != self.n:
            raise ValueError(f"expected {self.n} points")
        lg = self._log_pair_weights(pts)
        out = np.empty(len(self.subsets))
        for k, I in enumerate(self.subsets):
            inside = [i - 1 for i in I]
            outside = [j for j in range(self.n) if j + 1 not in I]
            out[k] = lg[np.ix_(inside, outside)].sum()
        return out

    def values(self, cfg: Sequence[Sequence[float]]) -> dict[Subset, float]:
        lw = self.log_weights(cfg)
        if np.all(np.isneginf(lw)):
            raise SingularConfigurationError("no region contains the configuration")
        probs = np.exp(lw - logsumexp(lw))
        return dict(zip(self.subsets, probs))

    def chi(self, cfg: Sequence[Sequence[float]], I: Sequence[int] | Subset) -> float:
        I = _validate_subset(I, self.n)
        return self.values(cfg)[I]


# ---------------------------------------------------------------------------
# Causal assembly of t_n
# ---------------------------------------------------------------------------

Evaluator = Callable[[FieldMonomial, Mapping[int, np.ndarray]], complex]
Propagator = Callable[[Sequence[float], Sequence[float]], complex]


def factorized_value(
    lower: Evaluator,
    prop: Propagator,
    monomial: FieldMonomial,
    cfg: Mapping[int, np.ndarray],
    I: Subset,
) -> complex:
    """``sum t(A_I(1)) t(A_Ic(1)) (A_I(2) | A_Ic(2))`` evaluated at ``cfg``."""
    exps = monomial.exponents
    a_in = FieldMonomial.from_dict({k: v for k, v in exps.items() if k in I})
    a_out = FieldMonomial.from_dict({k: v for k, v in exps.items() if k not in I})
    total: complex = 0
    for left_in, right_in, c_in in coproduct(a_in):
        t_in = lower(left_in, cfg)
        if t_in == 0:
            continue
        for left_out, right_out, c_out in coproduct(a_out):
            if right_in.degree != right_out.degree:
                continue
            t_out = lower(left_out, cfg)
            if t_out == 0:
                continue
            coupling = laplace(right_in, right_out)
            total += c_in * c_out * t_in * t_out * eval_amplitude(coupling, cfg, prop)
    return total


def assemble_tn(
    lower: Evaluator,
    fam: PartitionFamily,
    prop: Propagator,
    cfg: Sequence[Sequence[float]],
    monomial: FieldMonomial,
) -> complex:
    """``t_n(A) = sum_I chi_I * [causal factorization over I]`` off the thin diagonal."""
    pts = _as_points(fam.structure, cfg)
    if len({tuple(p) for p in pts}) < len(pts):
        raise SingularConfigurationError("coincident points in configuration")
    labelled = {i + 1: pts[i] for i in range(len(pts))}
    total: complex = 0
    for I, weight in fam.values(pts).items():
        if weight == 0.0:
            continue
        total += weight * factorized_value(lower, prop, monomial, labelled, I)
    return total


class CausalRecursion:
    """Builds ``t_J`` for every label set recursively from the causal factorization.

    ``t`` of the unit monomial is 1 and ``t`` of a nonconstant monomial at a
    single point is 0; larger monomials are assembled over the cover of their
    own label set.
    """

    def __init__(self, structure: CausalStructure, prop: Propagator, sharpness: float = 4.0):
        self.structure = structure
        self.prop = prop
        self.sharpness = sharpness
        self._families: dict[int, PartitionFamily] = {}

    def family(self, n: int) -> PartitionFamily:
        if n not in self._families:
            self._families[n] = PartitionFamily(self.structure, n, self.sharpness)
        return self._families[n]

    def _restricted(self, monomial: FieldMonomial, cfg: Mapping[int, np.ndarray]):
        labels = sorted(monomial.labels)
        relabel = {old: new for new, old in enumerate(labels, start=1)}
        local = FieldMonomial.from_dict({relabel[k]: v for k, v in monomial.items})
        pts = np.array([cfg[k] for k in labels])
        return local, pts

    def t(self, monomial: FieldMonomial, cfg: Mapping[int, np.ndarray]) -> complex:
        if monomial.is_unit():
            return 1.0
        if len(monomial.labels) == 1:
            return 0.0
        local, pts = self._restricted(monomial, cfg)
        return assemble_tn(self.t, self.family(len(pts)), self.prop, pts, local)

    def region_values(self, monomial: FieldMonomial, cfg: Sequence[Sequence[float]]) -> dict[Subset, complex]:
        """Unweighted factorized values on every region containing ``cfg``."""
        pts = _as_points(self.structure, cfg)
        labelled = {i + 1: pts[i] for i in range(len(pts))}
        return {
            I: factorized_value(self.t, self.prop, monomial, labelled, I)
            for I in admissible_sets(self.structure, pts)
        }
