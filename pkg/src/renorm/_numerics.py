"""Shared numerical plumbing: vectorized adaptive Gauss-Legendre and extrapolation."""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    if n not in _GL_CACHE:
        _GL_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _GL_CACHE[n]


@dataclass(frozen=True)
class QuadResult:
    value: complex | float
    error: float
    converged: bool


def adaptive_gl(
    f: Callable[[np.ndarray], np.ndarray],
    breakpoints: Sequence[float],
    tol: float = 1e-10,
    order: int = 16,
    max_rounds: int = 40,
    min_panels: int = 1,
    max_panels: int = 4096,
    rel_tol: float = 1e-14,
) -> QuadResult:
    """Integrate a vectorized ``f`` over ``[breakpoints[0], breakpoints[-1]]``.

    Every panel is integrated with ``order`` and ``2 * order`` Gauss-Legendre
    nodes; panels whose two estimates differ by more than their share of the
    tolerance are bisected.  Panels are processed in a fixed order so results
    are deterministic.  A panel is also accepted once its two estimates agree
    to ``rel_tol`` relative to the running total, so rounding noise cannot
    force endless bisection; refinement stops when more than ``max_panels``
    panels would be active and the result is flagged unconverged.
    """
    pts = np.unique(np.asarray(breakpoints, dtype=float))
    if len(pts) < 2:
        return QuadResult(0.0, 0.0, True)
    if min_panels > 1:
        pts = np.unique(
            np.concatenate([np.linspace(a, b, min_panels + 1) for a, b in zip(pts[:-1], pts[1:])])
        )
    x1, w1 = gauss_legendre(order)
    x2, w2 = gauss_legendre(2 * order)
    total_len = pts[-1] - pts[0]
    pending = list(zip(pts[:-1], pts[1:]))
    accepted = 0.0
    err_acc = 0.0
    for _ in range(max_rounds):
        if not pending:
            break
        lo = np.array([p[0] for p in pending])
        hi = np.array([p[1] for p in pending])
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        nodes1 = mid[:, None] + half[:, None] * x1[None, :]
        nodes2 = mid[:, None] + half[:, None] * x2[None, :]
        v1 = f(nodes1.ravel()).reshape(nodes1.shape)
        v2 = f(nodes2.ravel()).reshape(nodes2.shape)
        est1 = half * (v1 @ w1)
        est2 = half * (v2 @ w2)
        diff = np.abs(est2 - est1)
        share = tol * (hi - lo) / total_len
        scale = abs(accepted) + float(np.abs(est2).sum())
        good = (diff <= share) | (diff <= rel_tol * scale) | (half < 1e-13 * max(1.0, abs(mid).max()))
        accepted = accepted + est2[good].sum()
        err_acc += diff[good].sum()
        pending = []
        if 2 * int((~good).sum()) > max_panels:
            pending = [(a, b) for a, b, ok in zip(lo, hi, good) if not ok]
            break
        for a, m, b, ok in zip(lo, mid, hi, good):
            if not ok:
                pending.extend([(a, m), (m, b)])
    converged = not pending
    if pending:
        lo = np.array([p[0] for p in pending])
        hi = np.array([p[1] for p in pending])
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        nodes2 = mid[:, None] + half[:, None] * x2[None, :]
        v2 = f(nodes2.ravel()).reshape(nodes2.shape)
        rest = half * (v2 @ w2)
        accepted = accepted + rest.sum()
        err_acc += float(np.abs(rest).sum())
    value = accepted
    if np.iscomplexobj(value):
        value = complex(value)
    else:
        value = float(value)
    return QuadResult(value, float(err_acc), converged)


@dataclass(frozen=True)
class ExtrapolationResult:
    value: complex | float
    coefficients: np.ndarray
    residual: float


def extrapolate(
    eps: Sequence[float],
    values: Sequence[complex | float],
    powers: Sequence[float],
    log_term: bool = False,
) -> ExtrapolationResult:
    """Least-squares fit ``v(eps) = c0 + sum c_k eps^{p_k} [+ c_log eps log eps]``.

    Returns the intercept ``c0`` as the extrapolated ``eps -> 0`` value.
    """
    eps = np.asarray(eps, dtype=float)
    vals = np.asarray(values)
    cols = [np.ones_like(eps)] + [eps**p for p in powers]
    if log_term:
        cols.append(eps ** min(powers) * np.log(eps) if powers else np.log(eps))
    design = np.stack(cols, axis=1)
    coef, *_ = np.linalg.lstsq(design.astype(vals.dtype), vals, rcond=None)
    resid = float(np.max(np.abs(design @ coef - vals))) if len(eps) > design.shape[1] else 0.0
    c0 = coef[0]
    c0 = complex(c0) if np.iscomplexobj(c0) else float(c0)
    return ExtrapolationResult(c0, coef, resid)


def thread_cap() -> int:
    """Parallelism cap from ``RENORM_THREADS`` (default 1)."""
    raw = os.environ.get("RENORM_THREADS", "1")
    try:
        value = int(raw)
    except ValueError as exc:
        raise ValueError(f"RENORM_THREADS must be an integer, got {raw!r}") from exc
    if value < 1:
        raise ValueError("RENORM_THREADS must be at least 1")
    return value
