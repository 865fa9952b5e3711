"""Vectorized composite Gauss-Legendre quadrature helpers."""

from __future__ import annotations

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=16)
def _leggauss(order: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(order)


def panel_integrals(func, breaks: np.ndarray, order: int = 10) -> np.ndarray:
    """Integral of ``func`` over each panel [breaks[i], breaks[i+1]].

    ``func`` is called once on the flattened array of all quadrature nodes.
    """
    breaks = np.asarray(breaks, dtype=float)
    nodes, weights = _leggauss(order)
    lo, hi = breaks[:-1], breaks[1:]
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    pts = mid[:, None] + half[:, None] * nodes[None, :]
    vals = np.asarray(func(pts.ravel()), dtype=float).reshape(pts.shape)
    return half * (vals @ weights)


def refine_breaks(breaks: np.ndarray, panel_sizes: np.ndarray, target: float, min_sub: int = 1) -> np.ndarray:
    """Subdivide each panel so that its share of ``panel_sizes`` is below ``target``."""
    pieces = np.maximum(min_sub, np.ceil(np.abs(panel_sizes) / target)).astype(int)
    out = [np.linspace(breaks[i], breaks[i + 1], k + 1)[:-1] for i, k in enumerate(pieces)]
    out.append(breaks[-1:])
    return np.concatenate(out)


def cumulative_table(func, breaks: np.ndarray, step_target: float, order: int = 10):
    """Refine ``breaks`` until each panel integral is below ``step_target``.

    Returns ``(breaks, cumulative)`` with ``cumulative[0] = 0``, plus an
    error estimate from comparing the refined total against a lower order rule.
    """
    coarse = panel_integrals(func, breaks, order)
    fine_breaks = refine_breaks(breaks, coarse, step_target)
    panels = panel_integrals(func, fine_breaks, order)
    check = panel_integrals(func, fine_breaks, max(order // 2, 3))
    cum = np.concatenate(([0.0], np.cumsum(panels)))
    err = abs(panels.sum() - check.sum())
    return fine_breaks, cum, err


def integrate(func, breaks, order: int = 20) -> float:
    return float(panel_integrals(func, np.asarray(breaks, dtype=float), order).sum())


def geometric_breaks(lo: float, hi: float, ratio: float = 0.5, smallest: float = 1e-12) -> np.ndarray:
    """Breakpoints on [lo, hi] graded geometrically toward ``lo``."""
    span = hi - lo
    pts = [hi]
    d = span
    while d * ratio > smallest * span:
        d *= ratio
        pts.append(lo + d)
    pts.append(lo)
    return np.array(pts[::-1])
