"""Discrete energy, the transition constants c_eps and c_0, and L1 distances.

The discrete energy is

    E = sum_cells h Q~(eps^2 (u_{i+1} - u_i) / h) / eps^3 + sum_nodes w_i h F(u_i) / eps

with trapezoid weights w_i (1/2 at the two end nodes).  Its gradient is
exactly -(h w_i / eps) times the semi-discrete right-hand side of the
evolution module, so the Lyapunov identity holds at the discrete level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .errors import DomainError
from .inversion import InversionContext, j_eps
from .model import ModelParams
from .stationary import Profile


@dataclass(frozen=True)
class EnergyBreakdown:
    total: float
    gradient_part: float
    potential_part: float
    per_cell: np.ndarray | None = None


def trapezoid_weights(n: int) -> np.ndarray:
    w = np.ones(n)
    w[0] = w[-1] = 0.5
    return w


def energy_parts(m: ModelParams, u: np.ndarray, h: float) -> tuple[np.ndarray, np.ndarray]:
    """Per-cell gradient contributions and per-node potential contributions."""
    e = m.eps
    grad = h * m.flux.q_tilde(e * e * np.diff(u) / h) / e**3
    pot = trapezoid_weights(len(u)) * h * m.potential.f(u) / e
    return grad, pot


def energy(m: ModelParams, u: Profile | np.ndarray, h: float | None = None, per_cell: bool = False) -> EnergyBreakdown:
    if isinstance(u, Profile):
        h, vals = u.h, u.u
    else:
        vals = np.asarray(u, dtype=float)
        if h is None:
            h = m.length / (len(vals) - 1)
    grad, pot = energy_parts(m, vals, h)
    g, p = float(np.sum(grad)), float(np.sum(pot))
    cells = None
    if per_cell:
        # each cell carries its gradient term and the trapezoid potential over the cell
        fv = m.potential.f(vals)
        cells = grad + 0.5 * h * (fv[:-1] + fv[1:]) / m.eps
    return EnergyBreakdown(g + p, g, p, cells)


def c_eps(m: ModelParams) -> float:
    """eps^-1 int_{-1}^{1} Q(eps^2 J_eps(F(s))) ds."""
    if m.eps >= m.eps0:
        raise DomainError(f"eps = {m.eps} >= eps0 = {m.eps0:.6g}")
    ctx = InversionContext.from_model(m)
    e2 = m.eps**2

    def integrand(s):
        return float(m.flux.q(e2 * j_eps(ctx, float(m.potential.f(s)))))

    # even integrand: integrate over [0, 1] and double
    val, _ = quad(integrand, 0.0, 1.0, epsabs=0.0, epsrel=1e-12, limit=200)
    return 2.0 * val / m.eps


def c0(m: ModelParams) -> float:
    """sqrt(Q'(0)) int_{-1}^{1} sqrt(2 F(s)) ds."""
    val, _ = quad(lambda s: math.sqrt(2.0 * float(m.potential.f(s))), 0.0, 1.0, epsabs=0.0, epsrel=1e-13, limit=200)
    return math.sqrt(m.flux.qprime0) * 2.0 * val


@dataclass(frozen=True)
class InequalityReport:
    min_value: float
    argmin: tuple[float, float]
    samples: int


def pointwise_g(ctx: InversionContext, x, y):
    """g(x, y) = Q~(eps^2 x) + eps^2 y - eps^2 |x| Q(eps^2 J_eps(y))."""
    e2 = ctx.eps**2
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return ctx.flux.q_tilde(e2 * x) + e2 * y - e2 * np.abs(x) * ctx.flux.q(e2 * j_eps(ctx, y))


def verify_pointwise_inequality(ctx: InversionContext, samples: int = 200) -> InequalityReport:
    xs = np.linspace(-ctx.s_max, ctx.s_max, samples)
    ys = np.linspace(0.0, ctx.xi_max, samples)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    G = pointwise_g(ctx, X, Y)
    k = np.unravel_index(np.argmin(G), G.shape)
    return InequalityReport(float(G[k]), (float(X[k]), float(Y[k])), samples)


@dataclass(frozen=True)
class StepFunction:
    """Piecewise constant +-1 function on [a, b] with jumps at ``jumps``."""

    a: float
    b: float
    jumps: tuple[float, ...]
    start_value: float = -1.0

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        k = np.searchsorted(np.asarray(self.jumps, dtype=float), x, side="right")
        return self.start_value * (-1.0) ** k


def _segment_abs_integral(x0, x1, d0, d1):
    """int |d| over [x0, x1] with d linear; exact when d changes sign."""
    width = x1 - x0
    same = d0 * d1 >= 0
    out = np.where(same, 0.5 * width * (np.abs(d0) + np.abs(d1)), 0.0)
    cross = ~same
    if np.any(cross):
        a0, a1 = np.abs(d0[cross]), np.abs(d1[cross])
        out[cross] = 0.5 * width[cross] * (a0 * a0 + a1 * a1) / (a0 + a1)
    return out


def l1_distance(u: Profile, w) -> float:
    """Trapezoid-type L1 distance; cells containing a jump of ``w`` are split there.

    ``w`` may be a Profile on the same grid or a StepFunction.
    """
    x, uv = u.x, u.u
    if isinstance(w, Profile):
        if w.x.shape != x.shape or np.any(w.x != x):
            raise ValueError("profiles must share a grid")
        d = uv - w.u
        return float(np.sum(_segment_abs_integral(x[:-1], x[1:], d[:-1], d[1:])))
    jumps = np.asarray([j for j in w.jumps if x[0] < j < x[-1]], dtype=float)
    pts = np.union1d(x, jumps)
    uval = np.interp(pts, x, uv)
    # w is evaluated on each sub-segment from its midpoint, so jumps never sit inside a segment
    mid = 0.5 * (pts[:-1] + pts[1:])
    wv = w(mid)
    d0 = uval[:-1] - wv
    d1 = uval[1:] - wv
    return float(np.sum(_segment_abs_integral(pts[:-1], pts[1:], d0, d1)))
