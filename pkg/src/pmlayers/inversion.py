"""P_eps and its increasing-branch inverse J_eps on [0, kappa eps^-2].

    P_eps(s) = s Q(eps^2 s) - eps^-2 Q~(eps^2 s) = eps^-2 H(eps^2 s)

P_eps' vanishes at both ends of the bracket, so Newton is unreliable there;
the inverse is computed by an Illinois-type false position on the
well-conditioned transform sqrt(H(z)) - sqrt(eta), safeguarded by bisection.
Everything is vectorized over numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .model import FluxSpec, ModelParams

#: xi above xi_max by less than this relative amount is clamped to xi_max
CLAMP_RTOL = 1e-12
MAX_ITER = 200
_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class InversionContext:
    eps: float
    flux: FluxSpec
    root_tol: float = 1e-12

    @classmethod
    def from_model(cls, m: ModelParams, root_tol: float = 1e-12) -> InversionContext:
        return cls(m.eps, m.flux, root_tol)

    @property
    def s_max(self) -> float:
        return self.flux.kappa / self.eps**2

    @property
    def xi_max(self) -> float:
        return self.flux.ell / self.eps**2


def p_eps(ctx: InversionContext, s):
    e2 = ctx.eps**2
    return ctx.flux.h(e2 * np.asarray(s, dtype=float)) / e2


def _h_inverse(flux: FluxSpec, eta: np.ndarray) -> np.ndarray:
    """Solve H(z) = eta for z in [0, kappa]; eta must lie in [0, ell]."""
    kappa, ell = flux.kappa, flux.ell
    z = np.zeros_like(eta)
    top = eta >= ell
    z[top] = kappa
    work = (eta > 0) & ~top
    if not work.any():
        return z

    target = np.sqrt(eta[work])

    def g(x):
        return np.sqrt(np.maximum(flux.h(x), 0.0)) - target

    lo = np.zeros_like(target)
    hi = np.full_like(target, kappa)
    glo = -target
    ghi = math.sqrt(ell) - target
    # first iterate: small-argument expansion H(z) ~ Q'(0) z^2 / 2
    x = np.clip(np.sqrt(2.0 / flux.qprime0) * target, 0.0, kappa)
    side = np.zeros(target.shape, dtype=np.int8)
    width_prev = hi - lo
    done = np.zeros(target.shape, dtype=bool)
    for it in range(MAX_ITER):
        gx = g(x)
        exact = gx == 0
        left = gx < 0
        # Illinois: if the same endpoint is retained twice, halve its function value
        lo = np.where(left, x, lo)
        glo = np.where(left, gx, glo)
        hi = np.where(~left & ~exact, x, hi)
        ghi = np.where(~left & ~exact, gx, ghi)
        glo = np.where(~left & (side == 1), 0.5 * glo, glo)
        ghi = np.where(left & (side == -1), 0.5 * ghi, ghi)
        side = np.where(left, -1, 1).astype(np.int8)

        width = hi - lo
        done |= exact | (width <= 4.0 * _EPS * hi)
        if done.all():
            break
        secant = (lo * ghi - hi * glo) / (ghi - glo)
        bad = ~np.isfinite(secant) | (secant <= lo) | (secant >= hi)
        if it % 3 == 2:
            # bisection safeguard: the bracket must halve every three iterations
            bad |= width > 0.5 * width_prev
            width_prev = width
        nxt = np.where(bad, 0.5 * (lo + hi), secant)
        x = np.where(done, x, nxt)
    # pick the bracket end with the smaller residual
    res = np.where(np.abs(glo) < np.abs(ghi), lo, hi)
    z[work] = np.where(g(x) == 0, x, res)
    return z


def j_eps(ctx: InversionContext, xi):
    """Unique s in [0, s_max] with P_eps(s) = xi.

    Raises DomainError for xi < 0 or xi > xi_max (1 + 1e-12); values in the
    clamp band just above xi_max return s_max.
    """
    xi_arr = np.asarray(xi, dtype=float)
    scalar = xi_arr.ndim == 0
    xi_arr = np.atleast_1d(xi_arr)
    if np.any(~np.isfinite(xi_arr)) or np.any(xi_arr < 0):
        raise DomainError("J_eps argument must be finite and nonnegative")
    if np.any(xi_arr > ctx.xi_max * (1.0 + CLAMP_RTOL)):
        worst = float(xi_arr.max())
        raise DomainError(
            f"J_eps argument {worst:.6g} exceeds ell*eps^-2 = {ctx.xi_max:.6g}; eps is too large"
        )
    e2 = ctx.eps**2
    eta = np.minimum(xi_arr * e2, ctx.flux.ell)
    eta[xi_arr >= ctx.xi_max] = ctx.flux.ell
    s = _h_inverse(ctx.flux, eta) / e2
    return float(s[0]) if scalar else s


def j_eps_asymptotic(ctx: InversionContext, xi):
    """Leading term sqrt(2 xi / (eps^2 Q'(0))) of J_eps."""
    xi = np.asarray(xi, dtype=float)
    out = np.sqrt(2.0 * xi / (ctx.eps**2 * ctx.flux.qprime0))
    return float(out) if out.ndim == 0 else out

