"""Flux and potential families of the model u_t = Q(eps^2 u_x)_x - F'(u).

Two closed-form Perona-Malik fluxes are supported, optionally multiplied
by a positive factor ``alpha``:

    rational:  Q(s) = s / (1 + s^2),   Q~(s) = log(1 + s^2) / 2,   kappa = 1
    gaussian:  Q(s) = s exp(-s^2),     Q~(s) = (1 - exp(-s^2)) / 2, kappa = 1/sqrt(2)

The potential is the double well F(u) = |1 - u^2|^theta / (2 theta).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

FLUX_KINDS = ("rational", "gaussian")

#: default safety factor applied to eps_0 when validating ModelParams
EPS_SAFETY = 0.95


@dataclass(frozen=True)
class FluxSpec:
    """A Perona-Malik flux ``alpha * Q_kind``.

    ``kappa``, ``ell``, ``qmax`` (max of Q' on [-kappa, kappa]) and
    ``qprime0`` are filled in from closed forms at construction.
    """

    kind: str = "rational"
    alpha: float = 1.0
    kappa: float = field(init=False)
    ell: float = field(init=False)
    qmax: float = field(init=False)
    qprime0: float = field(init=False)

    def __post_init__(self):
        if self.kind not in FLUX_KINDS:
            raise DomainError(f"unknown flux kind {self.kind!r}; expected one of {FLUX_KINDS}")
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise DomainError(f"flux scale alpha must be positive, got {self.alpha}")
        kappa, ell, qmax, qp0 = _closed_form_constants(self.kind, self.alpha)
        object.__setattr__(self, "kappa", kappa)
        object.__setattr__(self, "ell", ell)
        object.__setattr__(self, "qmax", qmax)
        object.__setattr__(self, "qprime0", qp0)

    @classmethod
    def rational(cls) -> FluxSpec:
        return cls("rational", 1.0)

    @classmethod
    def gaussian(cls) -> FluxSpec:
        return cls("gaussian", 1.0)

    @classmethod
    def scaled(cls, base: FluxSpec | str, alpha: float) -> FluxSpec:
        kind = base.kind if isinstance(base, FluxSpec) else base
        prev = base.alpha if isinstance(base, FluxSpec) else 1.0
        return cls(kind, prev * alpha)

    def q(self, s):
        s = np.asarray(s, dtype=float)
        if self.kind == "rational":
            out = s / (1.0 + s * s)
        else:
            out = s * np.exp(-s * s)
        return self.alpha * out

    def dq(self, s):
        s = np.asarray(s, dtype=float)
        s2 = s * s
        if self.kind == "rational":
            out = (1.0 - s2) / (1.0 + s2) ** 2
        else:
            out = (1.0 - 2.0 * s2) * np.exp(-s2)
        return self.alpha * out

    def q_tilde(self, s):
        """Antiderivative of Q vanishing at 0 (even, nonnegative)."""
        s = np.asarray(s, dtype=float)
        s2 = s * s
        if self.kind == "rational":
            out = 0.5 * np.log1p(s2)
        else:
            out = -0.5 * np.expm1(-s2)
        return self.alpha * out

    def h(self, z):
        """H(z) = z Q(z) - Q~(z); P_eps(s) = eps^-2 H(eps^2 s)."""
        z = np.asarray(z, dtype=float)
        z2 = z * z
        if self.kind == "rational":
            # z^2/(1+z^2) - log1p(z^2)/2, written to keep relative accuracy near 0
            out = z2 / (1.0 + z2) - 0.5 * np.log1p(z2)
        else:
            out = z2 * np.exp(-z2) + 0.5 * np.expm1(-z2)
        return self.alpha * out

    def describe(self) -> str:
        return self.kind if self.alpha == 1.0 else f"{self.kind}*{self.alpha:g}"


def _closed_form_constants(kind: str, alpha: float) -> tuple[float, float, float, float]:
    if kind == "rational":
        kappa = 1.0
        ell = 0.5 - 0.5 * math.log(2.0)
    else:
        kappa = 1.0 / math.sqrt(2.0)
        ell = math.exp(-0.5) - 0.5
    # Q' is even and decreasing on [0, kappa] for both kinds, so its max is Q'(0).
    return kappa, alpha * ell, alpha * 1.0, alpha * 1.0


def q_eval(flux: FluxSpec, s):
    return flux.q(s)


def q_prime(flux: FluxSpec, s):
    return flux.dq(s)


def q_tilde(flux: FluxSpec, s):
    return flux.q_tilde(s)


def derived_constants(flux: FluxSpec) -> tuple[float, float, float, float]:
    """Return ``(kappa, ell, Qmax, Q'(0))``."""
    return flux.kappa, flux.ell, flux.qmax, flux.qprime0


@dataclass(frozen=True)
class PotentialSpec:
    """Double-well potential F(u) = |1 - u^2|^theta / (2 theta).

    ``lam1``/``lam2`` bracket theta F(u) / |1 -+ u|^theta on the windows
    |u -+ 1| < eta; they are found numerically by dense sampling.
    """

    theta: float = 2.0
    eta: float = 0.1
    lam1: float = field(init=False)
    lam2: float = field(init=False)

    def __post_init__(self):
        if not (self.theta > 1 and math.isfinite(self.theta)):
            raise DomainError(f"theta must be > 1, got {self.theta}")
        if not 0 < self.eta < 1:
            raise DomainError(f"eta must lie in (0, 1), got {self.eta}")
        lam1, lam2 = _sandwich_constants(self, self.eta)
        object.__setattr__(self, "lam1", lam1)
        object.__setattr__(self, "lam2", lam2)

    def f(self, u):
        u = np.asarray(u, dtype=float)
        return np.abs(1.0 - u * u) ** self.theta / (2.0 * self.theta)

    def df(self, u):
        u = np.asarray(u, dtype=float)
        g = 1.0 - u * u
        return -u * np.sign(g) * np.abs(g) ** (self.theta - 1.0)

    def d2f(self, u, floor: float = 1e-16):
        """F''(u); for theta < 2 the blow-up at +-1 is capped via ``floor`` on |1-u^2|."""
        u = np.asarray(u, dtype=float)
        g = 1.0 - u * u
        ag = np.abs(g)
        if self.theta < 2.0:
            ag = np.maximum(ag, floor)
        return -np.sign(g) * ag ** (self.theta - 1.0) + 2.0 * (self.theta - 1.0) * u * u * ag ** (self.theta - 2.0)

    def f_drop(self, s, sbar):
        """F(s) - F(sbar) for |s| <= sbar < 1, without cancellation when s ~ sbar."""
        s = np.asarray(s, dtype=float)
        gb = 1.0 - sbar * sbar
        # 1 - s^2 = gb + (sbar - |s|)(sbar + |s|)
        d = (sbar - np.abs(s)) * (sbar + np.abs(s))
        return gb ** self.theta * np.expm1(self.theta * np.log1p(d / gb)) / (2.0 * self.theta)

    @property
    def fmax(self) -> float:
        return max_on_interval(self.f, -1.0, 1.0)


def _sandwich_constants(p: PotentialSpec, eta: float, samples: int = 4001) -> tuple[float, float]:
    lo, hi = math.inf, -math.inf
    for well in (1.0, -1.0):
        u = well + np.linspace(-eta, eta, samples)
        dist = np.abs(u - well)
        keep = dist > 0
        ratio = p.theta * p.f(u[keep]) / dist[keep] ** p.theta
        lo = min(lo, float(ratio.min()))
        hi = max(hi, float(ratio.max()))
    return lo, hi


def f_eval(p: PotentialSpec, u):
    return p.f(u)


def f_prime(p: PotentialSpec, u):
    return p.df(u)


def max_on_interval(func, lo: float, hi: float, tol: float = 1e-12) -> float:
    """Golden-section search for the maximum of a unimodal ``func`` on [lo, hi]."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = float(func(c)), float(func(d))
    while b - a > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = float(func(c))
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = float(func(d))
    x = 0.5 * (a + b)
    return max(float(func(x)), float(func(lo)), float(func(hi)))


def eps0_of(flux: FluxSpec, potential: PotentialSpec) -> float:
    """Largest admissible eps: sqrt(ell / max_{[-1,1]} F)."""
    return math.sqrt(flux.ell / potential.fmax)


@dataclass(frozen=True)
class ModelParams:
    eps: float
    a: float
    b: float
    flux: FluxSpec = field(default_factory=FluxSpec.rational)
    potential: PotentialSpec = field(default_factory=PotentialSpec)
    allow_large_eps: bool = False

    def __post_init__(self):
        if not self.eps > 0:
            raise DomainError(f"eps must be positive, got {self.eps}")
        if not self.a < self.b:
            raise DomainError(f"need a < b, got [{self.a}, {self.b}]")
        if not self.allow_large_eps and self.eps >= EPS_SAFETY * self.eps0:
            raise DomainError(
                f"eps = {self.eps} must be below {EPS_SAFETY} * eps0 = {EPS_SAFETY * self.eps0:.6g}"
            )

    @property
    def eps0(self) -> float:
        return eps0_of(self.flux, self.potential)

    @property
    def theta(self) -> float:
        return self.potential.theta

    @property
    def length(self) -> float:
        return self.b - self.a

    def with_eps(self, eps: float) -> ModelParams:
        return ModelParams(eps, self.a, self.b, self.flux, self.potential, self.allow_large_eps)
