"""Stationary solutions built by quadrature of the first-order reduction.

Every stationary profile solves P_eps(phi') = F(phi) + C on each monotone
piece, i.e. phi' = J_eps(F(phi) + C).  Integrating dx = du / J_eps(...)
gives x as a function of u; the map is tabulated with composite
Gauss-Legendre quadrature after an endpoint substitution that removes the
singular behaviour of the integrand, then inverted by cubic Hermite
interpolation using the exact slopes du/dx.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .errors import DomainError, GeometryError, NoSolutionError, QuadratureError
from .inversion import InversionContext, j_eps
from .model import ModelParams
from .quadrature import cumulative_table, geometric_breaks, integrate

# 1 - u below this is not representable next to 1.0 in double precision
_TAIL_FLOOR = 2.0**-60


@dataclass
class Profile:
    """Function sampled on a uniform grid over [x[0], x[-1]]."""

    x: np.ndarray
    u: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.u = np.asarray(self.u, dtype=float)
        if self.x.shape != self.u.shape or self.x.ndim != 1:
            raise ValueError("x and u must be 1-d arrays of equal length")

    @property
    def h(self) -> float:
        return (self.x[-1] - self.x[0]) / (len(self.x) - 1)

    @property
    def a(self) -> float:
        return float(self.x[0])

    @property
    def b(self) -> float:
        return float(self.x[-1])

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        buf.write("x,u\n")
        for xi, ui in zip(self.x, self.u):
            buf.write(f"{float(xi)!r},{float(ui)!r}\n")
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text, encoding="utf-8", newline="\n")
        return text

    @classmethod
    def from_csv(cls, source) -> Profile:
        text = Path(source).read_text(encoding="utf-8") if not _looks_like_csv(source) else source
        rows = list(csv.reader(io.StringIO(text)))
        if rows[0] != ["x", "u"]:
            raise ValueError("profile CSV must start with header 'x,u'")
        data = np.array([[float(r[0]), float(r[1])] for r in rows[1:] if r], dtype=float)
        return cls(data[:, 0], data[:, 1])


def _looks_like_csv(source) -> bool:
    return isinstance(source, str) and "\n" in source


def uniform_grid(a: float, b: float, n_points: int) -> np.ndarray:
    if n_points < 3:
        raise ValueError("need at least 3 grid points")
    return np.linspace(a, b, n_points)


@dataclass(frozen=True)
class WaveReport:
    regime: str  # "contact" (theta < 2), "exponential" (theta = 2), "algebraic" (theta > 2)
    x1e: float | None = None
    x2e: float | None = None
    decay_fit: tuple[float, float] | None = None


def theta_regime(theta: float) -> str:
    if theta < 2.0:
        return "contact"
    if theta == 2.0:
        return "exponential"
    return "algebraic"


class StandingWave:
    """The increasing standing wave Phi_eps with Phi_eps(0) = 0.

    Tabulates x(u) = int_0^u ds / J_eps(F(s)) on u in [0, 1) and uses
    oddness (F is even) for the negative half line.  ``reach`` is the
    largest |x| the table must cover for theta > 2 (algebraic tails never
    round to 1).
    """

    def __init__(self, m: ModelParams, reach: float | None = None, dx_rel: float = 5e-3):
        if m.eps >= m.eps0:
            raise DomainError(f"eps = {m.eps} >= eps0 = {m.eps0:.6g}: F exceeds the range of J_eps")
        self.m = m
        self.ctx = InversionContext.from_model(m)
        self.theta = m.theta
        self.regime = theta_regime(self.theta)
        reach = max(m.length, 1.0) if reach is None else float(reach)
        self._build(reach, dx_rel * m.eps)

    # parametrisations 1 - u = w(tau) chosen so that dx/dtau stays bounded
    def _w(self, tau):
        th = self.theta
        if th < 2.0:
            return (1.0 - tau) ** (2.0 / (2.0 - th))
        if th == 2.0:
            return np.exp(-tau)
        return (1.0 + tau) ** (-2.0 / (th - 2.0))

    def _dw(self, tau):
        th = self.theta
        if th < 2.0:
            p = 2.0 / (2.0 - th)
            return p * (1.0 - tau) ** (p - 1.0)
        if th == 2.0:
            return np.exp(-tau)
        q = 2.0 / (th - 2.0)
        return q * (1.0 + tau) ** (-q - 1.0)

    def _f_of_w(self, w):
        # F at u = 1 - w, using 1 - u^2 = w (2 - w) so tiny w is not rounded away
        th = self.theta
        return (w * (2.0 - w)) ** th / (2.0 * th)

    def _dxdtau(self, tau):
        slope = j_eps(self.ctx, self._f_of_w(self._w(tau)))
        return self._dw(tau) / slope

    def _build(self, reach: float, dx_target: float):
        th = self.theta
        if th < 2.0:
            breaks = np.linspace(0.0, 1.0, 201)
            tb, cum, err = cumulative_table(self._dxdtau, breaks, dx_target)
            if not math.isfinite(cum[-1]) or err > 1e-9 * max(cum[-1], 1e-300):
                raise QuadratureError(f"contact-point integral did not converge (error estimate {err:.3g})")
            self.x1e = float(cum[-1])
            self.x2e = -self.x1e
        elif th == 2.0:
            tau_end = -math.log(_TAIL_FLOOR)
            breaks = np.linspace(0.0, tau_end, 401)
            tb, cum, _ = cumulative_table(self._dxdtau, breaks, dx_target)
            self.x1e = self.x2e = None
        else:
            # extend geometrically until the table reaches ``reach``
            tb_parts, cum_parts = [np.array([0.0])], [np.array([0.0])]
            tau0, x0, span = 0.0, 0.0, 1.0
            while x0 < reach * 1.05 and self._w(tau0) > _TAIL_FLOOR:
                breaks = np.linspace(tau0, tau0 + span, 41)
                tbk, cumk, _ = cumulative_table(self._dxdtau, breaks, dx_target)
                tb_parts.append(tbk[1:])
                cum_parts.append(x0 + cumk[1:])
                tau0, x0 = float(tbk[-1]), float(x0 + cumk[-1])
                span *= 2.0
            tb = np.concatenate(tb_parts)
            cum = np.concatenate(cum_parts)
            self.x1e = self.x2e = None
        w = self._w(tb)
        u = 1.0 - w
        slope = j_eps(self.ctx, self._f_of_w(w))
        if th < 2.0:
            u[-1], slope[-1] = 1.0, 0.0
        keep = np.concatenate(([True], np.diff(cum) > 0))
        self._x, self._u, self._slope = cum[keep], u[keep], slope[keep]
        self._spline = CubicHermiteSpline(self._x, self._u, self._slope, extrapolate=False)
        self.x_end = float(self._x[-1])
        self.saturates = th <= 2.0 or self._w(tb[-1]) <= _TAIL_FLOOR

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        ax = np.abs(x)
        out = np.empty_like(ax)
        inside = ax <= self.x_end
        out[inside] = self._spline(ax[inside])
        if np.any(~inside):
            if not self.saturates:
                raise DomainError(f"|x| = {ax.max():.6g} beyond tabulated reach {self.x_end:.6g}")
            out[~inside] = 1.0
        np.clip(out, 0.0, 1.0, out=out)
        return np.sign(x) * out

    def slope(self, x):
        """Phi_eps'(x) = J_eps(F(Phi_eps(x)))."""
        return j_eps(self.ctx, self.m.potential.f(self(x)))

    def decay_fit(self) -> tuple[float, float] | None:
        """Fit of the tail over 1 - Phi in [1e-6, 1e-1].

        theta = 2: 1 - Phi ~ c1 exp(-c2 x); theta > 2: 1 - Phi ~ d1 x^-d2.
        """
        if self.regime == "contact":
            return None
        w = 1.0 - self._u
        sel = (w >= 1e-6) & (w <= 1e-1) & (self._x > 0)
        if sel.sum() < 3:
            return None
        x, lw = self._x[sel], np.log(w[sel])
        if self.regime == "exponential":
            slope, icpt = np.polyfit(x, lw, 1)
            return float(math.exp(icpt)), float(-slope)
        slope, icpt = np.polyfit(np.log(x), lw, 1)
        return float(math.exp(icpt)), float(-slope)


def _report(wave: StandingWave) -> WaveReport:
    return WaveReport(wave.regime, wave.x1e, wave.x2e, wave.decay_fit())


def standing_wave(m: ModelParams, n_points: int) -> tuple[Profile, WaveReport]:
    """Increasing standing wave sampled on a uniform grid over [a, b]."""
    wave = StandingWave(m, reach=max(abs(m.a), abs(m.b)))
    x = uniform_grid(m.a, m.b, n_points)
    u = np.maximum.accumulate(wave(x))
    return Profile(x, u, {"kind": "standing_wave", "eps": m.eps, "theta": m.theta}), _report(wave)


def standing_wave_decreasing(m: ModelParams, n_points: int) -> tuple[Profile, WaveReport]:
    """Psi_eps(x) = Phi_eps(-x)."""
    wave = StandingWave(m, reach=max(abs(m.a), abs(m.b)))
    x = uniform_grid(m.a, m.b, n_points)
    u = np.minimum.accumulate(wave(-x))
    return Profile(x, u, {"kind": "standing_wave_decreasing", "eps": m.eps, "theta": m.theta}), _report(wave)


def _check_zeros(m: ModelParams, zeros) -> np.ndarray:
    h = np.asarray(zeros, dtype=float)
    if h.ndim != 1 or len(h) == 0:
        raise GeometryError("need at least one layer position")
    if np.any(np.diff(h) <= 0):
        raise GeometryError("layer positions must be strictly increasing")
    if h[0] <= m.a or h[-1] >= m.b:
        raise GeometryError(f"layer positions must lie strictly inside ({m.a}, {m.b})")
    return h


def glue_layers(wave: StandingWave, zeros: np.ndarray, start_sign: int, x: np.ndarray) -> np.ndarray:
    """u(x) = Phi_eps(s_j (x - h_j)) on the cell [m_j, m_{j+1}] of midpoints.

    ``start_sign`` is the sign of u near x = a; consecutive layers alternate
    between increasing and decreasing.
    """
    h = np.asarray(zeros, dtype=float)
    mids = 0.5 * (h[1:] + h[:-1])
    piece = np.searchsorted(mids, x, side="right")
    signs = -start_sign * (-1.0) ** np.arange(len(h))
    return wave(signs[piece] * (x - h[piece]))


def compacton(m: ModelParams, zeros, start_sign: int = -1, n_points: int = 2049) -> Profile:
    """Stationary solution touching -1 and +1 with zeros exactly at ``zeros``.

    Exists only for 1 < theta < 2; each layer is a translated (reflected)
    standing wave with compact transition region [h + x2e, h + x1e].
    """
    if not 1.0 < m.theta < 2.0:
        raise DomainError(f"compactons exist only for 1 < theta < 2, got theta = {m.theta}")
    if start_sign not in (-1, 1):
        raise ValueError("start_sign must be -1 or +1")
    h = _check_zeros(m, zeros)
    wave = StandingWave(m)
    half = max(wave.x1e, abs(wave.x2e))
    if h[0] - half <= m.a:
        raise GeometryError(f"first layer too close to a: h_1 - {half:.6g} = {h[0] - half:.6g} <= a = {m.a}")
    if h[-1] + half >= m.b:
        raise GeometryError(f"last layer too close to b: h_N + {half:.6g} = {h[-1] + half:.6g} >= b = {m.b}")
    gaps = np.diff(h)
    if len(gaps) and gaps.min() <= 2.0 * half:
        i = int(np.argmin(gaps))
        raise GeometryError(
            f"layers {i + 1} and {i + 2} are {gaps[i]:.6g} apart, need more than 2 * {half:.6g}"
        )
    x = uniform_grid(m.a, m.b, n_points)
    u = glue_layers(wave, h, start_sign, x)
    meta = {"kind": "compacton", "eps": m.eps, "theta": m.theta, "zeros": h.tolist(),
            "start_sign": start_sign, "x1e": wave.x1e, "x2e": wave.x2e}
    return Profile(x, u, meta)


def transition_layer_datum(m: ModelParams, zeros, n_points: int = 2049, start_sign: int = -1) -> Profile:
    """Standing-wave pieces glued at the midpoints between consecutive zeros.

    Not stationary for theta >= 2; used as an initial datum with energy
    at most N c_eps.
    """
    if start_sign not in (-1, 1):
        raise ValueError("start_sign must be -1 or +1")
    h = _check_zeros(m, zeros)
    wave = StandingWave(m, reach=m.length)
    x = uniform_grid(m.a, m.b, n_points)
    u = glue_layers(wave, h, start_sign, x)
    meta = {"kind": "transition_layers", "eps": m.eps, "theta": m.theta, "zeros": h.tolist(),
            "start_sign": start_sign}
    return Profile(x, u, meta)


# ---------------------------------------------------------------------------
# periodic orbits, theta >= 2


def _period_breaks(sbar: float) -> np.ndarray:
    """Breakpoints in t = sqrt(sbar - s) on [0, sqrt(sbar)], graded toward t = 0.

    The integrand varies on the scale sqrt(1 - sbar) near t = 0.
    """
    top = math.sqrt(sbar)
    inner = 1e-3 * math.sqrt(max(1.0 - sbar, 1e-300))
    return geometric_breaks(0.0, top, 0.5, smallest=min(inner / top, 1e-3))


def _quarter_integrand(m: ModelParams, ctx: InversionContext, sbar: float):
    pot = m.potential
    # t -> 0 limit: F(sbar - t^2) - F(sbar) ~ |F'(sbar)| t^2 and J_eps(xi) ~ sqrt(2 xi / (eps^2 Q'(0)))
    k0 = m.eps * math.sqrt(2.0 * m.flux.qprime0 / abs(float(pot.df(sbar))))

    def k(t):
        t = np.asarray(t, dtype=float)
        drop = pot.f_drop(sbar - t * t, sbar)
        out = np.full(t.shape, k0)
        ok = drop > 0
        out[ok] = 2.0 * t[ok] / j_eps(ctx, drop[ok])
        return out

    return k


def period_T(m: ModelParams, sbar: float) -> float:
    """Half period T_eps(sbar) = int_{-sbar}^{sbar} ds / J_eps(F(s) - F(sbar))."""
    if not 0.0 < sbar < 1.0:
        raise DomainError(f"sbar must lie in (0, 1), got {sbar}")
    if m.theta < 2.0:
        raise DomainError("periodic orbits are constructed for theta >= 2")
    ctx = InversionContext.from_model(m)
    k = _quarter_integrand(m, ctx, sbar)
    # F even: the integral over [-sbar, sbar] is twice the one over [0, sbar]
    return 2.0 * integrate(k, _period_breaks(sbar), order=24)


def period_T_leading(m: ModelParams, sbar: float) -> float:
    """eps sqrt(Q'(0)/2) int_{-sbar}^{sbar} ds / sqrt(F(s) - F(sbar))."""
    pot = m.potential

    def k(t):
        drop = pot.f_drop(sbar - t * t, sbar)
        return 2.0 * t / np.sqrt(drop)

    return m.eps * math.sqrt(m.flux.qprime0 / 2.0) * 2.0 * integrate(k, _period_breaks(sbar), order=24)


def solve_sbar(m: ModelParams, N: int, tol: float = 1e-8) -> float:
    """The sbar in (0, 1) with T_eps(sbar) = (b - a) / N."""
    if N < 1:
        raise DomainError("N must be a positive integer")
    target = m.length / N
    probe = 1e-3
    if period_T(m, probe) >= target:
        raise NoSolutionError(
            f"T_eps({probe}) = {period_T(m, probe):.6g} already exceeds (b-a)/N = {target:.6g}; eps too large"
        )
    # bisection in w = -log(1 - sbar), where T grows roughly linearly (theta = 2)
    lo = -math.log1p(-probe)
    hi = None
    for k in range(1, 16):
        w = k * math.log(10.0)
        if period_T(m, -math.expm1(-w)) > target:
            hi = w
            break
        lo = w
    if hi is None:
        raise NoSolutionError(f"T_eps stays below (b-a)/N = {target:.6g} for sbar up to 1 - 1e-15")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        tm = period_T(m, -math.expm1(-mid))
        if abs(tm - target) <= tol * target:
            return -math.expm1(-mid)
        if tm < target:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-15 * hi:
            break
    return -math.expm1(-0.5 * (lo + hi))


@dataclass
class PeriodicOrbit:
    """Rising half-orbit from -sbar to sbar on [0, T], tabulated for interpolation."""

    sbar: float
    T: float
    spline: CubicHermiteSpline

    def __call__(self, x):
        """Periodic orbit with psi(0) = -sbar, psi'(0) = 0, period 2T."""
        x = np.asarray(x, dtype=float)
        ph = np.mod(x, 2.0 * self.T)
        ph = np.where(ph > self.T, 2.0 * self.T - ph, ph)
        # the rising half is odd about T/2
        y = ph - 0.5 * self.T
        val = self.spline(np.abs(y))
        return np.sign(y) * np.clip(val, 0.0, self.sbar)


def periodic_orbit(m: ModelParams, sbar: float, dx_rel: float = 2e-3) -> PeriodicOrbit:
    ctx = InversionContext.from_model(m)
    k = _quarter_integrand(m, ctx, sbar)
    tb, cum, _ = cumulative_table(k, _period_breaks(sbar), dx_rel * m.eps, order=12)
    quarter = cum[-1]
    # cum runs from t = 0 (u = sbar) to t = sqrt(sbar) (u = 0); x measured from the zero
    xq = quarter - cum
    u = sbar - tb * tb
    slope = np.empty_like(u)
    slope[1:] = j_eps(ctx, m.potential.f_drop(u[1:], sbar))
    slope[0] = 0.0
    xq, u, slope = xq[::-1], u[::-1], slope[::-1]
    u[0] = 0.0
    keep = np.concatenate(([True], np.diff(xq) > 0))
    spline = CubicHermiteSpline(xq[keep], u[keep], slope[keep], extrapolate=True)
    return PeriodicOrbit(sbar, 2.0 * quarter, spline)


def periodic_profile(m: ModelParams, N: int, n_points: int = 2049) -> Profile:
    """Stationary solution on [a, b] with N equidistant zeros oscillating in [-sbar, sbar]."""
    sbar = solve_sbar(m, N)
    orbit = periodic_orbit(m, sbar)
    x = uniform_grid(m.a, m.b, n_points)
    u = orbit(x - m.a)
    zeros = m.a + orbit.T * (0.5 + np.arange(N))
    meta = {"kind": "periodic", "eps": m.eps, "theta": m.theta, "sbar": sbar, "T": orbit.T,
            "zeros": zeros.tolist()}
    return Profile(x, u, meta)
