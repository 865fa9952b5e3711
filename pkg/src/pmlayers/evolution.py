"""Time integration of u_t = Q(eps^2 u_x)_x - F'(u) with zero-flux ends.

Space: vertex-centred finite volumes on a uniform grid.  Cell fluxes are
Q(eps^2 (u_{i+1} - u_i) / h); the two end nodes own half control volumes
and see a zero outer flux.  With these weights the right-hand side is
minus the (weighted) gradient of the discrete energy in ``energy``.

Time: backward Euler with damped Newton on the tridiagonal Jacobian
(``implicit``) or forward Euler under the diffusive and reactive step
limits (``explicit``, meant for validation).  The implicit step size is
controlled by a local error estimate and by a cap on the relative change
of u_t per step, which keeps the step short whenever the slow layer
dynamics accelerate (collapses).
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import solve_banded

from .energy import energy, trapezoid_weights
from .errors import BackwardRegimeError, ConfigError, NewtonError, StiffnessError
from .layers import zeros_of
from .model import ModelParams
from .stationary import Profile

SCHEMES = ("implicit", "explicit")
POLICIES = ("error", "warn", "clamp")


@dataclass(frozen=True)
class StepperConfig:
    scheme: str = "implicit"
    dt_init: float = 1e-3
    dt_max: float = 1e3
    dt_min: float = 1e-12
    newton_tol: float = 1e-11
    newton_max_iter: int = 12
    energy_drift_tol: float = 1e-9
    backward_regime_policy: str = "warn"
    #: local error tolerance (max norm) for the implicit scheme
    err_tol: float = 1e-5
    #: allowed relative change of u_t per implicit step
    rate_tol: float = 0.1
    #: multiple of the round-off level of u_t below which changes are ignored
    noise_factor: float = 1e3
    #: dt_max is raised to this once ||u_t||^2 drops below ``quiet_ut``
    dt_max_quiet: float = 1e6
    quiet_ut: float = 1e-14
    grow_factor: float = 1.2
    grow_after: int = 5
    max_halvings: int = 40

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ConfigError("stepper.scheme", f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        if self.backward_regime_policy not in POLICIES:
            raise ConfigError("stepper.backward_regime_policy", f"expected one of {POLICIES}")
        if not 0 < self.dt_min <= self.dt_init <= self.dt_max:
            raise ConfigError("stepper.dt_init", "need 0 < dt_min <= dt_init <= dt_max")


@dataclass
class StepStats:
    steps: int = 0
    rejected: int = 0
    newton_iters: int = 0
    last_dt: float = 0.0
    dt_next: float = 0.0
    accepts_in_row: int = 0
    backward_steps: int = 0
    dissipation: float = 0.0  # sum dt * eps^-1 ||(u_{n+1} - u_n) / dt||^2


@dataclass
class State:
    t: float
    u: Profile
    stats: StepStats = field(default_factory=StepStats)

    def copy(self) -> State:
        return State(self.t, Profile(self.u.x.copy(), self.u.u.copy(), dict(self.u.meta)), replace(self.stats))


@dataclass
class DiagnosticsRecord:
    t: float
    E: float
    ut_l2sq: float
    n_zeros: int
    zero_positions: list[float]
    max_grad: float
    dissipation: float = 0.0
    steps: int = 0
    state: State | None = field(default=None, repr=False)


# ---------------------------------------------------------------------------
# semi-discrete operator


def _grad_args(m: ModelParams, u: np.ndarray, h: float) -> np.ndarray:
    return m.eps**2 * np.diff(u) / h


def _divergence(flux: np.ndarray, h: float) -> np.ndarray:
    n = len(flux) + 1
    div = np.empty(n)
    div[1:-1] = (flux[1:] - flux[:-1]) / h
    # half control volumes at the ends, zero outer flux
    div[0] = 2.0 * flux[0] / h
    div[-1] = -2.0 * flux[-1] / h
    return div


def rhs(m: ModelParams, u: np.ndarray, h: float, clamp: bool = False) -> np.ndarray:
    """Semi-discrete right-hand side at the grid nodes."""
    u = np.asarray(u, dtype=float)
    if len(u) < 3:
        raise ValueError("need at least 3 nodes")
    s = _grad_args(m, u, h)
    if clamp:
        s = np.clip(s, -m.flux.kappa, m.flux.kappa)
    return _divergence(m.flux.q(s), h) - m.potential.df(u)


def jacobian_bands(m: ModelParams, u: np.ndarray, h: float, clamp: bool = False) -> np.ndarray:
    """d rhs / d u in scipy ``solve_banded`` (1, 1) layout."""
    n = len(u)
    s = _grad_args(m, u, h)
    c = m.flux.dq(s) * m.eps**2 / h / h  # d flux_{i+1/2} / d u_{i+1}, divided by h
    if clamp:
        c = np.where(np.abs(s) > m.flux.kappa, 0.0, c)
    ab = np.zeros((3, n))
    # row i: c_{i-1} u_{i-1} - (c_{i-1} + c_i) u_i + c_i u_{i+1}
    ab[0, 1:] = c  # super-diagonal, entry (i, i+1)
    ab[2, :-1] = c  # sub-diagonal, entry (i+1, i)
    diag = np.zeros(n)
    diag[:-1] -= c
    diag[1:] -= c
    ab[1] = diag
    # end rows carry the factor 2 of the half control volumes
    ab[1, 0] *= 2.0
    ab[0, 1] *= 2.0
    ab[1, -1] *= 2.0
    ab[2, -2] *= 2.0
    ab[1] -= m.potential.d2f(u)
    return ab


def jacobian(m: ModelParams, u: np.ndarray, h: float) -> np.ndarray:
    """Dense Jacobian (for tests and small grids)."""
    ab = jacobian_bands(m, np.asarray(u, dtype=float), h)
    n = len(u)
    J = np.diag(ab[1])
    J += np.diag(ab[0, 1:], 1)
    J += np.diag(ab[2, :-1], -1)
    assert J.shape == (n, n)
    return J


def weighted_sq_norm(v: np.ndarray, h: float) -> float:
    """Trapezoid L2 norm squared on the grid."""
    return float(np.sum(trapezoid_weights(len(v)) * h * v * v))


def max_grad(m: ModelParams, u: np.ndarray, h: float) -> float:
    return float(np.max(np.abs(_grad_args(m, u, h))))


# ---------------------------------------------------------------------------
# single steps


def _check_backward(m: ModelParams, cfg: StepperConfig, u: np.ndarray, h: float, stats: StepStats) -> bool:
    g = max_grad(m, u, h)
    if g <= m.flux.kappa:
        return False
    stats.backward_steps += 1
    if cfg.backward_regime_policy == "error":
        raise BackwardRegimeError(f"eps^2 |u_x| = {g:.6g} exceeds kappa = {m.flux.kappa:.6g}")
    if cfg.backward_regime_policy == "warn" and stats.backward_steps == 1:
        warnings.warn(f"backward regime entered: eps^2 |u_x| = {g:.6g} > kappa", RuntimeWarning, stacklevel=3)
    return cfg.backward_regime_policy == "clamp"


def explicit_dt(m: ModelParams, u: np.ndarray, h: float) -> float:
    q_eff = float(np.max(np.abs(m.flux.dq(_grad_args(m, u, h)))))
    diff = 0.4 * h * h / (m.eps**2 * q_eff) if q_eff > 0 else math.inf
    f2 = float(np.max(np.abs(m.potential.d2f(u))))
    react = 0.4 / f2 if f2 > 0 else math.inf
    return min(diff, react)


def _rhs_noise(m: ModelParams, u: np.ndarray, h: float) -> float:
    """Round-off level of rhs: unit round-off times a bound on the Jacobian norm."""
    jnorm = 4.0 * m.eps**2 * m.flux.qmax / h / h + float(np.max(np.abs(m.potential.d2f(u))))
    return float(np.finfo(float).eps) * jnorm


def _newton_be(m, cfg, u, h, dt, clamp):
    """Solve v - u - dt rhs(v) = 0; returns (v, rhs(v), iterations) or None on failure."""
    v = u.copy()
    r = rhs(m, v, h, clamp)
    res = v - u - dt * r
    norm = float(np.max(np.abs(res)))
    for it in range(1, cfg.newton_max_iter + 1):
        ab = -dt * jacobian_bands(m, v, h, clamp)
        ab[1] += 1.0
        try:
            delta = solve_banded((1, 1), ab, -res)
        except (np.linalg.LinAlgError, ValueError):
            return None
        if not np.all(np.isfinite(delta)):
            return None
        if float(np.max(np.abs(delta))) <= cfg.newton_tol:
            # converged in the update norm; the residual may sit at a round-off floor
            # (nodes at a well with unbounded F'' for theta < 2)
            w = v + delta
            return w, rhs(m, w, h, clamp), it
        lam = 1.0
        while True:
            w = v + lam * delta
            rw = rhs(m, w, h, clamp)
            resw = w - u - dt * rw
            nw = float(np.max(np.abs(resw)))
            if nw < norm or lam < 1e-3:
                break
            lam *= 0.5
        if nw >= norm and lam < 1e-3 and norm > cfg.newton_tol:
            return None
        v, r, res, norm = w, rw, resw, nw
        if float(np.max(np.abs(lam * delta))) <= cfg.newton_tol or norm <= cfg.newton_tol * 1e-2:
            return v, r, it
    return None


def step(m: ModelParams, cfg: StepperConfig, state: State, dt_cap: float = math.inf) -> State:
    """Advance by one accepted step (never beyond ``state.t + dt_cap``)."""
    u = state.u.u
    h = state.u.h
    stats = replace(state.stats)
    clamp = _check_backward(m, cfg, u, h, stats)
    if cfg.scheme == "explicit":
        dt = min(explicit_dt(m, u, h), dt_cap)
        if dt < cfg.dt_min and dt < dt_cap:
            raise StiffnessError(f"explicit step {dt:.3g} below dt_min = {cfg.dt_min:.3g}")
        r = rhs(m, u, h, clamp)
        v = u + dt * r
        return _accept(m, state, stats, v, dt, dt, h)

    dt_nominal = stats.dt_next if stats.dt_next > 0 else cfg.dt_init
    r0 = rhs(m, u, h, clamp)
    r0_norm = float(np.max(np.abs(r0)))
    noise = _rhs_noise(m, u, h) * cfg.noise_factor
    halvings = 0
    while True:
        dt = min(dt_nominal, dt_cap)
        out = _newton_be(m, cfg, u, h, dt, clamp)
        ok = False
        if out is not None:
            v, r1, iters = out
            stats.newton_iters += iters
            change = float(np.max(np.abs(r1 - r0)))
            err = 0.5 * dt * change
            scale = max(r0_norm, float(np.max(np.abs(r1))))
            rate_ok = change <= cfg.rate_tol * scale + noise
            ok = err <= cfg.err_tol and rate_ok
        if ok:
            break
        stats.rejected += 1
        stats.accepts_in_row = 0
        halvings += 1
        dt_nominal = 0.5 * dt
        if dt_nominal < cfg.dt_min:
            if out is None:
                raise NewtonError(f"Newton failed down to dt = {dt:.3g} at t = {state.t:.6g}")
            raise StiffnessError(f"step size fell below dt_min = {cfg.dt_min:.3g} at t = {state.t:.6g}")
        if halvings > cfg.max_halvings:
            raise NewtonError(f"no acceptable step after {halvings} halvings at t = {state.t:.6g}")

    # the step was limited only by dt_cap: keep the nominal size for the next step
    new = _accept(m, state, stats, v, dt, dt_nominal, h)
    s = new.stats
    s.accepts_in_row += 1
    ut = weighted_sq_norm(r1, h)
    dt_max = cfg.dt_max_quiet if ut < cfg.quiet_ut else cfg.dt_max
    if s.accepts_in_row >= cfg.grow_after:
        s.dt_next = min(dt_nominal * cfg.grow_factor, dt_max)
        s.accepts_in_row = 0
    else:
        s.dt_next = min(dt_nominal, dt_max)
    return new


def _accept(m, state, stats, v, dt, dt_nominal, h) -> State:
    du = (v - state.u.u) / dt
    stats.dissipation += dt * weighted_sq_norm(du, h) / m.eps
    stats.steps += 1
    stats.last_dt = dt
    stats.dt_next = dt_nominal
    return State(state.t + dt, Profile(state.u.x, v, state.u.meta), stats)


# ---------------------------------------------------------------------------
# long runs


def geometric_checkpoints(horizon: float, first: float = 1e-2, per_decade: int = 10) -> np.ndarray:
    """0, first, ..., horizon with ``per_decade`` points per factor 10."""
    if horizon <= first:
        return np.array([0.0, horizon])
    k = math.ceil(per_decade * math.log10(horizon / first))
    ts = first * 10.0 ** (np.arange(k + 1) / per_decade)
    ts = ts[ts < horizon * (1 - 1e-12)]
    return np.concatenate(([0.0], ts, [horizon]))


def diagnostics(m: ModelParams, state: State, keep_state: bool = True) -> DiagnosticsRecord:
    u, h = state.u.u, state.u.h
    zs = zeros_of(state.u)
    return DiagnosticsRecord(
        t=state.t,
        E=energy(m, u, h).total,
        ut_l2sq=weighted_sq_norm(rhs(m, u, h), h),
        n_zeros=len(zs),
        zero_positions=[float(z) for z in zs],
        max_grad=max_grad(m, u, h),
        dissipation=state.stats.dissipation,
        steps=state.stats.steps,
        state=state.copy() if keep_state else None,
    )


def distance_to_wells(u: Profile) -> float:
    """min over c in {-1, +1} of the trapezoid L1 norm of u - c."""
    w = trapezoid_weights(len(u.u)) * u.h
    return float(min(np.sum(w * np.abs(u.u - 1.0)), np.sum(w * np.abs(u.u + 1.0))))


CONVERGED_L1 = 1e-6


def evolve(
    m: ModelParams,
    cfg: StepperConfig,
    u0: Profile | State,
    horizon: float,
    checkpoints=None,
    keep_states: bool = True,
    stop_when=None,
    on_record=None,
) -> tuple[list[DiagnosticsRecord], State]:
    """Integrate to ``horizon`` (absolute time), recording diagnostics at checkpoints.

    ``u0`` may be a State to restart from a checkpoint.  ``stop_when(record)``
    ends the run early when it returns True; runs also stop once the solution
    is within L1 distance 1e-6 of a constant well.
    """
    state = u0.copy() if isinstance(u0, State) else State(0.0, Profile(u0.x.copy(), u0.u.copy(), dict(u0.meta)))
    if checkpoints is None:
        checkpoints = geometric_checkpoints(horizon)
    cps = np.asarray([c for c in checkpoints if c >= state.t and c <= horizon], dtype=float)
    if len(cps) == 0 or cps[-1] < horizon:
        cps = np.append(cps, horizon)
    records: list[DiagnosticsRecord] = []

    def emit():
        rec = diagnostics(m, state, keep_states)
        records.append(rec)
        if on_record is not None:
            on_record(rec)
        return rec

    for target in cps:
        while state.t < target:
            state = step(m, cfg, state, dt_cap=target - state.t)
            # snap to the checkpoint to avoid round-off slivers
            if target - state.t <= 1e-12 * max(1.0, target):
                state.t = float(target)
        rec = emit()
        if distance_to_wells(state.u) < CONVERGED_L1:
            break
        if stop_when is not None and stop_when(rec):
            break
    return records, state


CSV_COLUMNS = ("t", "E", "ut_l2sq", "n_zeros", "zeros", "max_grad")


def write_diagnostics_csv(records, path) -> None:
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(CSV_COLUMNS)
        for r in records:
            wr.writerow([repr(float(r.t)), repr(float(r.E)), repr(float(r.ut_l2sq)), r.n_zeros,
                         ";".join(repr(float(z)) for z in r.zero_positions), repr(float(r.max_grad))])


def read_diagnostics_csv(path) -> list[DiagnosticsRecord]:
    out = []
    with open(path, encoding="utf-8") as fh:
        rd = csv.DictReader(fh)
        for row in rd:
            zs = [float(z) for z in row["zeros"].split(";") if z]
            out.append(DiagnosticsRecord(float(row["t"]), float(row["E"]), float(row["ut_l2sq"]),
                                         int(row["n_zeros"]), zs, float(row["max_grad"])))
    return out


__all__ = [
    "StepperConfig", "State", "StepStats", "DiagnosticsRecord", "rhs", "jacobian", "jacobian_bands", "step",
    "evolve", "geometric_checkpoints", "diagnostics", "write_diagnostics_csv", "read_diagnostics_csv",
    "explicit_dt", "weighted_sq_norm", "distance_to_wells",
]
