"""Interfaces, Hausdorff distances, collapse detection and exit times."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptySetError, GeometryError

#: a node with |u| below this counts as one exact zero
ZERO_TIE = 1e-14
DEFAULT_K = ((-0.9, 0.9),)


@dataclass(frozen=True)
class StepFunctionV:
    """+-1 valued step function with jumps ``jumps`` and separation ``r``."""

    a: float
    b: float
    jumps: tuple[float, ...]
    start_value: float = -1.0
    r: float = 0.0

    def __post_init__(self):
        h = np.asarray(self.jumps, dtype=float)
        if self.start_value not in (-1.0, 1.0):
            raise ValueError("start_value must be -1 or +1")
        if np.any(np.diff(h) <= 2.0 * self.r) and len(h) > 1:
            raise GeometryError("jump neighbourhoods of radius r overlap")
        if len(h) and (h[0] - self.r < self.a or h[-1] + self.r > self.b):
            raise GeometryError("jump neighbourhoods must lie inside [a, b]")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        k = np.searchsorted(np.asarray(self.jumps, dtype=float), x, side="right")
        return self.start_value * (-1.0) ** k


@dataclass(frozen=True)
class InterfaceSet:
    points: tuple[float, ...]

    def __len__(self):
        return len(self.points)

    @property
    def empty(self) -> bool:
        return len(self.points) == 0

    def clusters(self, gap: float) -> list[tuple[float, ...]]:
        """Group sorted points whose consecutive distance is at most ``gap``."""
        out: list[list[float]] = []
        for p in self.points:
            if out and p - out[-1][-1] <= gap:
                out[-1].append(p)
            else:
                out.append([p])
        return [tuple(c) for c in out]


def zeros_of(u) -> np.ndarray:
    """Linear-interpolated sign changes of a Profile.

    A run of nodes with |u| < 1e-14 between nodes of opposite sign counts as
    a single zero at the middle of the run.
    """
    x, v = u.x, u.u
    sgn = np.where(np.abs(v) < ZERO_TIE, 0, np.sign(v)).astype(int)
    nz = np.flatnonzero(sgn)
    out = []
    for i, j in zip(nz[:-1], nz[1:]):
        if sgn[i] == sgn[j]:
            continue
        if j == i + 1:
            out.append(x[i] + (x[j] - x[i]) * v[i] / (v[i] - v[j]))
        else:
            out.append(0.5 * (x[i + 1] + x[j - 1]))
    return np.asarray(out, dtype=float)


def _normalize_k(K):
    K = DEFAULT_K if K is None else K
    if len(K) == 2 and np.isscalar(K[0]):
        K = (tuple(K),)
    out = []
    for lo, hi in K:
        if not lo <= hi:
            raise ValueError("K intervals must satisfy lo <= hi")
        if lo <= -1.0 <= hi or lo <= 1.0 <= hi:
            raise ValueError("K must avoid the wells -1 and +1")
        out.append((float(lo), float(hi)))
    return out


def interface(u, K=None) -> InterfaceSet:
    """Finite point set representing u^{-1}(K) for K a union of closed intervals.

    Each maximal run of the piecewise linear interpolant inside an interval
    of K contributes its two endpoints (crossing points or grid ends).
    """
    x, v = u.x, u.u
    pts: list[float] = []
    for lo, hi in _normalize_k(K):
        inside = (v >= lo) & (v <= hi)
        n = len(v)
        i = 0
        while i < n:
            if not inside[i]:
                # a segment can cross K entirely between two nodes outside it
                if i + 1 < n and not inside[i + 1] and (v[i] - lo) * (v[i + 1] - lo) < 0:
                    pts.extend(_cross(x[i], x[i + 1], v[i], v[i + 1], lo, hi))
                i += 1
                continue
            j = i
            while j + 1 < n and inside[j + 1]:
                j += 1
            start = x[i] if i == 0 else _entry(x[i - 1], x[i], v[i - 1], v[i], lo, hi)
            end = x[j] if j == n - 1 else _entry(x[j + 1], x[j], v[j + 1], v[j], lo, hi)
            pts.extend((start, end))
            i = j + 1
    return InterfaceSet(tuple(sorted(set(float(p) for p in pts))))


def _entry(x_out, x_in, v_out, v_in, lo, hi):
    level = hi if v_out > hi else lo
    return x_out + (x_in - x_out) * (level - v_out) / (v_in - v_out)


def _cross(x0, x1, v0, v1, lo, hi):
    a = x0 + (x1 - x0) * (lo - v0) / (v1 - v0)
    b = x0 + (x1 - x0) * (hi - v0) / (v1 - v0)
    return (min(a, b), max(a, b))


def hausdorff(A, B) -> float:
    a = np.asarray(A.points if isinstance(A, InterfaceSet) else A, dtype=float)
    b = np.asarray(B.points if isinstance(B, InterfaceSet) else B, dtype=float)
    if a.size == 0 or b.size == 0:
        raise EmptySetError("Hausdorff distance of an empty interface set")
    d = np.abs(a[:, None] - b[None, :])
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


@dataclass(frozen=True)
class CollapseEvent:
    t: float
    zeros_before: int
    zeros_after: int
    positions: tuple[float, ...]  # zeros just before the event
    t_lo: float = math.nan
    t_hi: float = math.nan


def _bisect_event(m, cfg, rec_lo, rec_hi, predicate, rel_width, max_rounds=12):
    """Shrink [rec_lo.t, rec_hi.t] around the first record satisfying ``predicate``.

    Restarts evolution from the stored state of ``rec_lo`` with 10 checkpoints.
    """
    from .evolution import evolve

    lo, hi = rec_lo, rec_hi
    for _ in range(max_rounds):
        if hi.t - lo.t <= rel_width * hi.t or lo.state is None:
            break
        cps = np.linspace(lo.t, hi.t, 11)[1:]
        recs, _ = evolve(m, cfg, lo.state, hi.t, checkpoints=cps, stop_when=predicate)
        hit = next((r for r in recs if predicate(r)), None)
        if hit is None:
            break
        before = [r for r in recs if r.t < hit.t]
        lo = before[-1] if before else lo
        hi = hit
    return lo, hi


def collapse_times(records, m=None, cfg=None, rel_width: float = 0.01) -> list[CollapseEvent]:
    """Drops of the zero count between consecutive records.

    With ``m`` and ``cfg`` given (and states stored in the records), each
    event is refined by re-running from the bracketing checkpoint until the
    bracket is below ``rel_width`` relative; the event time is its midpoint.
    """
    events = []
    for prev, cur in zip(records[:-1], records[1:]):
        if cur.n_zeros >= prev.n_zeros:
            continue
        lo, hi = prev, cur
        if m is not None and cfg is not None and prev.state is not None:
            nz = prev.n_zeros
            lo, hi = _bisect_event(m, cfg, prev, cur, lambda r, nz=nz: r.n_zeros < nz, rel_width)
        events.append(CollapseEvent(0.5 * (lo.t + hi.t), prev.n_zeros, cur.n_zeros,
                                    tuple(prev.zero_positions), lo.t, hi.t))
    return events


def t_eps_exit(m, cfg, u0, delta1: float, K=None, horizon: float = 1e4, checkpoints=None,
               rel_width: float = 0.01) -> float:
    """First time the interface leaves the delta1-neighbourhood of the initial one.

    Returns math.inf if that does not happen before ``horizon``.
    """
    from .evolution import evolve

    I0 = interface(u0, K)
    if I0.empty:
        raise EmptySetError("initial interface is empty")
    if delta1 > m.length:
        # interfaces live in [a, b], so the distance can never exceed b - a
        return math.inf

    def gone(rec):
        I = interface(rec.state.u, K)
        return I.empty or hausdorff(I, I0) > delta1

    recs, _ = evolve(m, cfg, u0, horizon, checkpoints=checkpoints, stop_when=gone)
    hit = next((i for i, r in enumerate(recs) if gone(r)), None)
    if hit is None:
        return math.inf
    if hit == 0:
        return recs[0].t
    lo, hi = _bisect_event(m, cfg, recs[hit - 1], recs[hit], gone, rel_width)
    return 0.5 * (lo.t + hi.t)
