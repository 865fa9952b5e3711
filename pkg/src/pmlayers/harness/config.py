"""Flat ``dotted.key = value`` configuration files.

Lines are ``key = value``; ``#`` starts a comment; blank lines are ignored.
Every key has a declared type; unknown keys and bad values raise
ConfigError carrying the dotted key as ``path``.
"""

from __future__ import annotations

import math
from pathlib import Path

from ..errors import ConfigError


def _float(text: str) -> float:
    v = float(text)
    if math.isnan(v):
        raise ValueError("NaN is not allowed")
    return v


def _int(text: str) -> int:
    f = float(text)
    if f != int(f):
        raise ValueError(f"{text!r} is not an integer")
    return int(f)


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("true", "yes", "1", "on"):
        return True
    if t in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"{text!r} is not a boolean")


def _float_list(text: str) -> tuple[float, ...]:
    return tuple(_float(p) for p in text.split(",") if p.strip())


def _str(text: str) -> str:
    return text.strip()


def _fmt_float(v: float) -> str:
    return repr(float(v))


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return _fmt_float(value)
    if isinstance(value, tuple):
        return ", ".join(_fmt_float(v) for v in value)
    return str(value)


# key -> (parser, default); a default of None marks an optional key
SCHEMA: dict[str, tuple] = {
    "name": (_str, "custom"),
    "flux.kind": (_str, "rational"),
    "flux.alpha": (_float, 1.0),
    "potential.theta": (_float, 2.0),
    "potential.eta": (_float, 0.1),
    "model.epsilon": (_float, 0.1),
    "model.a": (_float, -4.0),
    "model.b": (_float, 4.0),
    "model.allow_large_eps": (_bool, False),
    "grid.cells": (_int, 2048),
    "init.kind": (_str, "transition-layers"),
    "init.layers": (_float_list, ()),
    "init.start_sign": (_int, -1),
    "init.breaks": (_float_list, ()),
    "init.signs": (_str, ""),
    "init.amplitude": (_float, 1e-2),
    "init.path": (_str, ""),
    "run.horizon": (_float, 1e4),
    "run.checkpoints.first": (_float, 1e-2),
    "run.checkpoints.per_decade": (_int, 10),
    "run.refine_events": (_bool, True),
    "run.snapshots": (_bool, True),
    "stepper.scheme": (_str, "implicit"),
    "stepper.dt_init": (_float, 1e-3),
    "stepper.dt_max": (_float, 1e3),
    "stepper.dt_min": (_float, 1e-12),
    "stepper.newton_tol": (_float, 1e-11),
    "stepper.newton_max_iter": (_int, 12),
    "stepper.energy_drift_tol": (_float, 1e-9),
    "stepper.backward_regime_policy": (_str, "warn"),
    "stepper.err_tol": (_float, 1e-5),
    "stepper.rate_tol": (_float, 0.1),
    "output.dir": (_str, "runs"),
    # reference event times and the accepted band (used by ``verify``)
    "expect.times": (_float_list, ()),
    "expect.events": (_str, ""),
    "expect.factor": (_float, 3.0),
    "family.param": (_str, ""),
    "family.values": (_float_list, ()),
    "family.horizon": (_float, 1e12),
}

INIT_KINDS = ("transition-layers", "compacton", "constant-perturbation", "csv")


def defaults() -> dict:
    return {k: d for k, (_, d) in SCHEMA.items()}


def parse(text: str, base: dict | None = None) -> dict:
    """Parse config text into a dict of typed values (defaults filled in)."""
    out = dict(defaults() if base is None else base)
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", f"expected 'key = value', got {raw.strip()!r}")
        key, value = (p.strip() for p in line.split("=", 1))
        if key not in SCHEMA:
            raise ConfigError(key, "unknown configuration key")
        try:
            out[key] = SCHEMA[key][0](value)
        except ValueError as exc:
            raise ConfigError(key, f"bad value {value!r}: {exc}") from None
    return out


def serialize(cfg: dict) -> str:
    """Canonical text form: every schema key, sorted, one per line."""
    lines = []
    for key in sorted(SCHEMA):
        lines.append(f"{key} = {_fmt(cfg.get(key, SCHEMA[key][1]))}")
    return "\n".join(lines) + "\n"


def load(path) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError("--config", f"cannot read {path}: {exc}") from None
    return parse(text)


def parse_events(text: str) -> list[tuple[int, int]]:
    """``"6>4, 4>2"`` -> [(6, 4), (4, 2)]."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            before, after = part.split(">")
            out.append((int(before), int(after)))
        except ValueError:
            raise ConfigError("expect.events", f"bad event {part!r}; use 'before>after'") from None
    return out
