"""Experiment presets, runs with CSV/JSON artifacts, and timing-law fits."""

from __future__ import annotations

import csv
import json
import math
import platform
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy
from scipy.stats import linregress

from .. import __version__
from ..energy import c0, c_eps
from ..errors import ConfigError, DomainError, InsufficientEventsError, PMLayersError
from ..evolution import StepperConfig, evolve, geometric_checkpoints, write_diagnostics_csv
from ..layers import collapse_times
from ..model import FluxSpec, ModelParams, PotentialSpec
from ..stationary import Profile, compacton, transition_layer_datum
from .config import INIT_KINDS, parse_events, serialize

#: horizons above this must use the implicit scheme
IMPLICIT_ONLY_HORIZON = 1e8


@dataclass
class ExperimentPreset:
    """A validated configuration (see ``config.SCHEMA`` for the keys)."""

    config: dict
    model: ModelParams
    stepper: StepperConfig

    @classmethod
    def from_config(cls, cfg: dict) -> ExperimentPreset:
        try:
            flux = FluxSpec(cfg["flux.kind"], cfg["flux.alpha"])
        except DomainError as exc:
            raise ConfigError("flux.kind" if cfg["flux.kind"] not in ("rational", "gaussian") else "flux.alpha",
                              str(exc)) from None
        try:
            pot = PotentialSpec(cfg["potential.theta"], cfg["potential.eta"])
        except DomainError as exc:
            raise ConfigError("potential.theta", str(exc)) from None
        try:
            model = ModelParams(cfg["model.epsilon"], cfg["model.a"], cfg["model.b"], flux, pot,
                                cfg["model.allow_large_eps"])
        except DomainError as exc:
            raise ConfigError("model.epsilon", str(exc)) from None
        stepper = StepperConfig(
            scheme=cfg["stepper.scheme"], dt_init=cfg["stepper.dt_init"], dt_max=cfg["stepper.dt_max"],
            dt_min=cfg["stepper.dt_min"], newton_tol=cfg["stepper.newton_tol"],
            newton_max_iter=cfg["stepper.newton_max_iter"], energy_drift_tol=cfg["stepper.energy_drift_tol"],
            backward_regime_policy=cfg["stepper.backward_regime_policy"], err_tol=cfg["stepper.err_tol"],
            rate_tol=cfg["stepper.rate_tol"],
        )
        horizon = cfg["run.horizon"]
        if not horizon > 0:
            raise ConfigError("run.horizon", "must be positive")
        if horizon > IMPLICIT_ONLY_HORIZON and stepper.scheme != "implicit":
            raise ConfigError("stepper.scheme", f"horizons above {IMPLICIT_ONLY_HORIZON:g} require the implicit scheme")
        if cfg["grid.cells"] < 2:
            raise ConfigError("grid.cells", "need at least 2 cells")
        kind = cfg["init.kind"]
        if kind not in INIT_KINDS:
            raise ConfigError("init.kind", f"expected one of {INIT_KINDS}")
        if kind in ("transition-layers", "compacton") and not cfg["init.layers"]:
            raise ConfigError("init.layers", "layer positions required")
        if kind == "constant-perturbation" and len(cfg["init.signs"]) != len(cfg["init.breaks"]) + 1:
            raise ConfigError("init.signs", "need one sign per block (len(breaks) + 1)")
        if cfg["init.start_sign"] not in (-1, 1):
            raise ConfigError("init.start_sign", "must be -1 or 1")
        parse_events(cfg["expect.events"])
        return cls(dict(cfg), model, stepper)

    @property
    def name(self) -> str:
        return self.config["name"]

    @property
    def n_points(self) -> int:
        return self.config["grid.cells"] + 1

    @property
    def horizon(self) -> float:
        return self.config["run.horizon"]

    def checkpoints(self) -> np.ndarray:
        return geometric_checkpoints(self.horizon, self.config["run.checkpoints.first"],
                                     self.config["run.checkpoints.per_decade"])

    def initial_datum(self) -> Profile:
        c, m = self.config, self.model
        kind = c["init.kind"]
        try:
            if kind == "transition-layers":
                return transition_layer_datum(m, c["init.layers"], self.n_points, c["init.start_sign"])
            if kind == "compacton":
                return compacton(m, c["init.layers"], c["init.start_sign"], self.n_points)
        except (DomainError, ValueError) as exc:
            raise ConfigError("init.layers", str(exc)) from None
        if kind == "constant-perturbation":
            return block_datum(m, c["init.breaks"], c["init.signs"], c["init.amplitude"], self.n_points)
        p = Profile.from_csv(c["init.path"])
        if len(p.x) != self.n_points or p.x[0] != m.a or p.x[-1] != m.b:
            raise ConfigError("init.path", "profile grid does not match model.a, model.b, grid.cells")
        return p


def block_datum(m: ModelParams, breaks, signs: str, amplitude: float, n_points: int) -> Profile:
    """Piecewise constant +-amplitude datum; nodes exactly on a break get 0."""
    x = np.linspace(m.a, m.b, n_points)
    br = np.asarray(breaks, dtype=float)
    vals = np.array([1.0 if s == "+" else -1.0 for s in signs]) * amplitude
    u = vals[np.searchsorted(br, x, side="right")]
    on_break = np.isclose(x[:, None], br[None, :], rtol=0.0, atol=1e-12 * (m.b - m.a)).any(axis=1)
    u[on_break] = 0.0
    return Profile(x, u, {"kind": "blocks", "breaks": br.tolist(), "signs": signs, "amplitude": amplitude})


def derived_constants(m: ModelParams) -> dict:
    return {
        "kappa": m.flux.kappa,
        "ell": m.flux.ell,
        "Qmax": m.flux.qmax,
        "eps0": m.eps0,
        "c_eps": c_eps(m),
        "c0": c0(m),
    }


@dataclass
class RunManifest:
    preset: dict
    constants: dict
    versions: dict
    wall_clock: float = 0.0
    status: str = "running"
    error: str = ""
    files: dict = field(default_factory=dict)
    events: list = field(default_factory=list)
    records: list = field(default_factory=list, repr=False)

    def to_json(self) -> dict:
        return {
            "preset": self.preset,
            "constants": self.constants,
            "versions": self.versions,
            "wall_clock_seconds": self.wall_clock,
            "status": self.status,
            "error": self.error,
            "files": self.files,
            "events": self.events,
        }


def versions() -> dict:
    return {"package": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__}


def _write_manifest(man: RunManifest, path: Path) -> None:
    path.write_text(json.dumps(man.to_json(), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _event_dict(e) -> dict:
    return {"t": e.t, "zeros_before": e.zeros_before, "zeros_after": e.zeros_after,
            "positions": list(e.positions), "t_lo": e.t_lo, "t_hi": e.t_hi}


def write_events_csv(events, path) -> None:
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(("t", "zeros_before", "zeros_after", "positions"))
        for e in events:
            wr.writerow((repr(float(e.t)), e.zeros_before, e.zeros_after, ";".join(repr(float(p)) for p in e.positions)))


def simulate(preset: ExperimentPreset, stop_after_first: bool = False, on_record=None):
    """Evolve the preset's datum; returns (records, events, final state)."""
    u0 = preset.initial_datum()
    n0 = None

    def stop(rec):
        return stop_after_first and n0 is not None and rec.n_zeros < n0

    def hook(rec):
        nonlocal n0
        if n0 is None:
            n0 = rec.n_zeros
        if on_record is not None:
            on_record(rec)

    records, state = evolve(preset.model, preset.stepper, u0, preset.horizon, preset.checkpoints(),
                            stop_when=stop, on_record=hook)
    refine = preset.config["run.refine_events"]
    events = collapse_times(records, preset.model if refine else None, preset.stepper if refine else None)
    return records, events, state


def run(preset: ExperimentPreset, out_dir=None) -> RunManifest:
    """Run one preset, writing diagnostics.csv, events.csv, profiles/ and manifest.json."""
    out = Path(out_dir if out_dir is not None else preset.config["output.dir"]) / preset.name
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.txt").write_text(serialize(preset.config), encoding="utf-8")
    man = RunManifest(preset={"config": serialize(preset.config)}, constants=derived_constants(preset.model),
                      versions=versions())
    man.files = {"config": "config.txt", "diagnostics": "diagnostics.csv", "events": "events.csv"}
    _write_manifest(man, out / "manifest.json")
    start = time.perf_counter()
    records: list = []
    events: list = []
    snapshots = preset.config["run.snapshots"]
    if snapshots:
        (out / "profiles").mkdir(exist_ok=True)
        man.files["profiles"] = []

    def on_record(rec):
        records.append(rec)
        if snapshots:
            name = f"profiles/profile_{len(records) - 1:04d}.csv"
            rec.state.u.to_csv(out / name)
            man.files["profiles"].append(name)

    try:
        _, events, _ = simulate(preset, on_record=on_record)
        man.status = "ok"
    except PMLayersError as exc:
        man.status = "numerical-failure"
        man.error = f"{type(exc).__name__}: {exc}"
        # partial outputs are kept; events are read off the records obtained so far
        events = collapse_times(records)
    finally:
        write_diagnostics_csv(records, out / "diagnostics.csv")
        write_events_csv(events, out / "events.csv")
        man.events = [_event_dict(e) for e in events]
        man.records = records
        man.wall_clock = time.perf_counter() - start
        _write_manifest(man, out / "manifest.json")
    return man


@dataclass(frozen=True)
class BandCheck:
    event: tuple[int, int]
    reference: float
    lo: float
    hi: float
    t: float

    @property
    def ok(self) -> bool:
        return self.lo <= self.t <= self.hi


def band_checks(preset: ExperimentPreset, events) -> list[BandCheck]:
    """Compare event times with the preset's reference times (x/÷ expect.factor)."""
    wanted = parse_events(preset.config["expect.events"])
    refs = preset.config["expect.times"]
    f = preset.config["expect.factor"]
    out = []
    for (before, after), ref in zip(wanted, refs):
        hit = next((e for e in events if e.zeros_before == before and e.zeros_after == after), None)
        out.append(BandCheck((before, after), ref, ref / f, ref * f, hit.t if hit else math.nan))
    return out


@dataclass
class TimingLaw:
    param: str
    values: list[float]
    times: list[float]
    x: list[float]
    slope: float
    intercept: float
    r2: float
    x_label: str

    def to_csv(self, path) -> None:
        with open(path, "w", newline="\n", encoding="utf-8") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow((self.param, "t_first", self.x_label, "ln_t"))
            for v, t, x in zip(self.values, self.times, self.x):
                wr.writerow((repr(v), repr(t), repr(x), repr(math.log(t))))
            wr.writerow(())
            wr.writerow(("slope", "intercept", "r2"))
            wr.writerow((repr(self.slope), repr(self.intercept), repr(self.r2)))


def family_member(base: dict, param: str, value: float) -> ExperimentPreset:
    cfg = dict(base)
    cfg["run.horizon"] = base["family.horizon"]
    cfg["run.snapshots"] = False
    if param == "eps":
        cfg["model.epsilon"] = value
        cfg["name"] = f"{base['name']}-eps{value:g}"
    elif param == "d":
        centre = 0.5 * (base["model.a"] + base["model.b"])
        cfg["init.layers"] = (centre - 0.5 * value, centre + 0.5 * value)
        cfg["name"] = f"{base['name']}-d{value:g}"
    else:
        raise ConfigError("family.param", "expected 'eps' or 'd'")
    return ExperimentPreset.from_config(cfg)


def timing_law(base: dict, out_csv=None) -> TimingLaw:
    """First-collapse times over a one-parameter family, and the fitted law.

    param d:   ln t vs d;  param eps: ln t vs 1/eps (theta = 2) or ln(1/eps) (theta > 2).
    """
    param, values = base["family.param"], list(base["family.values"])
    if len(values) < 3:
        raise ConfigError("family.values", "need at least 3 family members")
    theta = base["potential.theta"]
    times = []
    for v in values:
        member = family_member(base, param, v)
        _, events, _ = simulate(member, stop_after_first=True)
        if not events:
            raise InsufficientEventsError(f"{member.name}: no collapse before t = {member.horizon:g}")
        times.append(events[0].t)
    if param == "d":
        x, label = values, "d"
    elif theta == 2.0:
        x, label = [1.0 / v for v in values], "inv_eps"
    else:
        x, label = [math.log(1.0 / v) for v in values], "ln_inv_eps"
    fit = linregress(x, [math.log(t) for t in times])
    law = TimingLaw(param, values, times, list(x), float(fit.slope), float(fit.intercept), float(fit.rvalue**2), label)
    if out_csv is not None:
        law.to_csv(out_csv)
    return law


def k_sequence(theta: float, j: int) -> tuple[np.ndarray, float]:
    """Partial sums k_1..k_j of alpha^m, alpha = 1/2 + 1/theta, and beta = (theta+2)/(theta-2)."""
    if not theta > 2:
        raise DomainError(f"theta must exceed 2 (alpha = 1/2 + 1/theta < 1), got {theta}")
    if j < 1:
        raise DomainError("j must be >= 1")
    alpha = 0.5 + 1.0 / theta
    k = np.cumsum(alpha ** np.arange(1, j + 1))
    return k, (theta + 2.0) / (theta - 2.0)
