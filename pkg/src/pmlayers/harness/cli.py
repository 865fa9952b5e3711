"""Command-line interface: ``pmlayers VERB [options]``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 acceptance-band miss (``verify`` only).
"""

from __future__ import annotations

import argparse
import contextlib
import json
import math
import random
import sys
from pathlib import Path

import numpy as np

from ..energy import c0, verify_pointwise_inequality
from ..errors import ConfigError, PMLayersError
from ..inversion import InversionContext, j_eps, p_eps
from ..model import FluxSpec, ModelParams, PotentialSpec
from ..stationary import compacton, periodic_profile, standing_wave, standing_wave_decreasing, transition_layer_datum
from .config import defaults, load
from .presets import preset_config
from .runner import ExperimentPreset, band_checks, derived_constants, run, timing_law

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_BAND = 0, 2, 3, 4


class RngUsedError(RuntimeError):
    pass


@contextlib.contextmanager
def forbid_rng():
    """Make every numpy / stdlib random entry point raise while active."""

    def boom(*_a, **_k):
        raise RngUsedError("random number generation used under --seedless")

    saved = []
    targets = [(np.random, n) for n in ("default_rng", "rand", "randn", "random", "seed", "uniform", "normal",
                                           "randint", "choice", "shuffle", "permutation", "RandomState")]
    targets += [(random, n) for n in ("random", "seed", "uniform", "randint", "choice", "shuffle", "gauss")]
    for mod, name in targets:
        saved.append((mod, name, getattr(mod, name)))
        setattr(mod, name, boom)
    try:
        yield
    finally:
        for mod, name, fn in saved:
            setattr(mod, name, fn)


def _config_from_args(args) -> dict:
    if args.config and args.preset:
        raise ConfigError("--config", "give either --config or --preset, not both")
    if args.config:
        cfg = load(args.config)
    elif args.preset:
        cfg = preset_config(args.preset)
    else:
        cfg = defaults()
    if args.grid is not None:
        cfg["grid.cells"] = args.grid
    if args.scheme is not None:
        cfg["stepper.scheme"] = args.scheme
    if args.out is not None:
        cfg["output.dir"] = args.out
    return cfg


def _out_dir(cfg: dict) -> Path:
    out = Path(cfg["output.dir"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_constants(args) -> int:
    preset = ExperimentPreset.from_config(_config_from_args(args))
    print(json.dumps(derived_constants(preset.model), indent=2))
    return EXIT_OK


def cmd_stationary(args) -> int:
    cfg = _config_from_args(args)
    preset = ExperimentPreset.from_config(cfg)
    m, n = preset.model, preset.n_points
    report = None
    if args.kind == "wave":
        prof, report = standing_wave(m, n)
    elif args.kind == "wave-decreasing":
        prof, report = standing_wave_decreasing(m, n)
    elif args.kind == "compacton":
        prof = compacton(m, cfg["init.layers"], cfg["init.start_sign"], n)
    elif args.kind == "layers":
        prof = transition_layer_datum(m, cfg["init.layers"], n, cfg["init.start_sign"])
    else:
        prof = periodic_profile(m, args.N, n)
    path = _out_dir(cfg) / f"profile_{args.kind}.csv"
    prof.to_csv(path)
    info = {"profile": str(path), "meta": prof.meta}
    if report is not None:
        info["report"] = {"regime": report.regime, "x1e": report.x1e, "x2e": report.x2e,
                          "decay_fit": report.decay_fit}
    print(json.dumps(info, indent=2, default=float))
    return EXIT_OK


def cmd_evolve(args) -> int:
    preset = ExperimentPreset.from_config(_config_from_args(args))
    man = run(preset, preset.config["output.dir"])
    for e in man.events:
        print(f"collapse t = {e['t']:.6g}: {e['zeros_before']} -> {e['zeros_after']} zeros")
    print(f"status: {man.status} ({man.wall_clock:.1f} s)")
    if man.status != "ok":
        print(man.error, file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_family(args) -> int:
    cfg = _config_from_args(args)
    ExperimentPreset.from_config(cfg)
    path = _out_dir(cfg) / f"{cfg['name']}_timing.csv"
    law = timing_law(cfg, path)
    for v, t in zip(law.values, law.times):
        print(f"{law.param} = {v:g}: first collapse t = {t:.6g}")
    print(f"ln t vs {law.x_label}: slope {law.slope:.6g}, intercept {law.intercept:.6g}, R^2 {law.r2:.6f}")
    return EXIT_OK


def _invariant_suite() -> list[tuple[str, bool, str]]:
    out = []
    for kind in ("rational", "gaussian"):
        for eps in (0.1, 0.5):
            ctx = InversionContext(eps, FluxSpec(kind))
            rep = verify_pointwise_inequality(ctx, 200)
            out.append((f"pointwise inequality {kind} eps={eps}", rep.min_value >= -1e-10, f"min {rep.min_value:.3g}"))
            s = np.linspace(0.0, ctx.s_max, 1000)[1:]
            rel = float(np.max(np.abs(j_eps(ctx, p_eps(ctx, s)) / s - 1.0)))
            out.append((f"inversion round trip {kind} eps={eps}", rel <= 1e-8, f"max rel err {rel:.3g}"))
    val = c0(ModelParams(0.1, 0.0, 1.0, FluxSpec.rational(), PotentialSpec(2.0)))
    ref = 2.0 * math.sqrt(2.0) / 3.0
    out.append(("c0 closed form (theta=2)", abs(val - ref) <= 1e-8, f"{val:.12f} vs {ref:.12f}"))
    return out


def cmd_verify(args) -> int:
    status = EXIT_OK
    for name, ok, detail in _invariant_suite():
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
        if not ok:
            status = EXIT_BAND
    if args.config or args.preset:
        preset = ExperimentPreset.from_config(_config_from_args(args))
        if preset.config["expect.times"]:
            man = run(preset, preset.config["output.dir"])
            if man.status != "ok":
                print(man.error, file=sys.stderr)
                return EXIT_NUMERICAL
            from ..layers import CollapseEvent

            events = [CollapseEvent(e["t"], e["zeros_before"], e["zeros_after"], tuple(e["positions"]))
                      for e in man.events]
            for chk in band_checks(preset, events):
                print(f"{'PASS' if chk.ok else 'FAIL'}  {preset.name} event {chk.event[0]}->{chk.event[1]}: "
                      f"t = {chk.t:.4g}, band [{chk.lo:.3g}, {chk.hi:.3g}], reference {chk.reference:.3g}")
                if not chk.ok:
                    status = EXIT_BAND
    return status


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pmlayers", description="Perona-Malik reaction-diffusion layer dynamics")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="path to a key = value config file")
    common.add_argument("--preset", help="name of a built-in preset (exp1, exp2-fast, ...)")
    common.add_argument("--out", help="output directory")
    common.add_argument("--grid", type=int, help="number of grid cells")
    common.add_argument("--scheme", choices=("explicit", "implicit"))
    common.add_argument("--seedless", action="store_true", help="fail if any random number generator is used")
    sub = p.add_subparsers(dest="verb", required=True)
    st = sub.add_parser("stationary", parents=[common], help="emit a stationary profile")
    st.add_argument("--kind", default="wave", choices=("wave", "wave-decreasing", "compacton", "layers", "periodic"))
    st.add_argument("--N", type=int, default=2, help="number of zeros for periodic profiles")
    sub.add_parser("evolve", parents=[common], help="run one preset")
    sub.add_parser("family", parents=[common], help="timing-law fit over a family")
    sub.add_parser("verify", parents=[common], help="invariant suite and acceptance bands")
    sub.add_parser("constants", parents=[common], help="print derived constants")
    return p


COMMANDS = {
    "stationary": cmd_stationary,
    "evolve": cmd_evolve,
    "family": cmd_family,
    "verify": cmd_verify,
    "constants": cmd_constants,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    guard = forbid_rng() if args.seedless else contextlib.nullcontext()
    try:
        with guard:
            return COMMANDS[args.verb](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PMLayersError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
