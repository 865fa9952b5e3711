"""Configuration, presets, experiment runs and the command-line interface."""

from .config import load, parse, serialize
from .presets import PRESET_TEXT, preset_config
from .runner import ExperimentPreset, RunManifest, band_checks, k_sequence, run, timing_law

__all__ = [
    "ExperimentPreset",
    "PRESET_TEXT",
    "RunManifest",
    "band_checks",
    "k_sequence",
    "load",
    "parse",
    "preset_config",
    "run",
    "serialize",
    "timing_law",
]
