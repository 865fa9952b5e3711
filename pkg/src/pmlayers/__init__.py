"""Perona-Malik reaction-diffusion lab: stationary layers, energy and slow motion."""

from .errors import (
    BackwardRegimeError,
    ConfigError,
    DomainError,
    EmptySetError,
    GeometryError,
    InsufficientEventsError,
    NewtonError,
    NoSolutionError,
    PMLayersError,
    QuadratureError,
    StiffnessError,
)
from .model import FluxSpec, ModelParams, PotentialSpec

__version__ = "0.1.0"

__all__ = [
    "BackwardRegimeError",
    "ConfigError",
    "DomainError",
    "EmptySetError",
    "FluxSpec",
    "GeometryError",
    "InsufficientEventsError",
    "ModelParams",
    "NewtonError",
    "NoSolutionError",
    "PMLayersError",
    "PotentialSpec",
    "QuadratureError",
    "StiffnessError",
]
