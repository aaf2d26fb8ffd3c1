"""Fractional Hartree equations with randomized data: spectral solver and probabilistic experiments."""

from .errors import ConfigError, NonFiniteError, ParameterError, PicardDivergenceError
from .fields import Field, Grid, SpaceTimeField, forward_transform, inverse_transform
from .hartree import HartreeParams, energy, mass
from .propagator import linear_evolution, linear_propagate
from .randomize import RandomDistribution, build_window, sample
from .solver import Trajectory, evolve

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "NonFiniteError",
    "ParameterError",
    "PicardDivergenceError",
    "Field",
    "Grid",
    "SpaceTimeField",
    "forward_transform",
    "inverse_transform",
    "HartreeParams",
    "energy",
    "mass",
    "linear_evolution",
    "linear_propagate",
    "RandomDistribution",
    "build_window",
    "sample",
    "Trajectory",
    "evolve",
]
