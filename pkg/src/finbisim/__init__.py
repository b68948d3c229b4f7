"""Finite uniform bisimulations of linear systems with finite input alphabets."""

__version__ = "0.1.0"

from .sysmodel import RunConfig, SystemSpec, load_spec, parse_spec, serialize_spec, validate_hypotheses  # noqa: E402
from .bisim import FiniteUniformBisimulation, algorithm1, algorithm2, classify  # noqa: E402
from .dfm import Dfm, build_dfm, simulate_dfm  # noqa: E402

__all__ = [
    "RunConfig", "SystemSpec", "load_spec", "parse_spec", "serialize_spec",
    "validate_hypotheses", "FiniteUniformBisimulation", "algorithm1", "algorithm2",
    "classify", "Dfm", "build_dfm", "simulate_dfm",
]
