"""Weighted interacting particles and their mean-field transport equation with source."""
__version__ = "0.1.0"

from .measures import AtomicMeasure, GridMeasure, ParticleState  # noqa: F401
