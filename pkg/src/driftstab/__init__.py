"""Drift-condition stability toolkit: explicit moment-bound constants,
counterexample chains, exact distribution propagation, and a deterministic
Monte Carlo verification engine."""

__version__ = "0.1.0"

from .core import (
    DriftParams,
    Kernel,
    Sampler,
    Trajectory,
    derive_stream,
    substream,
    validate_params,
)

__all__ = [
    "__version__",
    "DriftParams",
    "Kernel",
    "Sampler",
    "Trajectory",
    "derive_stream",
    "substream",
    "validate_params",
]
