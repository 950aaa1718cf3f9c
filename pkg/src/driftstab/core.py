"""Shared domain types: drift parameters, transition kernels, trajectories,
and the deterministic substream contract used by the simulation engine."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

__all__ = [
    "ParameterError",
    "DriftParams",
    "Kernel",
    "Sampler",
    "Trajectory",
    "validate_params",
    "splitmix64",
    "derive_stream",
    "substream",
]

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15


class ParameterError(ValueError):
    """Raised when a constructor or operation receives out-of-range parameters."""


@dataclass(frozen=True)
class DriftParams:
    """The (a, J, p, V, r) tuple: drift magnitude, threshold, increment moment
    order, increment moment bound, and target moment order."""

    a: float
    J: float
    p: float
    V: float
    r: float

    def __post_init__(self):
        if not (self.a > 0):
            raise ParameterError(f"a must be > 0, got {self.a}")
        if not (self.V > 0):
            raise ParameterError(f"V must be > 0, got {self.V}")
        if not (self.p >= 1):
            raise ParameterError(f"p must be >= 1, got {self.p}")
        if not (self.r > 0):
            raise ParameterError(f"r must be > 0, got {self.r}")

    @property
    def theorem1_applicable(self) -> bool:
        return self.p > 2 and self.r < self.p - 1

    def replace(self, **kw) -> "DriftParams":
        return dataclasses.replace(self, **kw)


def validate_params(params: DriftParams) -> List[str]:
    """Report-style check of the moment-bound applicability conditions.

    Returns the list of violated constraints; empty iff the explicit bound
    applies (p > 2, r < p - 1, a > 0, V > 0).
    """
    violations = []
    if not (params.a > 0):
        violations.append("a <= 0")
    if not (params.V > 0):
        violations.append("V <= 0")
    if not (params.p > 2):
        violations.append("p <= 2")
    if not (params.r < params.p - 1):
        violations.append("r >= p-1")
    return violations


@dataclass(frozen=True)
class Kernel:
    """Time-inhomogeneous transition law over a discrete state space.

    ``transition(n, x)`` returns the finite list of (next_state, probability)
    pairs out of state ``x`` at time ``n``.  Rows must sum to 1 within 1e-12.
    """

    transition: Callable[[int, float], List[Tuple[float, float]]]
    state_kind: str = "integer"  # "integer" | "real"
    description: str = ""
    initial_state: float = 0.0

    def row(self, n: int, x: float) -> List[Tuple[float, float]]:
        row = self.transition(n, x)
        total = sum(p for _, p in row)
        if any(p < 0 for _, p in row) or abs(total - 1.0) > 1e-12:
            raise ParameterError(
                f"{self.description or 'kernel'}: bad row at (n={n}, x={x}), "
                f"sum={total!r}"
            )
        return row


@dataclass(frozen=True)
class Sampler:
    """Real-valued increment process driven by one uniform per step.

    ``step(n, x, u)`` maps the vector of current states ``x`` and the vector of
    uniforms ``u`` (one per trajectory) to the vector of next states.  Using
    exactly one uniform per step keeps trajectories bit-reproducible no matter
    how they are blocked or parallelized.
    """

    step: Callable[[int, np.ndarray, np.ndarray], np.ndarray]
    initial_state: float = 0.0
    description: str = ""


@dataclass(frozen=True)
class Trajectory:
    """One realized path X_0..X_N."""

    values: np.ndarray
    params: Optional[DriftParams] = None
    seed_id: int = 0

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        if self.values.ndim != 1 or len(self.values) < 1:
            raise ParameterError("trajectory needs at least one value")

    def __len__(self) -> int:
        return len(self.values)

    @property
    def horizon(self) -> int:
        return len(self.values) - 1

    def increment(self, n: int) -> float:
        return float(self.values[n + 1] - self.values[n])

    @property
    def increments(self) -> np.ndarray:
        return np.diff(self.values)


def splitmix64(state: int) -> int:
    """One step of the splitmix64 sequence: returns the avalanche-mixed output
    for ``state`` (the successor state is ``state + _GAMMA``)."""
    z = (state + _GAMMA) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def derive_stream(master_seed: int, index: int) -> int:
    """Derive the 64-bit substream key for trajectory ``index``.

    Defined as ``splitmix64(splitmix64(master_seed) + splitmix64(index))``;
    splitmix64 is a bijection on 64-bit words, so for a fixed master seed
    distinct indices always produce distinct keys.  The full definition is
    documented in the README so golden-value tests survive refactors.
    """
    a = splitmix64(master_seed & _MASK64)
    b = splitmix64(index & _MASK64)
    return splitmix64((a + b) & _MASK64)


def substream(master_seed: int, index: int) -> np.random.Generator:
    """Counter-based generator for trajectory ``index``; a pure function of
    (master_seed, index), independent of execution order."""
    return np.random.Generator(np.random.Philox(key=derive_stream(master_seed, index)))
