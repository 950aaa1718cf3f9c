"""The three counterexample chains plus configurable drift-conditioned test
processes (a heavy-tailed negative-drift walk and simple designed martingales)."""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .core import DriftParams, Kernel, ParameterError, Sampler

__all__ = [
    "SudanChainSpec",
    "AmassedJumpSpec",
    "ResetWalkSpec",
    "DriftWalkSpec",
    "build_sudan",
    "build_amassed",
    "build_reset_walk",
    "build_drift_walk",
    "build_symmetric_walk",
    "build_heavy_martingale",
    "chain_concat",
]


@dataclass(frozen=True)
class SudanChainSpec:
    """Fully fixed two-point chain: marginal {0 w.p. 2/3, n w.p. 1/3}."""


@dataclass(frozen=True)
class AmassedJumpSpec:
    """Decrement chain whose jumps out of zero amass at time M."""

    M: int

    def __post_init__(self):
        if self.M < 2:
            raise ParameterError(f"M must be >= 2, got {self.M}")


@dataclass(frozen=True)
class ResetWalkSpec:
    """Time-homogeneous walk with unit up-steps and resets to zero."""

    epsilon: float

    def __post_init__(self):
        if not (0 < self.epsilon < 1):
            raise ParameterError(f"epsilon must lie in (0,1), got {self.epsilon}")


@dataclass(frozen=True)
class DriftWalkSpec:
    """Generic negative-drift walk with Pareto(alpha) positive jumps.

    Above J the increment is (heavy-tailed jump - compensator) with conditional
    mean exactly -a; at or below J the walk steps up by a deterministically.
    """

    a: float
    J: float
    jump_tail_index: float
    jump_scale: float
    reflect_at: Optional[float] = None

    def __post_init__(self):
        if not (self.a > 0):
            raise ParameterError(f"a must be > 0, got {self.a}")
        if not (self.jump_tail_index > 1):
            raise ParameterError(
                f"jump_tail_index must be > 1, got {self.jump_tail_index}"
            )
        if not (self.jump_scale >= 0):
            raise ParameterError(f"jump_scale must be >= 0, got {self.jump_scale}")


def build_sudan() -> Kernel:
    """Two-point time-inhomogeneous chain with E(X_n) = n/3.

    The published law starts at n = 2; we pin X_0 = X_1 = 0 and apply the
    two-point step at time 1 so the stated marginals hold for every n >= 2.
    """

    def transition(n: int, x: float) -> List[Tuple[float, float]]:
        if n == 0:
            return [(0.0, 1.0)]
        if n == 1:
            return [(0.0, 2.0 / 3.0), (2.0, 1.0 / 3.0)]
        if x == 0:
            return [(float(n + 1), 1.0 / n), (0.0, 1.0 - 1.0 / n)]
        return [(float(n + 1), 1.0 - 2.0 / n), (0.0, 2.0 / n)]

    return Kernel(transition=transition, state_kind="integer", description="sudan")


def build_amassed(M: int) -> Kernel:
    """Decrement chain on 0..2M whose jumps out of zero amass at time M.

    Transitions are defined for 0 <= n <= M-1; for n >= M the chain is frozen
    (identity kernel).  Use chain_concat to string several amassing windows
    together.
    """
    spec = AmassedJumpSpec(M)

    def transition(n: int, x: float) -> List[Tuple[float, float]]:
        if n >= spec.M or x > 0:
            if x > 0 and n < spec.M:
                return [(x - 1.0, 1.0)]
            return [(x, 1.0)]
        k = spec.M - n
        q = 1.0 / (k * k)
        if q >= 1.0:
            return [(2.0 * k, 1.0)]
        return [(2.0 * k, q), (0.0, 1.0 - q)]

    return Kernel(
        transition=transition, state_kind="integer", description=f"amassed(M={M})"
    )


def build_reset_walk(epsilon: float) -> Kernel:
    """Time-homogeneous walk: up one with the complementary probability,
    reset to zero with probability (1+eps)/(x+1).  Drift -eps above zero."""
    spec = ResetWalkSpec(epsilon)

    def transition(n: int, x: float) -> List[Tuple[float, float]]:
        if x == 0:
            return [(1.0, 1.0)]
        q = (1.0 + spec.epsilon) / (x + 1.0)
        return [(x + 1.0, 1.0 - q), (0.0, q)]

    return Kernel(
        transition=transition,
        state_kind="integer",
        description=f"resetwalk(eps={epsilon})",
    )


def chain_concat(Ms: Sequence[int]) -> Kernel:
    """String together amassing windows for the listed M values.

    Each window gets 3*M time steps: M steps up to the amassing time plus 2*M
    drain steps (the post-jump state is at most 2*M), so every window starts
    from zero again.
    """
    if not Ms:
        raise ParameterError("need at least one window size")
    kernels = [build_amassed(M) for M in Ms]
    offsets = np.concatenate([[0], np.cumsum([3 * M for M in Ms])])

    def transition(n: int, x: float) -> List[Tuple[float, float]]:
        seg = int(np.searchsorted(offsets, n, side="right")) - 1
        if seg >= len(kernels):
            return [(x, 1.0)]
        local = n - int(offsets[seg])
        if local >= Ms[seg]:  # drain phase
            if x > 0:
                return [(x - 1.0, 1.0)]
            return [(x, 1.0)]
        return kernels[seg].transition(local, x)

    return Kernel(
        transition=transition,
        state_kind="integer",
        description=f"concat({list(Ms)})",
    )


def pareto_moment(alpha: float, scale: float, q: float) -> float:
    """q-th moment of the Pareto(alpha) jump with minimum ``scale``."""
    if not (q < alpha):
        raise ParameterError(f"moment order {q} >= tail index {alpha}: infinite")
    return alpha * scale ** q / (alpha - q)


def build_drift_walk(
    spec: DriftWalkSpec, p: float, r: float = 1.0
) -> Tuple[Sampler, DriftParams]:
    """Negative-drift walk with certified moment parameters.

    Returns a sampler plus DriftParams whose V is an analytic upper bound on
    the conditional p-th increment moment (Minkowski: jump p-norm plus the
    constant compensator), valid for any p below the jump tail index.
    """
    if not (spec.jump_tail_index > p):
        raise ParameterError(
            f"jump tail index {spec.jump_tail_index} must exceed p = {p}"
        )
    alpha = spec.jump_tail_index
    scale = spec.jump_scale
    if scale > 0:
        jump_mean = pareto_moment(alpha, scale, 1.0)
        jump_p_norm = pareto_moment(alpha, scale, p) ** (1.0 / p)
    else:
        jump_mean = 0.0
        jump_p_norm = 0.0
    compensator = jump_mean + spec.a
    V = max((jump_p_norm + compensator) ** p, spec.a ** p)
    params = DriftParams(a=spec.a, J=spec.J, p=p, V=V, r=r)

    inv_alpha = 1.0 / alpha

    def step(n: int, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        # u in [0,1): 1-u in (0,1], so the inverse-CDF jump is >= scale.
        jump = scale * (1.0 - u) ** -inv_alpha
        nxt = np.where(x > spec.J, x + jump - compensator, x + spec.a)
        if spec.reflect_at is not None:
            np.maximum(nxt, spec.reflect_at, out=nxt)
        return nxt

    sampler = Sampler(
        step=step,
        initial_state=spec.J,
        description=f"driftwalk(a={spec.a}, J={spec.J}, alpha={alpha}, scale={scale})",
    )
    return sampler, params


def build_symmetric_walk(step_size: float = 1.0) -> Sampler:
    """Fair +-h walk started at 0; conditional p-th increment moment h^p."""

    def step(n: int, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        return x + np.where(u < 0.5, step_size, -step_size)

    return Sampler(step=step, initial_state=0.0, description=f"pm{step_size}-walk")


def build_heavy_martingale(
    jump: float = 4.0, jump_prob: float = 1.0 / 32.0
) -> Sampler:
    """Three-point martingale increment: +-jump each w.p. jump_prob, else 0.

    Conditional p-th increment moment is 2 * jump_prob * jump^p.
    """
    if not (0 < 2 * jump_prob <= 1):
        raise ParameterError(f"need 0 < 2*jump_prob <= 1, got {jump_prob}")

    def step(n: int, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        delta = np.where(
            u < jump_prob, jump, np.where(u < 2 * jump_prob, -jump, 0.0)
        )
        return x + delta

    return Sampler(
        step=step,
        initial_state=0.0,
        description=f"heavy(jump={jump}, prob={jump_prob})",
    )
