"""Exact distribution propagation for integer-state kernels, exact stationary
laws, and exact drift/moment condition reports.

This module is the brute-force oracle against which every Monte Carlo result
is checked at desk scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple, Union

import numpy as np

from .core import DriftParams, Kernel, ParameterError

__all__ = [
    "ResourceError",
    "DistVector",
    "ConditionReport",
    "StationaryResult",
    "point_mass",
    "propagate",
    "moment",
    "dropped_moment_range",
    "stationary_reset_walk",
    "drift_report",
]

PRUNE_THRESHOLD = 1e-18
DEFAULT_STATE_CAP = 10 ** 6


class ResourceError(RuntimeError):
    """Support growth exceeded the configured state cap."""


@dataclass(frozen=True)
class DistVector:
    """Exact marginal law at one time: sorted integer support, matching masses,
    and the total probability pruned away so far."""

    support: np.ndarray
    mass: np.ndarray
    time: int
    dropped_mass: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "support", np.asarray(self.support, dtype=np.int64))
        object.__setattr__(self, "mass", np.asarray(self.mass, dtype=float))
        if len(self.support) != len(self.mass):
            raise ParameterError("support and mass lengths differ")
        if len(self.support) > 1 and not np.all(np.diff(self.support) > 0):
            raise ParameterError("support must be strictly increasing")
        if np.any(self.mass < 0):
            raise ParameterError("negative mass")

    def total_mass(self) -> float:
        return math.fsum(self.mass) + self.dropped_mass

    def prob(self, x: int) -> float:
        idx = np.searchsorted(self.support, x)
        if idx < len(self.support) and self.support[idx] == x:
            return float(self.mass[idx])
        return 0.0


def point_mass(x: int, time: int = 0) -> DistVector:
    return DistVector(support=np.array([x]), mass=np.array([1.0]), time=time)


def propagate(
    kernel: Kernel,
    init: DistVector,
    horizon: int,
    state_cap: int = DEFAULT_STATE_CAP,
    prune: float = PRUNE_THRESHOLD,
) -> List[DistVector]:
    """Exact marginal laws at times init.time .. init.time + horizon.

    Per-state masses are accumulated with exact (fsum) summation; entries below
    ``prune`` are moved into dropped_mass so the support stays finite and every
    later moment stays auditable.
    """
    if kernel.state_kind != "integer":
        raise ParameterError("exact propagation needs an integer-valued kernel")
    out = [init]
    current = init
    for step in range(horizon):
        n = current.time
        acc: Dict[int, List[float]] = {}
        for x, m in zip(current.support, current.mass):
            if m == 0.0:
                continue
            for y, p in kernel.row(n, float(x)):
                if p == 0.0:
                    continue
                acc.setdefault(int(round(y)), []).append(m * p)
        if len(acc) > state_cap:
            raise ResourceError(
                f"support size {len(acc)} exceeds state cap {state_cap} "
                f"at time {n + 1}"
            )
        states = sorted(acc)
        masses = [math.fsum(acc[s]) for s in states]
        dropped = current.dropped_mass
        keep_states, keep_masses = [], []
        for s, m in zip(states, masses):
            if m < prune:
                dropped += m
            else:
                keep_states.append(s)
                keep_masses.append(m)
        current = DistVector(
            support=np.array(keep_states, dtype=np.int64),
            mass=np.array(keep_masses),
            time=n + 1,
            dropped_mass=dropped,
        )
        out.append(current)
    return out


def moment(dist: DistVector, r: float, positive_part: bool = True) -> float:
    """sum_i mass_i * ((x_i)^+)^r, or |x_i|^r with the flag off.

    The dropped-mass contribution is not included; bound it separately with
    dropped_moment_range."""
    x = dist.support.astype(float)
    base = np.maximum(x, 0.0) if positive_part else np.abs(x)
    with np.errstate(divide="ignore", invalid="ignore"):
        powed = np.where(base > 0, base ** r, 0.0)
    return float(math.fsum(np.asarray(powed) * dist.mass))


def dropped_moment_range(
    dist: DistVector, r: float, state_cap: int = DEFAULT_STATE_CAP
) -> Tuple[float, float]:
    """Worst-case contribution of the pruned mass to the r-th moment, assuming
    the dropped mass sits anywhere in [0, state_cap]."""
    return 0.0, dist.dropped_mass * float(state_cap) ** r


@dataclass(frozen=True)
class StationaryResult:
    """Stationary law of the reset walk on 0..n_max from the excursion
    product, with an analytic bracket on the truncated tail."""

    support: np.ndarray
    weights: np.ndarray  # expected visits per excursion (state 0 has weight 1)
    norm_lower: float  # sum of retained weights
    norm_upper: float  # retained weights plus the analytic tail bound
    tail_weight_upper: float

    @property
    def pi(self) -> np.ndarray:
        """Point estimate of the stationary law (midpoint normalization)."""
        return self.weights / (0.5 * (self.norm_lower + self.norm_upper))

    @property
    def pi_lower(self) -> np.ndarray:
        return self.weights / self.norm_upper

    @property
    def pi_upper(self) -> np.ndarray:
        return self.weights / self.norm_lower

    @property
    def bracket_width(self) -> float:
        return self.norm_upper - self.norm_lower


def stationary_reset_walk(epsilon: float, n_max: int) -> StationaryResult:
    """Stationary law of the reset walk via the excursion construction.

    The expected number of visits to state n per excursion from zero is the
    survival product q(n) = prod_{x=1}^{n-1} (1 - (1+eps)/(x+1)) for n >= 1
    (and 1 for state 0); the stationary law is q / E[cycle length].  The
    truncated tail sum_{n>n_max} q(n) is bracketed by [0, q(n_max)(n_max+1)/eps].
    """
    if not (0 < epsilon < 1):
        raise ParameterError(f"epsilon must lie in (0,1), got {epsilon}")
    if n_max < 10:
        raise ParameterError(f"n_max must be >= 10, got {n_max}")
    x = np.arange(1, n_max, dtype=float)
    log_factors = np.log1p(-(1.0 + epsilon) / (x + 1.0))
    log_q = np.concatenate([[0.0, 0.0], np.cumsum(log_factors)])  # states 0..n_max
    weights = np.exp(log_q)
    norm_lower = float(math.fsum(weights))
    # q(n) <= q(n_max) ((n_max+1)/(n+1))^{1+eps} for n > n_max, so the tail sum
    # is at most q(n_max) (n_max+1)/eps by integral comparison.
    tail_upper = float(weights[-1]) * (n_max + 1.0) / epsilon
    return StationaryResult(
        support=np.arange(n_max + 1),
        weights=weights,
        norm_lower=norm_lower,
        norm_upper=norm_lower + tail_upper,
        tail_weight_upper=tail_upper,
    )


@dataclass(frozen=True)
class ConditionReport:
    """Exact max conditional drift / p-th moment over reachable states."""

    c1_pass: bool
    c2_pass: bool
    max_drift: float  # max over reachable {x > J} of E[dX | n, x]
    drift_witness: Optional[Tuple[int, int]]
    max_moment: float  # max over reachable (n, x) of E[|dX|^p | n, x]
    moment_witness: Optional[Tuple[int, int]]
    params: DriftParams
    truncated: bool = False

    @property
    def passed(self) -> bool:
        return self.c1_pass and self.c2_pass


def drift_report(
    kernel: Kernel,
    params: DriftParams,
    horizon: int,
    truncation: Optional[Union[float, Callable[[int, float], float]]] = None,
    init: Optional[DistVector] = None,
    state_cap: int = DEFAULT_STATE_CAP,
    rel_tol: float = 1e-9,
) -> ConditionReport:
    """Exact verification of the drift and moment conditions on every state
    reachable within the horizon.

    With ``truncation`` given (a constant Z or a function (n, x) -> Z), both
    conditional expectations restrict to increments with dX > Z.
    """
    if init is None:
        init = point_mass(int(round(kernel.initial_state)))
    laws = propagate(kernel, init, horizon, state_cap=state_cap)

    def z_at(n: int, x: float) -> float:
        if truncation is None:
            return -math.inf
        if callable(truncation):
            return truncation(n, x)
        return float(truncation)

    max_drift = -math.inf
    drift_witness = None
    max_moment = -math.inf
    moment_witness = None
    for law in laws[:-1]:
        n = law.time
        for x, m in zip(law.support, law.mass):
            if m == 0.0:
                continue
            z = z_at(n, float(x))
            row = kernel.row(n, float(x))
            deltas = [(y - x, p) for y, p in row]
            mom = math.fsum(p * abs(d) ** params.p for d, p in deltas if d > z)
            if mom > max_moment:
                max_moment = mom
                moment_witness = (n, int(x))
            if x > params.J:
                drift = math.fsum(p * d for d, p in deltas if d > z)
                if drift > max_drift:
                    max_drift = drift
                    drift_witness = (n, int(x))
    tol_a = rel_tol * max(1.0, abs(params.a))
    tol_v = rel_tol * max(1.0, abs(params.V))
    c1 = max_drift <= -params.a + tol_a
    c2 = max_moment <= params.V + tol_v
    return ConditionReport(
        c1_pass=bool(c1),
        c2_pass=bool(c2),
        max_drift=max_drift,
        drift_witness=drift_witness,
        max_moment=max_moment,
        moment_witness=moment_witness,
        params=params,
        truncated=truncation is not None,
    )
