"""Deterministic parallel trajectory simulation, stopping-time instrumentation,
estimator machinery, the Doob split, and the empirical inequality checks.

Every trajectory draws its uniforms from its own counter-based substream (one
uniform per time step), so batches are bit-reproducible for any block size,
visitation order, or worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from . import bounds
from .core import DriftParams, Kernel, ParameterError, Sampler, Trajectory, substream

__all__ = [
    "DEFAULT_BLOCK_SIZE",
    "EstimatorResult",
    "StopTimes",
    "DoobParts",
    "VerifyRow",
    "LastVisitTable",
    "simulate_batch",
    "iter_value_blocks",
    "estimate_plus_moment",
    "plus_moment_profile",
    "compute_stop_times",
    "verify_theorem4",
    "verify_lemma_Lp",
    "verify_lemma_tau",
    "doob_decompose",
    "shifted_process",
    "last_visit_decomposition",
]

DEFAULT_BLOCK_SIZE = 1 << 14

Process = Union[Kernel, Sampler]


@dataclass(frozen=True)
class EstimatorResult:
    mean: float
    std_error: float
    n_samples: int
    ci95: Tuple[float, float]

    @classmethod
    def from_sums(cls, total: float, total_sq: float, n: int) -> "EstimatorResult":
        mean = total / n
        if n > 1:
            var = max(total_sq - n * mean * mean, 0.0) / (n - 1)
            se = math.sqrt(var / n)
        else:
            se = 0.0
        return cls(mean=mean, std_error=se, n_samples=n,
                   ci95=(mean - 1.96 * se, mean + 1.96 * se))

    @classmethod
    def from_samples(cls, samples: Sequence[float]) -> "EstimatorResult":
        arr = np.asarray(samples, dtype=float)
        return cls.from_sums(float(math.fsum(arr)), float(math.fsum(arr * arr)), len(arr))


# ---------------------------------------------------------------------------
# simulation engine


def _uniform_rows(master_seed: int, start: int, count: int, horizon: int) -> np.ndarray:
    rows = np.empty((count, horizon))
    for j in range(count):
        rows[j] = substream(master_seed, start + j).random(horizon)
    return rows


class _KernelRowCache:
    """Per-(time, state) support/cdf cache for vectorized kernel stepping."""

    def __init__(self, kernel: Kernel):
        self.kernel = kernel
        self.cache: Dict[Tuple[int, float], Tuple[np.ndarray, np.ndarray]] = {}

    def get(self, n: int, x: float) -> Tuple[np.ndarray, np.ndarray]:
        key = (n, x)
        hit = self.cache.get(key)
        if hit is None:
            row = self.kernel.row(n, x)
            support = np.array([y for y, _ in row], dtype=float)
            cdf = np.cumsum([p for _, p in row])
            hit = (support, cdf)
            if len(self.cache) < 1 << 20:
                self.cache[key] = hit
        return hit


def _kernel_step(cache: _KernelRowCache, n: int, x: np.ndarray, u: np.ndarray) -> np.ndarray:
    states, inverse = np.unique(x, return_inverse=True)
    rows = [cache.get(n, float(s)) for s in states]
    width = max(len(sup) for sup, _ in rows)
    support_mat = np.zeros((len(rows), width))
    cdf_mat = np.ones((len(rows), width))
    for i, (sup, cdf) in enumerate(rows):
        support_mat[i, : len(sup)] = sup
        cdf_mat[i, : len(cdf)] = cdf
        if len(sup) < width:
            support_mat[i, len(sup):] = sup[-1]
    # Inverse-CDF pick: index of first cdf entry strictly above u.
    idx = (u[:, None] >= cdf_mat[inverse]).sum(axis=1)
    np.clip(idx, 0, width - 1, out=idx)
    return support_mat[inverse, idx]


def _simulate_block(
    process: Process, horizon: int, master_seed: int, start: int, count: int
) -> np.ndarray:
    u = _uniform_rows(master_seed, start, count, horizon)
    values = np.empty((count, horizon + 1))
    values[:, 0] = process.initial_state
    if isinstance(process, Kernel):
        cache = _KernelRowCache(process)
        for n in range(horizon):
            values[:, n + 1] = _kernel_step(cache, n, values[:, n], u[:, n])
    else:
        for n in range(horizon):
            values[:, n + 1] = process.step(n, values[:, n], u[:, n])
    return values


def iter_value_blocks(
    process: Process,
    horizon: int,
    n_traj: int,
    master_seed: int,
    block_size: int = DEFAULT_BLOCK_SIZE,
    workers: int = 1,
) -> Iterator[Tuple[int, np.ndarray]]:
    """Yield (start_index, values) blocks in index order; ``values`` has shape
    (block, horizon+1).  Output is identical for any worker count."""
    if horizon < 1 or n_traj < 1:
        raise ParameterError("horizon and n_traj must be >= 1")
    starts = list(range(0, n_traj, block_size))

    def run(start: int) -> np.ndarray:
        count = min(block_size, n_traj - start)
        return _simulate_block(process, horizon, master_seed, start, count)

    if workers <= 1 or len(starts) == 1:
        for start in starts:
            yield start, run(start)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for start, block in zip(starts, pool.map(run, starts)):
                yield start, block


def simulate_batch(
    process: Process,
    horizon: int,
    n_traj: int,
    master_seed: int,
    params: Optional[DriftParams] = None,
    block_size: int = DEFAULT_BLOCK_SIZE,
    workers: int = 1,
) -> Iterator[Trajectory]:
    """Stream every trajectory exactly once, in index order."""
    for start, block in iter_value_blocks(
        process, horizon, n_traj, master_seed, block_size, workers
    ):
        for j in range(block.shape[0]):
            yield Trajectory(values=block[j], params=params, seed_id=start + j)


# ---------------------------------------------------------------------------
# estimators


def estimate_plus_moment(
    trajectories: Iterable[Trajectory], n: int, r: float
) -> EstimatorResult:
    """Sample mean of ((X_n)^+)^r with plug-in standard error."""
    terms = [max(t.values[n], 0.0) ** r for t in trajectories]
    if not terms:
        raise ParameterError("no trajectories supplied")
    return EstimatorResult.from_samples(terms)


def plus_moment_profile(
    process: Process,
    horizon: int,
    n_traj: int,
    master_seed: int,
    r: float,
    block_size: int = DEFAULT_BLOCK_SIZE,
    workers: int = 1,
) -> Tuple[np.ndarray, np.ndarray]:
    """Estimate E[(X_n^+)^r] for every n <= horizon in one streaming pass.

    Returns (mean, std_error) arrays of length horizon+1.
    """
    total = np.zeros(horizon + 1)
    total_sq = np.zeros(horizon + 1)
    for _, block in iter_value_blocks(
        process, horizon, n_traj, master_seed, block_size, workers
    ):
        xp = np.maximum(block, 0.0) ** r
        total += xp.sum(axis=0)
        total_sq += (xp * xp).sum(axis=0)
    mean = total / n_traj
    var = np.maximum(total_sq - n_traj * mean * mean, 0.0) / max(n_traj - 1, 1)
    return mean, np.sqrt(var / n_traj)


# ---------------------------------------------------------------------------
# stopping times


@dataclass(frozen=True)
class StopTimes:
    """All stopping times of one path; None marks 'not attained in horizon'.

    tau: first n > 0 with M_n <= n.
    sigma: the same line-crossing time read off the path as a compensated
           process (identical definition, kept as its own field).
    T: first k >= 0 with increment >= t_ref/4.
    U: last k <= N with X_k <= J.
    """

    tau: Optional[int]
    sigma: Optional[int]
    T: Optional[int]
    U: Optional[int]
    t_ref: float
    _values: np.ndarray = field(repr=False)

    def hitting_time(self, x: float) -> Optional[int]:
        """S_x: first k >= 0 with M_k >= x."""
        idx = np.nonzero(self._values >= x)[0]
        return int(idx[0]) if len(idx) else None


def compute_stop_times(
    traj: Trajectory, params: DriftParams, t_ref: float
) -> StopTimes:
    v = traj.values
    n_idx = np.arange(1, len(v))
    crossed = np.nonzero(v[1:] <= n_idx)[0]
    tau = int(crossed[0] + 1) if len(crossed) else None
    jumps = np.nonzero(np.diff(v) >= t_ref / 4.0)[0]
    T = int(jumps[0]) if len(jumps) else None
    below = np.nonzero(v <= params.J)[0]
    U = int(below[-1]) if len(below) else None
    return StopTimes(tau=tau, sigma=tau, T=T, U=U, t_ref=t_ref, _values=v)


# ---------------------------------------------------------------------------
# inequality verification


@dataclass(frozen=True)
class VerifyRow:
    index: float  # the grid value (t, n, or x)
    estimate: float
    std_error: float
    bound: float
    passed: bool


def _pass_rule(estimate: float, se: float, bound: float) -> bool:
    # One-sided statistical rule: Monte Carlo noise cannot fail a true bound.
    return estimate - 4.0 * se <= bound


def verify_theorem4(
    sampler: Sampler,
    b: float,
    p: float,
    r: float,
    t_grid: Sequence[int],
    n_traj: int,
    master_seed: int,
    block_size: int = DEFAULT_BLOCK_SIZE,
    workers: int = 1,
) -> List[VerifyRow]:
    """Check E[(M_t^+)^r 1{tau > t}] <= C(b,p,r) t^{r-p} on the grid.

    The sampler's increments must satisfy the conditional p-th moment bound b
    and start at M_0 <= 0; this is the caller's certification.
    """
    t_grid = sorted(int(t) for t in t_grid)
    horizon = t_grid[-1]
    C = bounds.theorem4_constant(b, p, r)
    total = {t: 0.0 for t in t_grid}
    total_sq = {t: 0.0 for t in t_grid}
    for _, block in iter_value_blocks(
        sampler, horizon, n_traj, master_seed, block_size, workers
    ):
        line = block[:, 1:] - np.arange(1, horizon + 1)
        alive = np.minimum.accumulate(line, axis=1) > 0  # alive[:, t-1] == {tau > t}
        for t in t_grid:
            term = np.maximum(block[:, t], 0.0) ** r * alive[:, t - 1]
            total[t] += float(term.sum())
            total_sq[t] += float((term * term).sum())
    rows = []
    for t in t_grid:
        est = EstimatorResult.from_sums(total[t], total_sq[t], n_traj)
        bound = C * float(t) ** (r - p)
        rows.append(
            VerifyRow(
                index=float(t),
                estimate=est.mean,
                std_error=est.std_error,
                bound=bound,
                passed=_pass_rule(est.mean, est.std_error, bound),
            )
        )
    return rows


def verify_lemma_Lp(
    sampler: Sampler,
    L: float,
    p: float,
    n_grid: Sequence[int],
    n_traj: int,
    master_seed: int,
    block_size: int = DEFAULT_BLOCK_SIZE,
    workers: int = 1,
) -> List[VerifyRow]:
    """Check E|M_n|^p <= c_p L n^{p/2} for a martingale with conditionally
    L-bounded p-th increment moments and M_0 = 0."""
    n_grid = sorted(int(n) for n in n_grid)
    horizon = n_grid[-1]
    c_p = bounds.burkholder_constant(p)
    total = {n: 0.0 for n in n_grid}
    total_sq = {n: 0.0 for n in n_grid}
    for _, block in iter_value_blocks(
        sampler, horizon, n_traj, master_seed, block_size, workers
    ):
        for n in n_grid:
            term = np.abs(block[:, n]) ** p
            total[n] += float(term.sum())
            total_sq[n] += float((term * term).sum())
    rows = []
    for n in n_grid:
        est = EstimatorResult.from_sums(total[n], total_sq[n], n_traj)
        bound = c_p * L * float(n) ** (p / 2.0)
        rows.append(
            VerifyRow(
                index=float(n),
                estimate=est.mean,
                std_error=est.std_error,
                bound=bound,
                passed=_pass_rule(est.mean, est.std_error, bound),
            )
        )
    return rows


def verify_lemma_tau(
    sampler: Sampler,
    b: float,
    p: float,
    x_grid: Sequence[float],
    horizon: int,
    n_traj: int,
    master_seed: int,
    block_size: int = DEFAULT_BLOCK_SIZE,
    workers: int = 1,
) -> List[VerifyRow]:
    """Check P(tau > S_x) <= C'(p,b) / x^{p/2}.

    Paths where x is never hit within the horizon count as failures of the
    event {tau > S_x}, keeping the estimate a lower bound of the truth.
    """
    C_prime = bounds.hitting_constant(b, p)
    x_grid = sorted(float(x) for x in x_grid)
    total = {x: 0.0 for x in x_grid}
    for _, block in iter_value_blocks(
        sampler, horizon, n_traj, master_seed, block_size, workers
    ):
        count = block.shape[0]
        prefmax = np.maximum.accumulate(block, axis=1)
        line = block[:, 1:] - np.arange(1, horizon + 1)
        linemin = np.minimum.accumulate(line, axis=1)
        rows_idx = np.arange(count)
        for x in x_grid:
            hit = prefmax >= x
            attained = hit[:, -1]
            s = hit.argmax(axis=1)  # first index where M_k >= x (valid if attained)
            # {tau > S_x}: S_x attained and M_n > n for every 1 <= n <= S_x.
            ok_line = np.where(s >= 1, linemin[rows_idx, np.maximum(s - 1, 0)] > 0, True)
            event = attained & ok_line
            total[x] += float(event.sum())
    rows = []
    for x in x_grid:
        est = EstimatorResult.from_sums(total[x], total[x], n_traj)
        bound = C_prime / x ** (p / 2.0)
        rows.append(
            VerifyRow(
                index=x,
                estimate=est.mean,
                std_error=est.std_error,
                bound=bound,
                passed=_pass_rule(est.mean, est.std_error, bound),
            )
        )
    return rows


# ---------------------------------------------------------------------------
# Doob split, shifted process, last-visit decomposition


@dataclass(frozen=True)
class DoobParts:
    """Split of a stopped supermartingale into martingale minus compensator.

    Arrays are indexed by time; martingale[n] - compensator[n] reproduces the
    input path stopped at sigma, exactly.  Compensation starts at n = 1 (the
    step from time 0 is left uncompensated, matching a process whose
    martingale property is only required from time 1 on).
    """

    martingale: np.ndarray
    compensator: np.ndarray
    means: np.ndarray  # means[n] = E[X_{n+1} - X_n | n, X_n] from the kernel
    sigma: Optional[int]


def _kernel_mean(kernel: Kernel, n: int, x: float) -> float:
    return math.fsum(p * (y - x) for y, p in kernel.row(n, x))


def doob_decompose(traj: Trajectory, kernel: Kernel) -> DoobParts:
    """Exact Doob split of the path stopped at sigma = inf{n>0: X_n <= n},
    with conditional means taken from the kernel (never from samples)."""
    v = traj.values
    N = len(v) - 1
    crossed = np.nonzero(v[1:] <= np.arange(1, N + 1))[0]
    sigma = int(crossed[0] + 1) if len(crossed) else None
    stop = sigma if sigma is not None else N + 1
    mu = np.array([_kernel_mean(kernel, n, float(v[n])) for n in range(N)])
    A = np.zeros(N + 1)
    M = np.empty(N + 1)
    M[0] = v[0]
    for n in range(1, N + 1):
        M[n] = v[min(n, stop)] + A[n]
        if n < N:
            A[n + 1] = A[n] - (mu[n] if n < stop else 0.0)
    return DoobParts(martingale=M, compensator=A, means=mu, sigma=sigma)


def shifted_process(traj: Trajectory, k: int, J: float) -> Trajectory:
    """The compensated shifted path: (X_{k+n} - J + n) when X_k <= J, constant
    zero otherwise."""
    v = traj.values
    if not (0 <= k < len(v)):
        raise ParameterError(f"k must lie in [0, {len(v) - 1}], got {k}")
    if v[k] > J:
        out = np.zeros(len(v) - k)
    else:
        out = (v[k:] - J) + np.arange(len(v) - k)
    return Trajectory(values=out, params=traj.params, seed_id=traj.seed_id)


@dataclass(frozen=True)
class LastVisitTable:
    """Per-k contributions E[(X_N^+)^r 1{U = k}] to the plain estimator.

    ``columns[k]`` is the contribution of paths whose last visit to
    (-inf, J] before N was at time k; ``never`` collects paths that stayed
    above J throughout.  Columns sum to the plain sample mean by partition.
    """

    columns: Dict[int, float]
    never: float
    n_samples: int

    @property
    def total(self) -> float:
        return math.fsum(list(self.columns.values()) + [self.never])


def last_visit_decomposition(
    trajectories: Iterable[Trajectory], N: int, J: float, r: float
) -> LastVisitTable:
    sums: Dict[int, List[float]] = {}
    never: List[float] = []
    count = 0
    for traj in trajectories:
        v = traj.values
        if len(v) <= N:
            raise ParameterError(f"trajectory shorter than N = {N}")
        count += 1
        term = max(v[N], 0.0) ** r
        below = np.nonzero(v[: N + 1] <= J)[0]
        if len(below):
            sums.setdefault(int(below[-1]), []).append(term)
        else:
            never.append(term)
    if count == 0:
        raise ParameterError("no trajectories supplied")
    columns = {k: math.fsum(terms) / count for k, terms in sorted(sums.items())}
    return LastVisitTable(
        columns=columns, never=math.fsum(never) / count, n_samples=count
    )
