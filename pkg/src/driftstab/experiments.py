"""Pre-registered experiments: each returns a JSON-safe dict with the raw
series, the checked criteria, and every parameter needed to reproduce it."""

from __future__ import annotations

import math
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import bounds, chains, exact, montecarlo
from .core import DriftParams, Kernel, ParameterError

__all__ = ["EXPERIMENTS", "run_experiment"]


def _criterion(name: str, passed: bool, **details) -> dict:
    entry = {"name": name, "passed": bool(passed)}
    entry.update(details)
    return entry


def sudan_growth(
    horizon: int = 1000,
    n_traj: int = 100_000,
    seed: int = 0,
    workers: int = 1,
    mc_times: Sequence[int] = (10, 30, 50),
) -> dict:
    """Exact linear growth E(X_n) = n/3 of the two-point chain, plus Monte
    Carlo agreement with the exact law."""
    kernel = chains.build_sudan()
    laws = exact.propagate(kernel, exact.point_mass(0), horizon)
    means = [exact.moment(law, 1.0) for law in laws]
    errors = [abs(means[n] - n / 3.0) for n in range(2, horizon + 1)]
    max_err = max(errors)
    ns = np.arange(2, horizon + 1, dtype=float)
    slope = float(np.polyfit(ns, np.array(means[2:]), 1)[0])

    mc_times = [int(n) for n in mc_times if int(n) <= horizon]
    if not mc_times:
        raise ParameterError("mc_times has no entry within the horizon")
    mean_arr, se_arr = montecarlo.plus_moment_profile(
        kernel, max(mc_times), n_traj, seed, r=1.0, workers=workers
    )
    mc_rows = []
    mc_ok = True
    for n in mc_times:
        within = abs(mean_arr[n] - means[n]) <= 4.0 * se_arr[n]
        mc_ok = mc_ok and within
        mc_rows.append(
            {
                "n": n,
                "estimate": float(mean_arr[n]),
                "std_error": float(se_arr[n]),
                "exact": means[n],
                "within_4se": bool(within),
            }
        )
    return {
        "name": "sudan-growth",
        "parameters": {
            "horizon": horizon,
            "n_traj": n_traj,
            "seed": seed,
            "mc_times": mc_times,
        },
        "series": {"mean": means},
        "slope": slope,
        "max_abs_error": max_err,
        "mc": mc_rows,
        "criteria": [
            _criterion("exact-mean-n-over-3", max_err <= 1e-9, max_abs_error=max_err),
            _criterion(
                "slope-one-third", abs(slope - 1.0 / 3.0) <= 0.1 / 3.0, slope=slope
            ),
            _criterion("mc-within-4se-of-exact", mc_ok),
        ],
    }


def amassed_growth(M_grid: Sequence[int] = (10, 100, 1000), **_ignored) -> dict:
    """Logarithmic growth of the expected value at the amassing time."""
    A = math.exp(-bounds.zeta(2.0))
    rows = []
    for M in sorted(int(M) for M in M_grid):
        kernel = chains.build_amassed(M)
        law = exact.propagate(kernel, exact.point_mass(0), M)[-1]
        mean = exact.moment(law, 1.0)
        harmonic = math.fsum(1.0 / j for j in range(1, M + 2))
        rows.append(
            {"M": M, "mean": mean, "lower_bound": A * harmonic,
             "above_bound": bool(mean >= A * harmonic)}
        )
    above = all(row["above_bound"] for row in rows)
    increments_ok = True
    per_decade = 0.9 * A * math.log(10.0)
    for lo, hi in zip(rows, rows[1:]):
        decades = math.log10(hi["M"] / lo["M"])
        if hi["mean"] - lo["mean"] < per_decade * decades:
            increments_ok = False
    return {
        "name": "amassed-growth",
        "parameters": {"M_grid": [row["M"] for row in rows]},
        "A": A,
        "rows": rows,
        "criteria": [
            _criterion("mean-above-A-harmonic", above),
            _criterion("growth-per-decade", increments_ok, per_decade=per_decade),
        ],
    }


def reset_walk_tail(
    epsilon: float = 0.5,
    n_max: int = 1 << 20,
    fit_lo: int = 1 << 14,
    fit_hi: int = 1 << 19,
    **_ignored,
) -> dict:
    """Polynomial tail of the reset-walk stationary law and divergence of its
    mean under truncation."""
    stat = exact.stationary_reset_walk(epsilon, n_max)
    pi = stat.pi
    n = np.arange(len(pi))
    mask = (n >= fit_lo) & (n <= fit_hi)
    slope = float(np.polyfit(np.log(n[mask]), np.log(pi[mask]), 1)[0])
    target = -(1.0 + epsilon)

    weighted = n * pi
    csum = np.cumsum(weighted)
    doublings = []
    N = 1
    min_inc = math.inf
    while 2 * N <= n_max:
        inc = float(csum[2 * N] - csum[N])
        doublings.append({"N": N, "increment": inc})
        min_inc = min(min_inc, inc)
        N *= 2
    return {
        "name": "reset-walk-tail",
        "parameters": {
            "epsilon": epsilon,
            "n_max": n_max,
            "fit_range": [fit_lo, fit_hi],
        },
        "slope": slope,
        "target_slope": target,
        "bracket_width": stat.bracket_width,
        "doublings": doublings,
        "criteria": [
            _criterion(
                "tail-exponent", abs(slope - target) <= 0.05, slope=slope, target=target
            ),
            _criterion(
                "partial-sums-diverge", min_inc >= 0.05, min_increment=min_inc
            ),
        ],
    }


def theorem1_stability(
    alpha: float = 3.5,
    scale: float = 0.5,
    a: float = 1.0,
    J: float = 0.0,
    p: float = 3.0,
    r: float = 1.0,
    horizon: int = 2000,
    n_traj: int = 100_000,
    seed: int = 0,
    workers: int = 1,
) -> dict:
    """Positive test of the uniform moment bound on the certified drift walk."""
    spec = chains.DriftWalkSpec(a=a, J=J, jump_tail_index=alpha, jump_scale=scale)
    sampler, params = chains.build_drift_walk(spec, p=p, r=r)
    bound = bounds.theorem1_bound(params)
    mean, se = montecarlo.plus_moment_profile(
        sampler, horizon, n_traj, seed, r=r, workers=workers
    )
    upper = mean + 4.0 * se
    worst = int(np.argmax(upper))
    return {
        "name": "theorem1-stability",
        "parameters": {
            "alpha": alpha,
            "scale": scale,
            "a": a,
            "J": J,
            "p": p,
            "r": r,
            "horizon": horizon,
            "n_traj": n_traj,
            "seed": seed,
        },
        "certified_V": params.V,
        "bound": bound,
        "max_upper_estimate": float(upper[worst]),
        "argmax_n": worst,
        "series": {"mean": mean.tolist(), "std_error": se.tolist()},
        "criteria": [
            _criterion(
                "uniform-moment-bound",
                float(upper.max()) <= bound,
                max_upper_estimate=float(upper.max()),
                bound=bound,
            )
        ],
    }


def theorem4_tail(
    t_grid: Sequence[int] = (2, 4, 8, 16, 32, 64),
    pr_pairs: Sequence[Tuple[float, float]] = ((3.0, 1.0), (2.5, 1.2)),
    step_size: float = 3.0,
    n_traj: int = 1_000_000,
    seed: int = 0,
    workers: int = 1,
) -> dict:
    """Martingale tail bound on the fair +-h walk (conditional p-th increment
    moment h^p)."""
    sampler = chains.build_symmetric_walk(step_size)
    tables = []
    all_pass = True
    for p, r in pr_pairs:
        b = step_size ** p
        rows = montecarlo.verify_theorem4(
            sampler, b, p, r, t_grid, n_traj, seed, workers=workers
        )
        all_pass = all_pass and all(row.passed for row in rows)
        tables.append(
            {
                "p": p,
                "r": r,
                "b": b,
                "rows": [row.__dict__ for row in rows],
            }
        )
    return {
        "name": "theorem4-tail",
        "parameters": {
            "t_grid": [int(t) for t in t_grid],
            "pr_pairs": [[p, r] for p, r in pr_pairs],
            "step_size": step_size,
            "n_traj": n_traj,
            "seed": seed,
        },
        "tables": tables,
        "criteria": [_criterion("tail-bound-all-t", all_pass)],
    }


def lemma_suite(
    n_traj: int = 1_000_000,
    seed: int = 0,
    workers: int = 1,
    lemma7_n_grid: Sequence[int] = (10, 100, 1000),
    lemma8_x_grid: Sequence[float] = (1, 2, 4, 8, 16),
    lemma8_horizon: int = 64,
) -> dict:
    """Moment growth of a fair walk (exact fourth-moment recursion) and the
    hitting-time tail bound on a heavy-increment martingale."""
    # E M_n^4 for the fair +-1 walk: m4(n+1) = m4(n) + 6 n + 1 => 3n^2 - 2n.
    exact4 = {n: 3.0 * n * n - 2.0 * n for n in range(0, 10_001)}
    ratio_ok = all(
        exact4[n] <= 81.0 * n * n for n in range(1, 10_001)
    )
    walk = chains.build_symmetric_walk(1.0)
    rows7 = montecarlo.verify_lemma_Lp(
        walk, 1.0, 4.0, lemma7_n_grid, min(n_traj, 200_000), seed, workers=workers
    )
    mc_vs_exact = all(
        abs(row.estimate - exact4[int(row.index)]) <= 4.0 * row.std_error
        for row in rows7
    )

    heavy = chains.build_heavy_martingale(jump=4.0, jump_prob=1.0 / 32.0)
    p8 = 3.0
    b8 = 2.0 * (1.0 / 32.0) * 4.0 ** p8
    rows8 = montecarlo.verify_lemma_tau(
        heavy, b8, p8, lemma8_x_grid, lemma8_horizon, n_traj, seed, workers=workers
    )
    return {
        "name": "lemma-suite",
        "parameters": {
            "n_traj": n_traj,
            "seed": seed,
            "lemma7_n_grid": [int(n) for n in lemma7_n_grid],
            "lemma8_x_grid": [float(x) for x in lemma8_x_grid],
            "lemma8_horizon": lemma8_horizon,
            "lemma8_b": b8,
            "lemma8_p": p8,
        },
        "lemma7": [row.__dict__ for row in rows7],
        "lemma8": [row.__dict__ for row in rows8],
        "criteria": [
            _criterion("lemma7-exact-ratio", ratio_ok),
            _criterion(
                "lemma7-bound", all(row.passed for row in rows7)
            ),
            _criterion("lemma7-mc-vs-recursion", mc_vs_exact),
            _criterion("lemma8-bound", all(row.passed for row in rows8)),
        ],
    }


def _capped_reset_walk(a: float) -> Kernel:
    """Reset walk variant with drift -a and positive increments <= 1; only the
    positive part of its increments is moment-bounded."""

    def transition(n: int, x: float) -> list:
        if x == 0:
            return [(1.0, 1.0)]
        q = min(1.0, (1.0 + a) / (x + 1.0))
        if q >= 1.0:
            return [(0.0, 1.0)]
        return [(x + 1.0, 1.0 - q), (0.0, q)]

    return Kernel(
        transition=transition, state_kind="integer", description=f"capped-reset(a={a})"
    )


def open_question_sweep(
    a_grid: Sequence[float] = (0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0),
    horizon: int = 400,
    **_ignored,
) -> dict:
    """Sweep the drift magnitude for a nonnegative chain whose condition set
    bounds only the positive part of the increments; reports the exact running
    sup of E(X_n).  Series only: no pass/fail is attached."""
    rows = []
    for a in a_grid:
        kernel = _capped_reset_walk(float(a))
        laws = exact.propagate(kernel, exact.point_mass(0), horizon)
        means = [exact.moment(law, 1.0) for law in laws]
        rows.append(
            {
                "a": float(a),
                "sup_mean": max(means),
                "final_mean": means[-1],
            }
        )
    return {
        "name": "open-question-sweep",
        "parameters": {"a_grid": [float(a) for a in a_grid], "horizon": horizon},
        "rows": rows,
        "criteria": [],
    }


EXPERIMENTS = {
    "sudan-growth": sudan_growth,
    "amassed-growth": amassed_growth,
    "reset-walk-tail": reset_walk_tail,
    "theorem1-stability": theorem1_stability,
    "theorem4-tail": theorem4_tail,
    "lemma-suite": lemma_suite,
    "open-question-sweep": open_question_sweep,
}


def run_experiment(name: str, **overrides) -> dict:
    if name not in EXPERIMENTS:
        raise ParameterError(
            f"unknown experiment {name!r}; choose from {sorted(EXPERIMENTS)}"
        )
    return EXPERIMENTS[name](**overrides)
