"""Command-line front end: bound evaluation, exact propagation, simulation,
condition verification, stationary laws, and pre-registered experiments.

Every JSON artifact embeds the full run configuration, the build identifier,
and the master seed; timing lives under its own key so reproducibility checks
can ignore it.  Exit codes: 0 ok, 2 bad input, 3 assertion/criterion failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import inspect
import json
import sys
import time
from typing import List, Optional, Sequence

from . import __version__, bounds, chains, exact, experiments, montecarlo
from .core import DriftParams, Kernel, ParameterError

SCHEMA = "driftstab/1"

EXIT_OK = 0
EXIT_BAD_INPUT = 2
EXIT_ASSERTION = 3


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_BAD_INPUT):
        super().__init__(message)
        self.code = code


def _emit(payload: dict, args, started: float) -> None:
    payload = {
        "schema": SCHEMA,
        "build": __version__,
        "config": _config_echo(args),
        **payload,
        "timing": {"seconds": time.time() - started},
    }
    text = json.dumps(payload, indent=2)
    if getattr(args, "json", None):
        with open(args.json, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    if getattr(args, "csv", None):
        _write_csv(payload, args.csv)


def _config_echo(args) -> dict:
    # Worker count is an execution detail with no effect on results, so it is
    # left out of the reproducibility config.
    skip = {"func", "json", "csv", "workers"}
    return {
        k: v for k, v in sorted(vars(args).items()) if k not in skip and v is not None
    }


def _flatten_rows(payload: dict) -> List[dict]:
    """Pull the first list-of-dicts series out of the payload for CSV export."""
    for key in ("rows", "mc", "doublings", "series_rows"):
        if isinstance(payload.get(key), list) and payload[key] and isinstance(
            payload[key][0], dict
        ):
            return payload[key]
    series = payload.get("series")
    if isinstance(series, dict):
        keys = sorted(series)
        length = len(series[keys[0]])
        return [
            {"n": i, **{k: series[k][i] for k in keys}} for i in range(length)
        ]
    return []


def _write_csv(payload: dict, path: str) -> None:
    rows = _flatten_rows(payload)
    if not rows:
        rows = [
            {k: v}
            for k, v in payload.items()
            if isinstance(v, (int, float)) and k != "schema"
        ]
        if not rows:
            return
    fields: List[str] = []
    for row in rows:
        for key in row:
            if key not in fields:
                fields.append(key)
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: repr(v) if isinstance(v, float) else v
                             for k, v in row.items()})


def _build_chain(args) -> Kernel:
    name = args.chain
    if name == "sudan":
        return chains.build_sudan()
    if name == "amassed":
        if args.M is None:
            raise CliError("--M is required for the amassed chain")
        return chains.build_amassed(args.M)
    if name == "resetwalk":
        if args.epsilon is None:
            raise CliError("--epsilon is required for the reset walk")
        return chains.build_reset_walk(args.epsilon)
    raise CliError(f"chain {name!r} is not an integer-kernel chain")


def _build_process(args):
    if args.chain == "driftwalk":
        spec = chains.DriftWalkSpec(
            a=args.a if args.a is not None else 1.0,
            J=args.J if args.J is not None else 0.0,
            jump_tail_index=args.alpha,
            jump_scale=args.scale,
        )
        sampler, params = chains.build_drift_walk(
            spec, p=args.p if args.p is not None else 3.0, r=args.r or 1.0
        )
        return sampler, params
    return _build_chain(args), None


# ---------------------------------------------------------------------------
# commands


def cmd_bound(args) -> dict:
    params = DriftParams(a=args.a, J=args.J, p=args.p, V=args.V, r=args.r)
    value = bounds.theorem1_bound(params)
    out = {"c_final": value}
    if args.breakdown:
        bd = bounds.theorem1_constants(
            args.p, args.V / args.a ** args.p, args.r
        )
        out["breakdown"] = dataclasses.asdict(bd)
        out["normalized_V"] = args.V / args.a ** args.p
    if args.x0 is not None:
        out["corollary2_bound"] = bounds.corollary2_bound(params, args.x0)
    return out


def cmd_tailbound(args) -> dict:
    params = DriftParams(a=args.a, J=args.J, p=args.p, V=args.V, r=1.0)
    v_prime = (
        args.V_prime
        if args.V_prime is not None
        else bounds.recentered_moment_bound(args.V, args.p)
    )
    tb = bounds.TailBoundParams(params=params, V_prime=v_prime)
    out = {"V_prime": v_prime}
    if args.t is not None:
        out["tail_probability_bound"] = {
            "t": args.t,
            "value": bounds.p4_tail_probability(tb, args.t),
        }
    if args.expectation:
        out["expectation_bound"] = bounds.p4_expectation_bound(tb)
    return out


def cmd_theorem2(args) -> dict:
    C = bounds.theorem4_constant(args.b, args.p, args.r)
    t_grid = args.t_grid or [2, 4, 8, 16, 32, 64]
    return {
        "constant": C,
        "rows": [
            {"t": t, "bound": C * float(t) ** (args.r - args.p)} for t in t_grid
        ],
    }


def cmd_exact(args) -> dict:
    kernel = _build_chain(args)
    laws = exact.propagate(kernel, exact.point_mass(0), args.horizon)
    r = args.r if args.r is not None else 1.0
    moments = [exact.moment(law, r) for law in laws]
    final = laws[-1]
    return {
        "series": {"plus_moment": moments},
        "moment_order": r,
        "final_law": {
            "support": final.support.tolist(),
            "mass": final.mass.tolist(),
            "dropped_mass": final.dropped_mass,
        },
    }


def cmd_simulate(args) -> dict:
    process, params = _build_process(args)
    r = args.r if args.r is not None else 1.0
    mean, se = montecarlo.plus_moment_profile(
        process, args.horizon, args.trajectories, args.seed, r=r,
        workers=args.workers,
    )
    at = args.at or [args.horizon]
    rows = [
        {
            "n": n,
            "estimate": float(mean[n]),
            "std_error": float(se[n]),
            "ci95": [
                float(mean[n] - 1.96 * se[n]),
                float(mean[n] + 1.96 * se[n]),
            ],
        }
        for n in at
    ]
    out = {"rows": rows, "moment_order": r}
    if params is not None:
        out["certified_params"] = dataclasses.asdict(params)
    return out


def cmd_verify(args) -> dict:
    kernel = _build_chain(args)
    params = DriftParams(
        a=args.a if args.a is not None else 1.0,
        J=args.J if args.J is not None else 0.0,
        p=args.p if args.p is not None else 2.0,
        V=args.V if args.V is not None else 1.0,
        r=1.0,
    )
    truncation = args.trunc_z if args.condition == "c2trunc" else None
    report = exact.drift_report(kernel, params, args.horizon, truncation=truncation)
    relevant = report.c1_pass if args.condition == "c1" else report.c2_pass
    out = {
        "condition": args.condition,
        "passed": bool(relevant),
        "report": {
            "c1_pass": report.c1_pass,
            "c2_pass": report.c2_pass,
            "max_drift": report.max_drift,
            "drift_witness": report.drift_witness,
            "max_moment": report.max_moment,
            "moment_witness": report.moment_witness,
        },
    }
    if not relevant and args.strict:
        out["exit_code"] = EXIT_ASSERTION
    return out


def cmd_stationary(args) -> dict:
    stat = exact.stationary_reset_walk(args.epsilon, args.n_max)
    head = min(args.head, len(stat.support))
    return {
        "normalization": [stat.norm_lower, stat.norm_upper],
        "bracket_width": stat.bracket_width,
        "tail_weight_upper": stat.tail_weight_upper,
        "rows": [
            {"n": int(n), "pi": float(p), "pi_lower": float(pl), "pi_upper": float(pu)}
            for n, p, pl, pu in zip(
                stat.support[:head],
                stat.pi[:head],
                stat.pi_lower[:head],
                stat.pi_upper[:head],
            )
        ],
    }


def cmd_experiment(args) -> dict:
    overrides = {}
    for key in ("horizon", "trajectories", "seed", "workers", "epsilon"):
        value = getattr(args, key, None)
        if value is not None:
            overrides["n_traj" if key == "trajectories" else key] = value
    if args.name not in experiments.EXPERIMENTS:
        raise CliError(
            f"unknown experiment {args.name!r}; "
            f"choose from {sorted(experiments.EXPERIMENTS)}"
        )
    # Drop overrides the experiment does not accept.
    fn = experiments.EXPERIMENTS[args.name]
    sig = inspect.signature(fn)
    accepts_kwargs = any(
        p.kind == inspect.Parameter.VAR_KEYWORD for p in sig.parameters.values()
    )
    if not accepts_kwargs:
        overrides = {k: v for k, v in overrides.items() if k in sig.parameters}
    result = experiments.run_experiment(args.name, **overrides)
    failed = [c["name"] for c in result.get("criteria", []) if not c["passed"]]
    if failed:
        result["exit_code"] = EXIT_ASSERTION
        result["failed_criteria"] = failed
    return result


# ---------------------------------------------------------------------------
# parser


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--json", metavar="PATH", help="write the JSON artifact here")
    p.add_argument("--csv", metavar="PATH", help="write a CSV projection here")


def _add_chain_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--chain",
        required=True,
        choices=["sudan", "amassed", "resetwalk", "driftwalk"],
    )
    p.add_argument("--M", type=int)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--alpha", type=float, default=3.5)
    p.add_argument("--scale", type=float, default=0.5)
    p.add_argument("--a", type=float)
    p.add_argument("--J", type=float)
    p.add_argument("--p", type=float)
    p.add_argument("--V", type=float)
    p.add_argument("--r", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="driftstab",
        description="Drift-condition stability bounds, counterexample chains, "
        "exact propagation, and Monte Carlo verification.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bound", help="evaluate the explicit uniform moment bound")
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--V", type=float, required=True)
    p.add_argument("--J", type=float, required=True)
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--x0", type=float, help="also report the X_0-adjusted bound")
    p.add_argument("--breakdown", action="store_true")
    _add_common(p)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("tailbound", help="certified tail/expectation bounds (p > 4)")
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--V", type=float, required=True)
    p.add_argument("--J", type=float, required=True)
    p.add_argument("--V-prime", dest="V_prime", type=float)
    p.add_argument("--t", type=float, help="tail level to bound")
    p.add_argument("--expectation", action="store_true")
    _add_common(p)
    p.set_defaults(func=cmd_tailbound)

    p = sub.add_parser("theorem2", help="martingale tail-bound constant and curve")
    p.add_argument("--b", type=float, required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--t-grid", dest="t_grid", type=int, nargs="+")
    _add_common(p)
    p.set_defaults(func=cmd_theorem2)

    p = sub.add_parser("exact", help="exact distribution propagation")
    _add_chain_flags(p)
    p.add_argument("--horizon", type=int, required=True)
    _add_common(p)
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("simulate", help="Monte Carlo moment estimation")
    _add_chain_flags(p)
    p.add_argument("--horizon", type=int, required=True)
    p.add_argument("--trajectories", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--at", type=int, nargs="+", help="report times")
    _add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="exact drift/moment condition check")
    _add_chain_flags(p)
    p.add_argument("--condition", choices=["c1", "c2", "c2trunc"], required=True)
    p.add_argument("--horizon", type=int, default=200)
    p.add_argument("--trunc-z", dest="trunc_z", type=float,
                   help="truncation level Z for c2trunc")
    p.add_argument("--strict", action="store_true")
    _add_common(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("stationary", help="reset-walk stationary law")
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--n-max", dest="n_max", type=int, default=1 << 20)
    p.add_argument("--head", type=int, default=50, help="states to list")
    _add_common(p)
    p.set_defaults(func=cmd_stationary)

    p = sub.add_parser("experiment", help="run a pre-registered experiment")
    p.add_argument("name")
    p.add_argument("--horizon", type=int)
    p.add_argument("--trajectories", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--epsilon", type=float)
    _add_common(p)
    p.set_defaults(func=cmd_experiment)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    started = time.time()
    try:
        payload = args.func(args)
    except CliError as err:
        print(f"error: {err}", file=sys.stderr)
        return err.code
    except (ParameterError, bounds.ConstantOverflowError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_BAD_INPUT
    code = payload.pop("exit_code", EXIT_OK)
    _emit(payload, args, started)
    return code


if __name__ == "__main__":
    sys.exit(main())
