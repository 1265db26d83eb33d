"""Command-line entry point ``nomamec``.

Exit codes: 0 on success, 1 when the scenario is infeasible, 2 on bad input.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import replace

import numpy as np

from .data_max import solve_p2
from .energy_min import DEFAULT_K, solve_p1
from .errors import AllInfeasible, CaseInfeasible, Infeasible
from .oracle import MeshSpec, oracle_p1, oracle_p2
from .simharness import ChannelModel, SweepConfig, gen_channels, run_sweep, seed_from_env, table_one_params, write_csv
from .system_model import params_from_dict, params_to_dict

EXIT_OK, EXIT_INFEASIBLE, EXIT_BAD_INPUT = 0, 1, 2


class _BadInput(Exception):
    pass


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    if hasattr(x, "value") and not isinstance(x, (int, str, bool)):
        return _jsonable(x.value)
    return x


def _emit(obj) -> None:
    print(json.dumps(_jsonable(obj), indent=2, sort_keys=True))


def _load_json(path: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise _BadInput(f"cannot read {path}: {e}") from e


def _load_scenario(path: str):
    try:
        return params_from_dict(_load_json(path))
    except (TypeError, ValueError, KeyError) as e:
        raise _BadInput(f"invalid scenario {path}: {e}") from e


def _seed(args) -> int:
    return args.seed if args.seed is not None else seed_from_env()


def _cmd_solve_p1(args) -> int:
    p = _load_scenario(args.scenario)
    if args.alpha_grid < 2:
        raise _BadInput("--alpha-grid must be >= 2")
    _emit(solve_p1(p, args.alpha_grid).to_dict())
    return EXIT_OK


def _cmd_solve_p2(args) -> int:
    _emit(solve_p2(_load_scenario(args.scenario)).to_dict())
    return EXIT_OK


def _cmd_sweep(args) -> int:
    try:
        cfg = SweepConfig.from_dict(_load_json(args.config))
        if args.seed is not None or seed_from_env(-1) >= 0:
            cfg = replace(cfg, seed=_seed(args))
        if args.realizations is not None:
            cfg = replace(cfg, realizations=args.realizations)
    except (TypeError, ValueError, KeyError) as e:
        raise _BadInput(f"invalid sweep config: {e}") from e
    res = run_sweep(cfg, workers=args.workers)
    write_csv(res, args.out)
    with open(args.out + ".meta.json", "w") as fh:
        json.dump(_jsonable(res.metadata()), fh, indent=2, sort_keys=True)
    return EXIT_OK


def _cmd_oracle_check(args) -> int:
    if args.mesh < 2:
        raise _BadInput("--mesh must be >= 2")
    if args.scenario:
        p = _load_scenario(args.scenario)
    else:
        p = table_one_params()
        p = replace(p, channels=gen_channels(ChannelModel(), np.random.default_rng(_seed(args))))
    if args.problem == "p1":
        solver = solve_p1(p).weighted_energy
        orc = oracle_p1(p, MeshSpec(points_per_axis=args.mesh))
    else:
        solver = solve_p2(p).weighted_bits
        orc = oracle_p2(p, MeshSpec(points_per_axis=args.mesh))
    denom = abs(orc.value) if orc.value != 0 else 1.0
    _emit(
        {
            "scenario": params_to_dict(p),
            "problem": args.problem,
            "solver_value": solver,
            "oracle_value": orc.value,
            "mesh_error": orc.mesh_error,
            "rel_gap": abs(solver - orc.value) / denom,
        }
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nomamec", description="Energy and offloaded-data optimization for a user assisted by a helper device")
    sub = ap.add_subparsers(dest="cmd", required=True)

    s = sub.add_parser("solve-p1", help="minimize weighted energy")
    s.add_argument("--scenario", required=True)
    s.add_argument("--alpha-grid", type=int, default=DEFAULT_K)
    s.set_defaults(func=_cmd_solve_p1)

    s = sub.add_parser("solve-p2", help="maximize weighted offloaded bits")
    s.add_argument("--scenario", required=True)
    s.set_defaults(func=_cmd_solve_p2)

    s = sub.add_parser("sweep", help="run a Monte Carlo figure sweep to CSV")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int)
    s.add_argument("--realizations", type=int)
    s.add_argument("--workers", type=int, default=1)
    s.set_defaults(func=_cmd_sweep)

    s = sub.add_parser("oracle-check", help="compare a solver with its brute-force oracle")
    s.add_argument("--scenario")
    s.add_argument("--problem", choices=("p1", "p2"), required=True)
    s.add_argument("--mesh", type=int, default=None)
    s.add_argument("--seed", type=int)
    s.set_defaults(func=_cmd_oracle_check)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_BAD_INPUT if e.code else EXIT_OK
    if getattr(args, "mesh", 0) is None:
        args.mesh = 60 if args.problem == "p1" else 400
    try:
        return args.func(args)
    except _BadInput as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except (Infeasible, CaseInfeasible, AllInfeasible) as e:
        print(f"infeasible: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
