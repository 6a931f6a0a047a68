"""Command line front end.

Subcommands:

* ``ccp-sweep``: correlation-grid sweep of member credit provisions and
  capital, plus the nondecreasing-in-dependence gate. Writes a CSV of all
  cells and a JSON monotonicity report.
* ``cdo-sweep``: tranche leg prices over an equicorrelation grid with the
  expected sign pattern of the common-random-number increments gated the
  same way.
* ``risk-report``: one grid cell, printed.
* ``check-properties``: deterministic supermodularity certificates of the
  allocation coefficients and of the member-loss function, with a negative
  control that must fail.

Exit codes: 0 success, 1 a monotonicity/sign/property gate failed,
2 configuration error (also used by argparse for bad flags).
"""

from __future__ import annotations

import argparse
import os
import sys

from .ccp import check_clearing_condition
from .factors import validate_model
from .supermod import (
    GridSpec,
    check_ccp_allocation_supermodular,
    check_ccp_loss_supermodular,
    check_increasing_differences,
)
from .sweep import (
    CdoConfig,
    ConfigError,
    RunConfig,
    cdo_monotonicity_jsonable,
    check_monotonicity,
    run_cdo_sweep,
    run_sweep,
    write_cdo_csv,
    write_json,
    write_sweep_csv,
)

SWEEP_CSV = "ccp_sweep.csv"
SWEEP_MONO_JSON = "ccp_monotonicity.json"
CDO_CSV = "cdo_sweep.csv"
CDO_MONO_JSON = "cdo_monotonicity.json"


def _add_common(p: argparse.ArgumentParser, batches: bool = True, members: bool = False):
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--paths", type=int, help="override the number of paths")
    if batches:
        p.add_argument("--batches", type=int, help="override the number of batches")
    if members:
        p.add_argument(
            "--members",
            help="comma-separated reference member ids (overrides the config)",
        )
    p.add_argument("--out", default=".", help="output directory (default: current)")
    p.add_argument("--k-sigma", type=float, default=3.0, help="gate tolerance in stderr units")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="covloss",
        description="Monte Carlo credit-loss engine: clearing-member provisions "
        "and capital over correlation grids, CDO tranche legs, and "
        "supermodularity certificates.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ccp-sweep", help="run the correlation-grid sweep and monotonicity gate")
    _add_common(p, batches=True, members=True)

    p = sub.add_parser("cdo-sweep", help="price tranche legs over the correlation grid")
    _add_common(p, batches=False, members=False)

    p = sub.add_parser("risk-report", help="estimate one grid cell and print the report")
    _add_common(p, batches=True, members=True)
    p.add_argument("--rho-cr", type=float, help="credit correlation (default: first valid cell)")
    p.add_argument("--rho-wwr", type=float, help="wrong-way correlation (default: first valid cell)")

    p = sub.add_parser("check-properties", help="run the supermodularity certificate suites")
    return parser


def _ccp_overrides(args) -> dict:
    ov: dict = {}
    if args.seed is not None:
        ov["seed"] = args.seed
    if args.paths is not None:
        ov["n_paths"] = args.paths
    if getattr(args, "batches", None) is not None:
        ov["n_batches"] = args.batches
    if getattr(args, "members", None):
        try:
            ov["reference_members"] = tuple(int(s) for s in args.members.split(","))
        except ValueError:
            raise ConfigError(f"--members must be comma-separated integers, got {args.members!r}")
    return ov


def _warn_clearing(config: RunConfig) -> None:
    if not check_clearing_condition(config.members):
        total = float(sum(m.nom for m in config.members))
        print(
            f"warning: member sizes sum to {total:g}, not 0; "
            "the clearing condition is unbalanced",
            file=sys.stderr,
        )


def _cmd_ccp_sweep(args) -> int:
    config = RunConfig.from_file(args.config).override(**_ccp_overrides(args))
    _warn_clearing(config)
    sweep = run_sweep(config)
    report = check_monotonicity(sweep, k_sigma=args.k_sigma)
    os.makedirs(args.out, exist_ok=True)
    csv_path = os.path.join(args.out, SWEEP_CSV)
    json_path = os.path.join(args.out, SWEEP_MONO_JSON)
    write_sweep_csv(sweep, csv_path)
    write_json(report.to_jsonable(), json_path)
    n_valid = len(sweep.valid_cells())
    n_cells = len(sweep.rho_cr_values) * len(sweep.rho_wwr_values)
    print(
        f"cells: {n_valid} valid of {n_cells}; members: "
        f"{', '.join(str(m) for m in config.reference_members)}; "
        f"paths: {config.n_paths} in {config.n_batches} batches; seed: {config.seed}"
    )
    for (member, axis, metric), v in sorted(report.entries.items()):
        status = "pass" if v.passed else "FAIL"
        print(
            f"  {status} member {member} {metric} along {axis}: "
            f"worst increment {v.worst_increment:.6g} "
            f"(stderr {v.worst_stderr:.3g}, {v.n_pairs} pairs)"
        )
    print(f"wrote {csv_path} and {json_path}")
    print(f"monotonicity at k_sigma={args.k_sigma:g}: {'PASS' if report.passed else 'FAIL'}")
    return 0 if report.passed else 1


def _cmd_cdo_sweep(args) -> int:
    config = CdoConfig.from_file(args.config)
    ov: dict = {}
    if args.seed is not None:
        ov["seed"] = args.seed
    if args.paths is not None:
        ov["n_paths"] = args.paths
    if ov:
        config = config.override(**ov)
    result = run_cdo_sweep(config)
    os.makedirs(args.out, exist_ok=True)
    csv_path = os.path.join(args.out, CDO_CSV)
    json_path = os.path.join(args.out, CDO_MONO_JSON)
    write_cdo_csv(result, config, csv_path)
    doc = cdo_monotonicity_jsonable(result, config, args.k_sigma)
    write_json(doc, json_path)
    print(
        f"tranches: {len(result.tranches)}; rho grid: {len(result.rho_values)} points; "
        f"paths: {config.n_paths}; seed: {config.seed}"
    )
    for v in doc["verdicts"]:
        status = "pass" if v["passed"] else "FAIL"
        arrow = "nondecreasing" if v["direction"] > 0 else "nonincreasing"
        print(
            f"  {status} {v['kind']} {v['leg']} leg {arrow} in {v['axis']}: "
            f"worst oriented increment {v['worst_oriented_increment']:.6g} "
            f"(stderr {v['worst_stderr']:.3g}, {v['n_increments']} increments)"
        )
    print(f"wrote {csv_path} and {json_path}")
    print(f"sign pattern at k_sigma={args.k_sigma:g}: {'PASS' if doc['passed'] else 'FAIL'}")
    return 0 if doc["passed"] else 1


def _cmd_risk_report(args) -> int:
    config = RunConfig.from_file(args.config).override(**_ccp_overrides(args))
    _warn_clearing(config)
    if (args.rho_cr is None) != (args.rho_wwr is None):
        raise ConfigError("--rho-cr and --rho-wwr must be given together")
    if args.rho_cr is not None:
        cell = (args.rho_cr, args.rho_wwr)
        verdict = validate_model(config.model_for(*cell))
        if not verdict:
            raise ConfigError(f"cell {cell} is invalid: {verdict.reason}")
    else:
        cells = [
            (rc, rw)
            for rc in config.rho_cr_values
            for rw in config.rho_wwr_values
            if validate_model(config.model_for(rc, rw))
        ]
        if not cells:
            raise ConfigError("no valid cell in the config grid")
        cell = cells[0]
    single = config.override(rho_cr_values=(cell[0],), rho_wwr_values=(cell[1],))
    sweep = run_sweep(single)
    print(
        f"cell rho_cr={cell[0]:g} rho_wwr={cell[1]:g}; paths: {single.n_paths} "
        f"in {single.n_batches} batches; seed: {single.seed}; "
        f"es alpha: {single.ec_alpha:g}"
    )
    for member in single.reference_members:
        rep = sweep.reports[(member,) + cell]
        print(
            f"  member {member}: cecl {rep.cecl:.6g} (se {rep.cecl_stderr:.3g}), "
            f"ec {rep.ec:.6g} (se {rep.ec_stderr:.3g}), var {rep.var_alpha:.6g}"
        )
    return 0


def _cmd_check_properties(_args) -> int:
    failures = 0

    def suite(label: str, passed: bool, detail: str) -> None:
        nonlocal failures
        if not passed:
            failures += 1
        print(f"  {'pass' if passed else 'FAIL'} {label}: {detail}")

    print("allocation coefficients: increasing differences on indicator vertices")
    beta_bank = (1.0, 2.0, 0.5, 1.5, 0.25, 3.0)
    for n in range(2, 7):
        betas = beta_bank[:n]
        thresholds = (0.0,) * n
        grid = GridSpec(axes=((-1.0, 1.0),) * n)
        worst = None
        ok = True
        for i in range(n):
            rep = check_ccp_allocation_supermodular(betas, thresholds, i, grid, tol=0.0)
            ok = ok and rep.passed
            if worst is None or rep.worst.min_diff < worst:
                worst = rep.worst.min_diff
        suite(
            f"all {n} coefficients on the {2 ** n}-vertex grid (tol 0)",
            ok,
            f"min mixed difference {worst:.6g}",
        )

    print("member loss: increasing differences on a mixed credit/exposure grid")
    betas = (1.0, 2.0, 0.5)
    thresholds = (0.1, -0.2, 0.3)
    collateral = (0.5, 1.0, 0.2)
    x_axis = (-1.5, -0.05, 0.35, 1.4)
    y_axes = tuple((c - 0.7, c - 0.1, c + 0.4, c + 1.3) for c in collateral)
    grid = GridSpec(axes=tuple((x_axis,) * 3) + y_axes)
    rep = check_ccp_loss_supermodular(betas, thresholds, collateral, grid)
    suite(
        "3 members, 4 points per axis, float tolerance",
        rep.passed,
        f"min mixed difference {rep.worst.min_diff:.6g} (tol {rep.tol:.3g})",
    )

    print("negative control: -x*y must fail")
    control = check_increasing_differences(
        lambda p: -p[:, 0] * p[:, 1],
        GridSpec(axes=((-1.0, 0.0, 1.0), (-1.0, 0.0, 1.0))),
        tol=0.0,
        vectorized=True,
    )
    suite(
        "submodular product rejected",
        not control.passed,
        f"min mixed difference {control.worst.min_diff:.6g}",
    )

    print(f"properties: {'PASS' if failures == 0 else 'FAIL'}")
    return 0 if failures == 0 else 1


def cli_main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {
        "ccp-sweep": _cmd_ccp_sweep,
        "cdo-sweep": _cmd_cdo_sweep,
        "risk-report": _cmd_risk_report,
        "check-properties": _cmd_check_properties,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def run() -> None:
    sys.exit(cli_main())
