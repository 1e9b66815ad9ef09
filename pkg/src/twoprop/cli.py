"""Command-line interface: ``twoprop {analyze,sweep,simulate,validate}``.

Exit codes: 0 success, 1 invalid config or arguments, 2 numerical failure.
"""

import argparse
import json
import logging
from pathlib import Path
import sys

from .runner import (
    ConfigError,
    PRESETS,
    run_experiment,
    sweep_gamma,
    sweep_to_csv,
    validate_config,
    write_report,
)
from .serialize import spec_to_dict
from .slot_sim import TWO_PROP, XI_BASELINE, monte_carlo_utility, trace_record, write_trace
from .validation import DomainError

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 1, 2


def _parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON config file")
    common.add_argument("--preset", choices=sorted(PRESETS))
    common.add_argument("--out", type=Path, help="output directory")
    common.add_argument("--seed", type=int)
    common.add_argument("--trials", type=int)
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="twoprop", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    a = sub.add_parser("analyze", parents=[common], help="solve one game")
    a.add_argument("--mode", choices=("analytic", "monte-carlo", "both"))
    s = sub.add_parser("sweep", parents=[common], help="equilibria across gamma")
    s.add_argument("--gammas", type=float, nargs="+",
                   help="gamma values applied to the config's dist_0 (default: preset rows)")
    m = sub.add_parser("simulate", parents=[common], help="Monte-Carlo at a strategy pair")
    m.add_argument("--delta0", type=float)
    m.add_argument("--delta1", type=float)
    m.add_argument("--baseline", action="store_true",
                   help="single-proposer mode (only proposer 0 publishes)")
    m.add_argument("--trace", type=Path, help="write one JSON line per slot")
    sub.add_parser("validate", parents=[common], help="check a config and print it")
    return p


def _load(args):
    raw = args.config.read_text() if args.config else None
    overrides = {"seed": args.seed, "trials": args.trials,
                 "output_dir": str(args.out) if args.out else None}
    if getattr(args, "mode", None):
        overrides["mode"] = args.mode
    if getattr(args, "delta0", None) is not None or getattr(args, "delta1", None) is not None:
        overrides["strategy_pair"] = [args.delta0 or 0.0, args.delta1 or 0.0]
    return validate_config(raw, preset=args.preset, overrides=overrides)


def _emit(text, out_dir, name):
    if out_dir is None:
        sys.stdout.write(text)
        return
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / name).write_text(text)


def _cmd_analyze(args, cfg):
    report = run_experiment(cfg)
    if args.out:
        for path in write_report(report, args.out, args.format):
            print(path)
    else:
        sys.stdout.write(report.to_json() + "\n" if args.format == "json"
                         else _summary(report))
    return EXIT_OK


def _summary(report):
    lines = []
    for e in report.equilibria or []:
        lines.append(f"psne delta=({e.delta_0:g}, {e.delta_1:g}) u=({e.u0:.6g}, {e.u1:.6g})")
    for i, (d, u) in enumerate(report.xi_optimum or []):
        lines.append(f"xi player {i}: delta*={d:g} u={u:.6g}")
    if report.simulation:
        s = report.simulation
        lines.append(f"simulated mean=({s['mean_0']:.6g}, {s['mean_1']:.6g}) "
                     f"se=({s['stderr_0']:.3g}, {s['stderr_1']:.3g})")
    if report.cross_check:
        lines.append(f"cross-check within 3 se: {report.cross_check['within_3se']}")
    lines.extend(f"note: {n}" for n in report.notes)
    return "\n".join(lines) + "\n"


def _cmd_sweep(args, cfg):
    results = sweep_gamma(cfg, args.gammas)
    if args.format == "json":
        text = json.dumps([r.__dict__ for r in results], indent=2, sort_keys=True) + "\n"
        _emit(text, args.out, "sweep.json")
    else:
        _emit(sweep_to_csv(results), args.out, "sweep.csv")
    failed = [r for r in results if r.error]
    for r in failed:
        print(f"{r.row} gamma={r.gamma:g}: {r.error}", file=sys.stderr)
    return EXIT_NUMERIC if failed else EXIT_OK


def _cmd_simulate(args, cfg):
    mode = XI_BASELINE if args.baseline else TWO_PROP
    pair = cfg.strategy_pair or (0.0, 0.0)
    on_slot = None
    if args.trace:
        args.trace.parent.mkdir(parents=True, exist_ok=True)
        trace_fp = args.trace.open("w")

        def on_slot(inputs, out):
            write_trace(trace_fp, [trace_record(inputs, out)])
    try:
        est = monte_carlo_utility(cfg.scenario, pair[0], pair[1], cfg.trials, cfg.seed,
                                  mode, on_slot)
    finally:
        if on_slot is not None:
            trace_fp.close()
    res = {"mode": mode, "delta_0": pair[0], "delta_1": pair[1], "trials": cfg.trials,
           "seed": cfg.seed, "mean_0": est.mean_0, "mean_1": est.mean_1,
           "stderr_0": est.stderr_0, "stderr_1": est.stderr_1}
    if args.format == "json":
        _emit(json.dumps(res, indent=2, sort_keys=True) + "\n", args.out, "simulation.json")
    else:
        keys = ["mode", "delta_0", "delta_1", "trials", "seed",
                "mean_0", "stderr_0", "mean_1", "stderr_1"]
        vals = [v if isinstance(v, str) else f"{v:.6g}" for v in (res[k] for k in keys)]
        _emit(",".join(keys) + "\n" + ",".join(vals) + "\n", args.out, "simulation.csv")
    return EXIT_OK


def _cmd_validate(args, cfg):
    doc = {
        "preset": cfg.preset,
        "scenario": spec_to_dict(cfg.scenario),
        "grid": {"zeta": cfg.zeta, "tau1": cfg.scenario.params.tau1},
        "mode": cfg.mode, "trials": cfg.trials, "seed": cfg.seed,
        "output_dir": cfg.output_dir, "eps": cfg.eps,
        "strategy_pair": cfg.strategy_pair,
        "rows": [{"label": r.label, "shape": r.dist_0.shape, "rate": r.dist_0.rate,
                  "gammas": list(r.gammas)} for r in cfg.rows],
        "warnings": list(cfg.warnings),
    }
    print(json.dumps(doc, indent=2, sort_keys=True))
    return EXIT_OK


_COMMANDS = {"analyze": _cmd_analyze, "sweep": _cmd_sweep,
             "simulate": _cmd_simulate, "validate": _cmd_validate}


def main(argv=None):
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _load(args)
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (ConfigError, DomainError) as exc:
        errors = getattr(exc, "errors", [str(exc)])
        for e in errors:
            print(f"invalid config: {e}", file=sys.stderr)
        return EXIT_INVALID
    try:
        return _COMMANDS[args.command](args, cfg)
    except ConfigError as exc:
        for e in exc.errors:
            print(f"invalid config: {e}", file=sys.stderr)
        return EXIT_INVALID
    except DomainError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (ArithmeticError, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
