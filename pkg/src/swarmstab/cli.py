"""Command-line front end.

Subcommands: simulate, tune, compare, validate. Exit codes: 0 success,
1 configuration problem (bad file, bad flag, failed validation), 2 runtime
failure. The default output directory comes from --out, then the config
file, then $SWARMSTAB_OUT, then ./out.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import harness
from .lti import AlgebraicLoop, IntegrationDiverged, InterconnectError
from .plant import ConfigError


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="swarmstab",
                     description="Closed-loop voltage/damping study: simulate a "
                                 "compensated single-machine system and tune its "
                                 "controllers with swarm optimizers.")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="simulate the baseline closed loop")
    sim.add_argument("--config", required=True, help="run config JSON")
    sim.add_argument("--out", help="output directory")

    tune = sub.add_parser("tune", help="tune controller gains against the scenario")
    tune.add_argument("--config", required=True, help="run config JSON")
    tune.add_argument("--algo", choices=("pso", "bfo"),
                      help="override the optimizer named in the config")
    tune.add_argument("--seed", type=int, help="override the optimizer seed")
    tune.add_argument("--workers", type=int, default=1,
                      help="parallel objective evaluations (results are identical)")
    tune.add_argument("--out", help="output directory")

    cmp_p = sub.add_parser("compare",
                           help="baseline vs pso-pid vs bfo-pid across scenarios")
    cmp_p.add_argument("--config", required=True,
                       help='JSON with {"runs": [run config refs]}')
    cmp_p.add_argument("--workers", type=int, default=1)
    cmp_p.add_argument("--out", help="output directory")

    val = sub.add_parser("validate", help="check a config file and report diagnostics")
    val.add_argument("--config", required=True)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    try:
        if args.command == "validate":
            diags = harness.validate_file(Path(args.config))
            for d in diags:
                print(f"problem: {d}")
            if not diags:
                print("ok")
            return 0 if not diags else 1

        if args.command == "simulate":
            cfg = harness.load_run_config(Path(args.config))
            _, metrics = harness.run_simulation(cfg, out_dir=args.out)
            print(f"itae={metrics['itae']:.6f} max_re_eig={metrics['max_re_eig']:+.4f}")
            return 0

        if args.command == "tune":
            cfg = harness.load_run_config(Path(args.config))
            if args.algo:
                import dataclasses
                cfg = dataclasses.replace(cfg, optimizer=args.algo)
            if cfg.optimizer == "none":
                raise ConfigError("optimizer", "pick --algo pso or bfo")
            result, report = harness.run_tuning(cfg, seed=args.seed,
                                                workers=args.workers,
                                                out_dir=args.out)
            print(harness.format_report_table(report))
            print(f"evaluations: {result.evaluations}")
            return 0

        if args.command == "compare":
            path = Path(args.config)
            data = harness._load_json(path)
            if "runs" not in data:
                raise ConfigError("runs", f"{path} has no 'runs' list")
            cfgs = [harness.load_run_config(path.parent / ref)
                    for ref in data["runs"]]
            reports = harness.compare(cfgs, workers=args.workers, out_dir=args.out)
            for report in reports:
                print(harness.format_report_table(report))
            return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (IntegrationDiverged, AlgebraicLoop, InterconnectError, OSError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
