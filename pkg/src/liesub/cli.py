"""Command line entry point: ``liesub run | list-presets | report-schema``."""
from __future__ import annotations

import argparse
import json
import logging
import sys

from .runner import (
    REPORT_SCHEMA,
    SELECTIONS,
    ConfigError,
    ScenarioConfig,
    config_from_dict,
    list_presets,
    load_config,
    run,
)

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="liesub", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a scenario and write a JSON report")
    r.add_argument("--config", help="scenario config (JSON)")
    r.add_argument("--preset", help="preset name, when no config is given")
    r.add_argument("--out", help="output directory for report.json and CSV series")
    r.add_argument("--seed", type=int)
    r.add_argument("--check", action="append", choices=SELECTIONS + ("all",),
                   help="check group to run; repeatable (default: all)")
    r.add_argument("--t-max", type=float, dest="t_max", help="horizon of the boundedness audits")
    r.add_argument("--quiet", action="store_true")

    lp = sub.add_parser("list-presets", help="print the preset catalog")
    lp.add_argument("--json", action="store_true", help="emit config-loadable JSON")

    sub.add_parser("report-schema", help="print the JSON schema of reports")
    return parser


def _config(args: argparse.Namespace) -> ScenarioConfig:
    if args.config:
        cfg = load_config(args.config)
        if args.preset:
            raise ConfigError("--preset conflicts with --config")
    else:
        cfg = config_from_dict({"schema_version": 1, "preset": args.preset or "hopf"})
    if args.check:
        cfg = config_from_dict({**cfg.to_dict(), "checks": args.check})
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("seed must be non-negative")
        cfg.params["seed"] = args.seed
    if args.t_max is not None:
        if args.t_max <= 0:
            raise ConfigError("--t-max must be positive")
        cfg.params["t_max"] = args.t_max
    if args.out:
        cfg.out_dir = args.out
    return cfg


def _print_summary(report) -> None:
    width = max(len(r["check"]) for r in report.records) if report.records else 10
    for r in report.records:
        mark = "PASS" if r["passed"] else "FAIL"
        print(f"{mark}  {r['check']:<{width}}  [{r['status']}]  {r['anchor']}")
    print(f"overall: {'pass' if report.passed else 'fail'} ({report.spec_name})")


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)

    if args.command == "list-presets":
        presets = list_presets()
        if args.json:
            print(json.dumps(presets, indent=2))
        else:
            for p in presets:
                props = ", ".join(p["properties"])
                print(f"{p['name']:<34} {json.dumps(p['group'])}  vertical={p['vertical_dim']}"
                      f"  horizontal={p['horizontal_dim']}  {props}")
        return EXIT_OK

    if args.command == "report-schema":
        print(json.dumps(REPORT_SCHEMA, indent=2))
        return EXIT_OK

    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    report = run(cfg)
    if not args.quiet:
        _print_summary(report)
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
