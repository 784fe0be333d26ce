"""Command line front end: run, validate, and report on experiment configs.

Exit codes: 0 = all criteria passed, 1 = a criterion failed or the run
errored, 2 = the config did not validate.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .experiments import ConfigError, load_config, resolve_run_dir, run, validate

CRITERION_LINE = "{status}  {name}: value={value!r} {op} threshold={threshold!r}"


def _print_report(report_dict: dict) -> int:
    for crit in report_dict["criteria"]:
        status = "PASS" if crit["passed"] else "FAIL"
        print(CRITERION_LINE.format(status=status, name=crit["name"], value=crit["value"],
                                    op=crit["op"], threshold=crit["threshold"]))
    if report_dict.get("failure"):
        print(f"ERROR {report_dict['experiment']}: {report_dict['failure']}")
    verdict = "passed" if report_dict["passed"] else "FAILED"
    print(f"{report_dict['experiment']}: {verdict}")
    return 0 if report_dict["passed"] else 1


def _cmd_run(args) -> int:
    try:
        config = load_config(args.config_path)
        report = run(config)
    except ConfigError as exc:
        for finding in exc.findings:
            print(f"invalid config: {finding}", file=sys.stderr)
        return 2
    print(f"run directory: {resolve_run_dir(config)}")
    return _print_report(report.to_dict())


def _cmd_validate(args) -> int:
    try:
        config = load_config(args.config_path)
    except ConfigError as exc:
        for finding in exc.findings:
            print(f"invalid config: {finding}", file=sys.stderr)
        return 2
    findings = validate(config)
    for finding in findings:
        print(f"invalid config: {finding}", file=sys.stderr)
    if findings:
        return 2
    print(f"{args.config_path}: ok")
    return 0


def _cmd_report(args) -> int:
    path = os.path.join(args.run_dir, "report.json")
    if not os.path.exists(path):
        print(f"no report.json under {args.run_dir}", file=sys.stderr)
        return 2
    with open(path, "r", encoding="utf-8") as fh:
        return _print_report(json.load(fh))


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="qspacelab",
                                     description="config-driven pilot-wave experiment runner")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="validate, execute, and report one experiment")
    p_run.add_argument("config_path")
    p_run.set_defaults(func=_cmd_run)

    p_val = sub.add_parser("validate", help="check a config without running it")
    p_val.add_argument("config_path")
    p_val.set_defaults(func=_cmd_validate)

    p_rep = sub.add_parser("report", help="re-print the pass/fail lines of a finished run")
    p_rep.add_argument("run_dir")
    p_rep.set_defaults(func=_cmd_report)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
