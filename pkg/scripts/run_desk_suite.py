#!/usr/bin/env python3
"""Run the desk-scale verification battery and print a verdict table.

Thin wrapper around `levyid suite`; writes the full JSON report next to the
chosen output path and summarizes one line per job on stdout.
"""

import argparse
import json
import pathlib
import sys

from levyid.cli import main as cli_main

HERE = pathlib.Path(__file__).resolve().parent


def run(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default=str(HERE.parent / "configs" / "suite_desk.json"))
    ap.add_argument("--out", default="desk_suite_report.json")
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--workers", type=int, default=0)
    args = ap.parse_args(argv)

    cli_args = ["suite", "--config", args.config, "--out", args.out,
                "--workers", str(args.workers)]
    if args.seed is not None:
        cli_args += ["--seed", str(args.seed)]
    code = cli_main(cli_args)

    report = json.loads(pathlib.Path(args.out).read_text())
    print(f"suite verdict: {report['verdict']}  (report: {args.out})")
    for job in report["results"]["jobs"]:
        print(f"  {job['verdict']:4s}  {job['name']:28s} [{job['command']}]")
    return code


if __name__ == "__main__":
    sys.exit(run())
