#!/usr/bin/env python3
"""Regenerate the browser harness's parity fixtures from the Python engine.

Writes frontend/test/fixtures/{scene.bundle.json, snapshots.jsonl} from the
reference cat-meets-roomba scenario (seed 11, 300 ticks). The harness test
suite replays the bundle and must match the snapshots to 1e-6.
"""

import argparse
import shutil
import sys
import tempfile
from pathlib import Path

from click.testing import CliRunner

from alos.cli import main as cli

FIXTURES = Path(__file__).resolve().parent.parent / "frontend" / "test" / "fixtures"


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--ticks", type=int, default=300)
    ap.add_argument("--seed", type=int, default=11)
    ap.add_argument("--dest", type=Path, default=FIXTURES)
    args = ap.parse_args()

    workdir = Path(tempfile.mkdtemp(prefix="harness-fixtures-"))
    base = ["--registry", str(workdir / "reg"), "--out", str(workdir / "out"),
            "--seed", str(args.seed)]
    runner = CliRunner()
    for command in (["create", "cat"], ["create", "roomba"],
                    ["interact", "cat", "roomba"]):
        result = runner.invoke(cli, base + command)
        if result.exit_code != 0:
            print(result.output, file=sys.stderr)
            sys.exit(result.exit_code)
    scenario = workdir / "out" / "scenarios" / "cat-meets-roomba.scenario.json"
    for command in (["simulate", str(scenario), "--ticks", str(args.ticks)],
                    ["export", str(scenario)]):
        result = runner.invoke(cli, base + command)
        if result.exit_code != 0:
            print(result.output, file=sys.stderr)
            sys.exit(result.exit_code)

    args.dest.mkdir(parents=True, exist_ok=True)
    shutil.copy(workdir / "out" / "scene.bundle.json", args.dest / "scene.bundle.json")
    shutil.copy(workdir / "out" / "snapshots.jsonl", args.dest / "snapshots.jsonl")
    shutil.rmtree(workdir)
    print(f"fixtures written to {args.dest}")


if __name__ == "__main__":
    main()
