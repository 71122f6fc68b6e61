#!/usr/bin/env python3
"""End-to-end hermetic demo: create the cat and roomba, make them meet,
simulate the encounter, and export the bundle the browser harness loads.

Everything runs on the mock backend, so no network or key is needed.

    python scripts/demo_cat_roomba.py [--ticks 300] [--workdir demo-run]
"""

import argparse
import json
import sys
from pathlib import Path

from click.testing import CliRunner

from alos.cli import main as cli


def run(runner, base, *args):
    result = runner.invoke(cli, base + list(args))
    if result.exit_code != 0:
        print(result.output, file=sys.stderr)
        sys.exit(result.exit_code)
    return result


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--ticks", type=int, default=300)
    ap.add_argument("--seed", type=int, default=11)
    ap.add_argument("--workdir", type=Path, default=Path("demo-run"))
    args = ap.parse_args()

    reg = args.workdir / "registry"
    out = args.workdir / "out"
    base = ["--registry", str(reg), "--out", str(out), "--seed", str(args.seed)]
    runner = CliRunner()

    run(runner, base, "create", "cat", "--force")
    run(runner, base, "create", "roomba", "--force")
    run(runner, base, "interact", "cat", "roomba",
        "--context", "bounded 3D physical world", "--force")
    scenario = out / "scenarios" / "cat-meets-roomba.scenario.json"
    run(runner, base, "simulate", str(scenario), "--ticks", str(args.ticks))
    run(runner, base, "export", str(scenario))

    snapshots = [json.loads(ln) for ln in
                 (out / "snapshots.jsonl").read_text().splitlines()]
    last_tick = snapshots[-1]["tick"]
    print(f"simulated {last_tick} ticks; final positions:")
    for snap in snapshots[-2:]:
        x, y, z = snap["position"]
        print(f"  {snap['entity']:>10}  ({x:7.2f}, {y:5.2f}, {z:7.2f})"
              f"  skill={snap['activeSkill']}")
    fled = sum(1 for s in snapshots if s["activeSkill"] == "flee")
    print(f"the roomba spent {fled} ticks fleeing the cat")
    print(f"bundle for the harness: {out / 'scene.bundle.json'}")


if __name__ == "__main__":
    main()
