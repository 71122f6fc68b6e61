#!/usr/bin/env python3
"""Variability sweep: N completions per prompt per temperature, cosine
matrices, CSV + heatmap exports, and a console table of means and SDs.

Mock backend by default (hermetic). With --live and an API key in the
environment the same sweep runs against the real services, which is the
only way to compare against published reference numbers.

    python scripts/run_variability.py
    python scripts/run_variability.py --prompt "Define the meaning of life in 300 words."
    ALO_API_KEY=... python scripts/run_variability.py --live --n 20
"""

import argparse
from pathlib import Path

from alos.gateway import LiveBackend, MockBackend
from alos.variability import AnalysisConfig, run_analysis


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--prompt", default="Define banana in 300 words.")
    ap.add_argument("--n", type=int, default=20)
    ap.add_argument("--temps", default="0.0,0.7,2.0")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--live", action="store_true")
    ap.add_argument("--out", type=Path, default=Path("variability-run"))
    args = ap.parse_args()

    backend = LiveBackend() if args.live else MockBackend()
    config = AnalysisConfig(
        user_prompt=args.prompt,
        n=args.n,
        temperatures=tuple(float(t) for t in args.temps.split(",")),
        backend="live" if args.live else "mock",
        seed=args.seed,
    )
    report = run_analysis(backend, config, args.out)

    print(f"\nprompt: {config.user_prompt!r}  (n={config.n}, "
          f"backend={config.backend})")
    print(f"{'temperature':>12}  {'mean':>10}  {'sd':>10}  {'pairs':>6}")
    for row in report["results"]:
        print(f"{row['temperature']:>12.1f}  {row['mean']:>10.6f}  "
              f"{row['sd']:>10.6f}  {row['count']:>6}")
    print(f"\nmatrices and heatmaps under {args.out}/")


if __name__ == "__main__":
    main()
