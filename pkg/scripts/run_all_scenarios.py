"""Run every registered scenario through the command line entry point.

Usage: python3 scripts/run_all_scenarios.py OUT_DIR [--seed S]

Artifacts land in OUT_DIR/<scenario>/.  The script exits nonzero when any
scenario does, so it doubles as a CI gate.
"""

import argparse
import sys
import time
from pathlib import Path

from eigflow.cli import main
from eigflow.scenarios import SCENARIOS


def run(out: Path, seed: int) -> int:
    worst = 0
    for name in SCENARIOS:
        start = time.perf_counter()
        code = main(["run", name, "--out", str(out / name), "--seed", str(seed)])
        print(f"{name:20s} exit={code} {time.perf_counter() - start:6.1f}s", flush=True)
        worst = max(worst, code)
    return worst


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("out", type=Path)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    sys.exit(run(args.out, args.seed))
