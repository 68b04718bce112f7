"""Sweep the green duration and report vehicles crossing on green per run.

Usage: python3 scripts/calibrate_green.py [--seeds 3] [--target 175]
"""

import argparse
import statistics

from vanetsim import SimConfig, run


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=3)
    ap.add_argument("--target", type=float, default=175.0)
    ap.add_argument("--greens", default="10,15,20,25,30")
    args = ap.parse_args()
    lo, hi = 0.8 * args.target, 1.2 * args.target
    print("green_s  median_crossings  per_seed  within_20pct")
    for g in (float(x) for x in args.greens.split(",")):
        counts = [run(SimConfig(green_time=g, seed=s)).metrics.green_crossings
                  for s in range(1, args.seeds + 1)]
        med = statistics.median(counts)
        print(f"{g:7.1f}  {med:16.1f}  {counts}  {lo <= med <= hi}", flush=True)


if __name__ == "__main__":
    main()
