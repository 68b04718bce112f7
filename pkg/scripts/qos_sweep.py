"""Reproduce the QoS sweeps (vehicle count, packet size, data rate) as median tables.

Usage: python3 scripts/qos_sweep.py [--seeds 5] [--duration 300]
"""

import argparse
import statistics

from vanetsim import SimConfig, run
from vanetsim.cli import SWEEP_AXES as AXES


def med(xs):
    xs = [x for x in xs if x is not None]
    return statistics.median(xs) if xs else float("nan")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--duration", type=float, default=300.0)
    ap.add_argument("--axis", choices=sorted(AXES), action="append")
    args = ap.parse_args()
    for axis in args.axis or AXES:
        print(f"\n{axis:>20}  pdr_%    delay_ms  throughput_kbps  loss_bytes")
        for value in AXES[axis]:
            ms = [run(SimConfig(duration=args.duration, seed=s, **{axis: value})).metrics
                  for s in range(1, args.seeds + 1)]
            print(f"{value:>20}  {med([m.pdr_percent for m in ms]):7.3f}  "
                  f"{med([m.mean_e2e_delay_ms for m in ms]):8.4f}  "
                  f"{med([m.throughput_bps for m in ms]) / 1e3:15.1f}  "
                  f"{med([m.packet_loss_bytes for m in ms]):10.0f}", flush=True)


if __name__ == "__main__":
    main()
