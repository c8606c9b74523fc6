#!/usr/bin/env python3
"""Sweep the mean privacy preference and report how noise and accuracy respond.

Stronger average privacy preferences should push the chosen noise levels up
and the global accuracy down; this script averages both over paired seeds.
"""

import argparse
import dataclasses
import sys

import numpy as np

from fedlora.orchestrator import SimConfig, run_simulation


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--values", default="0.3,0.4,0.5,0.6,0.7")
    parser.add_argument("--seeds", type=int, default=10)
    parser.add_argument("--out", default=None, help="optional CSV path for the sweep table")
    args = parser.parse_args()

    values = [float(v) for v in args.values.split(",")]
    lines = ["gamma_mu,global_accuracy_mean,local_accuracy_mean,utility_mean,noise_level_mean"]
    print(f"{'gamma_mu':>8} {'global_acc':>10} {'local_acc':>10} {'utility':>10} {'noise':>8}")
    for mu in values:
        runs = [
            run_simulation(dataclasses.replace(SimConfig(seed=seed), gamma_mu=mu))
            for seed in range(args.seeds)
        ]
        cols = (
            np.mean([r.global_accuracy_mean for r in runs]),
            np.mean([r.local_accuracy_mean for r in runs]),
            np.mean([r.utility_mean for r in runs]),
            np.mean([r.noise_level_mean for r in runs]),
        )
        print(f"{mu:>8.2f} {cols[0]:>10.4f} {cols[1]:>10.4f} {cols[2]:>10.4f} {cols[3]:>8.4f}")
        lines.append(f"{mu}," + ",".join(f"{c:.6f}" for c in cols))

    if args.out:
        with open(args.out, "w", encoding="ascii") as fh:
            fh.write("\n".join(lines) + "\n")
        print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
