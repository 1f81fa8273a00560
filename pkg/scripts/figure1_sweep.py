"""Firing rate against constant input intensity, and the event-then-noise scenario.

    python3 scripts/figure1_sweep.py [--T 8] [--beta 0.3] [--csv sweep.csv]
"""

import argparse
import csv

import numpy as np

from kvlif.analysis import false_positive_scenario, intensity_sweep, saturation_intensity
from kvlif.neurons import NEURON_KINDS, paper_params


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--T", type=int, default=8)
    ap.add_argument("--beta", type=float, default=0.3)
    ap.add_argument("--max", type=float, default=5.0, help="largest intensity, in units of v_th")
    ap.add_argument("--csv", help="also write the sweep to this file")
    args = ap.parse_args()

    p = paper_params(args.beta)
    grid = np.round(np.arange(0.0, args.max + 1e-9, 0.1), 10) * p.v_th
    res = intensity_sweep(NEURON_KINDS, grid, args.T, p)

    print(f"T={args.T}  lambda={p.lam}  alpha={p.alpha}  beta={p.beta}  gamma={p.gamma}")
    print("intensity  " + "  ".join(f"{k:>6}" for k in NEURON_KINDS))
    for j, level in enumerate(grid):
        print(f"{level:9.2f}  " + "  ".join(f"{res.rates[k][j]:6.3f}" for k in NEURON_KINDS))
    for k in NEURON_KINDS:
        print(f"{k}: fires every step for I >= {saturation_intensity(p, k):.4f}")

    print("\nevent 1.8 v_th, then noise 0.7 v_th:")
    for k in NEURON_KINDS:
        spikes, n_fp = false_positive_scenario(k, 1.8 * p.v_th, 0.7 * p.v_th, p, T=args.T)
        print(f"  {k:6} spikes {spikes.astype(int).tolist()}  false positives {n_fp}")

    if args.csv:
        with open(args.csv, "w", newline="") as f:
            w = csv.DictWriter(f, ["model", "intensity", "spikes", "rate"], lineterminator="\n")
            w.writeheader()
            w.writerows(res.rows())


if __name__ == "__main__":
    main()
