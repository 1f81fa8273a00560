"""Where each neuron stops telling constant inputs apart.

    python3 scripts/saturation_analysis.py [--T 8]

Prints the constant input above which each model fires at every step, and how
KvLIF's rates over intensities {2, 3, 4, 5} v_th depend on gamma and beta.
"""

import argparse

from kvlif.analysis import intensity_sweep, saturation_intensity
from kvlif.neurons import NEURON_KINDS, paper_params


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--T", type=int, default=8)
    args = ap.parse_args()

    p = paper_params()
    for k in NEURON_KINDS:
        print(f"{k:6} saturates at I >= {saturation_intensity(p, k):.4f}")

    levels = [2.0, 3.0, 4.0, 5.0]
    print(f"\nKvLIF rates over I = {levels}, T = {args.T}")
    print(" gamma  beta   bound   rates")
    for gamma in (0.05, 0.3, 0.5, 0.7, 0.8, 0.9):
        for beta in (0.1, 0.3):
            q = p.with_(gamma=gamma, beta=beta)
            rates = intensity_sweep(["kvlif"], levels, args.T, q).rates["kvlif"]
            print(f"{gamma:6.2f} {beta:5.2f} {saturation_intensity(q, 'kvlif'):7.3f}   " + " ".join(f"{r:.3f}" for r in rates))


if __name__ == "__main__":
    main()
