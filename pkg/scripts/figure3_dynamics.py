"""Membrane and potassium traces of the three neurons under one Poisson input train.

    python3 scripts/figure3_dynamics.py [--seed 7] [--rate 0.5] [--weight 1.2] [--T 40]
"""

import argparse

import numpy as np

from kvlif.analysis import firing_rate
from kvlif.encoding import encode_poisson
from kvlif.neurons import NEURON_KINDS, paper_params, run_sequence


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--rate", type=float, default=0.5, help="input spike probability per step")
    ap.add_argument("--weight", type=float, default=1.2, help="synaptic weight of the input train")
    ap.add_argument("--T", type=int, default=40)
    ap.add_argument("--beta", type=float, default=0.3)
    ap.add_argument("--verbose", action="store_true", help="print every step")
    args = ap.parse_args()

    p = paper_params(args.beta)
    drive = encode_poisson(np.array([args.rate]), args.T, args.seed).values[0] * args.weight
    traces = {k: run_sequence(k, drive, p) for k in NEURON_KINDS}

    if args.verbose:
        print("  t  input  " + "  ".join(f"{k + ' u':>9} s" for k in NEURON_KINDS) + "   kvlif k")
        for t in range(args.T):
            cols = "  ".join(f"{traces[k].u_post[t]:9.3f} {int(traces[k].spike[t])}" for k in NEURON_KINDS)
            print(f"{t:3d}  {drive[t]:5.2f}  {cols}  {traces['kvlif'].k[t]:8.3f}")
    print("model   spikes  rate    min u_post")
    for k, tr in traces.items():
        print(f"{k:6}  {int(tr.spike.sum()):6d}  {firing_rate(tr.spike):.4f}  {tr.u_post.min():9.3f}")


if __name__ == "__main__":
    main()
