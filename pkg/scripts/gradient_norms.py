"""Layer-wise gradient L2 norms of 3-block networks on one shared batch.

    python3 scripts/gradient_norms.py [--seed 0] [--epochs 5]

With ``--epochs`` > 0 the networks are first trained on the two-rate toy task
and the norms are taken on a fresh batch afterwards.
"""

import argparse


from kvlif.datasets import two_rate_dataset
from kvlif.neurons import NEURON_KINDS, paper_params
from kvlif.training import TrainOptions, backward, build_network, forward, grad_l2_norms, loss_ce_mean, train


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--epochs", type=int, default=0)
    ap.add_argument("--hidden", type=int, default=32)
    ap.add_argument("--T", type=int, default=8)
    args = ap.parse_args()

    X, y = two_rate_dataset(256, 16, args.T, seed=args.seed)
    xb, yb = two_rate_dataset(64, 16, args.T, seed=args.seed + 1000)
    print("model   " + "  ".join(f"layer{l}" for l in range(4)) + "     mean      std")
    for kind in NEURON_KINDS:
        net = build_network(16, [args.hidden] * 3, 2, kind, paper_params(), args.T, seed=args.seed, encoding="temporal")
        if args.epochs:
            train(net, X, y, TrainOptions(epochs=args.epochs, seed=args.seed))
        logits, tape = forward(net, xb, record=True)
        _, dl = loss_ce_mean(logits, yb)
        r = grad_l2_norms(backward(tape, dl))
        print(f"{kind:6}  " + "  ".join(f"{n:6.4f}" for n in r["norms"]) + f"  {r['mean']:7.4f}  {r['std']:7.4f}")


if __name__ == "__main__":
    main()
