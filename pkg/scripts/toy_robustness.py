"""Train the three neuron kinds on a toy task, then run the noise and short-window grids.

    python3 scripts/toy_robustness.py [--task two_rate|moving_bar] [--seed 7] [--epochs 50]
"""

import argparse

import numpy as np

from kvlif.config import resolve_config
from kvlif.encoding import NoiseSpec
from kvlif.experiments import load_data, net_input, new_network, train_options
from kvlif.training import evaluate, train

GRIDS = {
    "gaussian_static": [0.04, 0.08, 0.12, 0.16, 0.20],
    "temporal_drop": [0.1, 0.2, 0.3, 0.4, 0.5],
    "pixel_event": [0.1, 0.2, 0.3, 0.4, 0.5],
}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--task", choices=("two_rate", "moving_bar"), default="two_rate")
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--epochs", type=int, default=50)
    args = ap.parse_args()

    cfg = resolve_config({"dataset": {"kind": args.task}, "train": {"epochs": args.epochs}}, {"seed": args.seed})
    (Xtr, ytr), (Xte, yte), encoding = load_data(cfg)
    n_classes = int(ytr.max()) + 1
    kinds = ["gaussian_static", "temporal_drop"] + (["pixel_event"] if args.task == "moving_bar" else [])

    for kind in ("lif-s", "lif-h", "kvlif"):
        net = new_network(cfg, kind, net_input(Xtr[:1], np.float64).shape[1], n_classes, encoding)
        train(net, net_input(Xtr, np.float64), ytr, train_options(cfg))
        print(f"\n{kind}: clean test accuracy {evaluate(net, net_input(Xte, np.float64), yte):.4f}")
        for noise in kinds:
            accs = [evaluate(net, net_input(NoiseSpec(noise, lv, seed=args.seed).apply(Xte), np.float64), yte) for lv in GRIDS[noise]]
            print(f"  {noise:16}" + " ".join(f"{a:.3f}" for a in accs))
        curve = [evaluate(net, net_input(Xte, np.float64), yte, T=t) for t in cfg.shortwindow_T]
        print(f"  {'inference T':16}" + " ".join(f"{a:.3f}" for a in curve) + f"   (T = {cfg.shortwindow_T})")


if __name__ == "__main__":
    main()
