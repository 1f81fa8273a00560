from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .losses import loss_ce_mean, loss_tet
from .network import Network, NumericError, backward, forward
from .optim import make_optimizer


class DivergenceError(FloatingPointError):
    def __init__(self, message: str, epoch: int, step: int):
        super().__init__(message)
        self.epoch = epoch
        self.step = step


@dataclass
class TrainOptions:
    epochs: int = 50
    lr: float = 5e-3
    batch_size: int = 32
    seed: int = 0
    optimizer: str = "adam"
    momentum: float = 0.9
    weight_decay: float = 0.0
    loss: str = "ce"
    tet_lambda: float = 0.05


@dataclass
class TrainState:
    """Everything needed to resume: completed epochs and optimizer buffers."""

    epoch: int = 0
    optimizer: dict = field(default_factory=dict)
    history: list = field(default_factory=list)


def compute_loss(logits, labels, opts: TrainOptions, v_th: float = 1.0):
    # a non-finite loss is turned into DivergenceError by the caller
    with np.errstate(over="ignore", invalid="ignore"):
        if opts.loss == "ce":
            return loss_ce_mean(logits, labels)
        if opts.loss == "tet":
            return loss_tet(logits, labels, lamb=opts.tet_lambda, target=v_th)
    raise ValueError(f"unknown loss {opts.loss!r}")


def predict(net: Network, X, T: int | None = None, batch_size: int = 256) -> np.ndarray:
    preds = []
    for i in range(0, len(X), batch_size):
        logits, _ = forward(net, X[i : i + batch_size], T=T)
        preds.append(logits.mean(axis=2).argmax(axis=1))
    return np.concatenate(preds) if preds else np.zeros(0, dtype=np.int64)


def evaluate(net: Network, X, y, T: int | None = None, batch_size: int = 256) -> float:
    """Classification accuracy of the time-averaged readout."""
    if len(X) == 0:
        raise ValueError("cannot evaluate on an empty dataset")
    return float((predict(net, X, T=T, batch_size=batch_size) == np.asarray(y)).mean())


def epoch_order(seed: int, epoch: int, n: int) -> np.ndarray:
    # one stream per (seed, epoch) so a resumed run sees the same batches
    return np.random.default_rng([seed, epoch]).permutation(n)


def train(net: Network, X, y, opts: TrainOptions, state: TrainState | None = None) -> TrainState:
    """Train ``net`` in place with full BPTT until ``opts.epochs`` epochs are complete.

    Passing the ``state`` returned by an earlier call resumes exactly where it
    stopped. Each history entry holds the epoch's mean loss and the accuracy of
    the predictions made during that epoch.
    """
    X = np.asarray(X)
    y = np.asarray(y)
    if len(X) == 0:
        raise ValueError("training set is empty")
    if len(X) != len(y):
        raise ValueError(f"{len(X)} samples but {len(y)} labels")
    params = net.parameters()
    opt = make_optimizer(opts.optimizer, params, opts.lr, momentum=opts.momentum, weight_decay=opts.weight_decay)
    state = state or TrainState()
    if state.optimizer:
        opt.load_state_dict(state.optimizer)
    v_th = net.blocks[-1].params.v_th if net.blocks else 1.0

    for epoch in range(state.epoch, opts.epochs):
        order = epoch_order(opts.seed, epoch, len(X))
        total_loss = 0.0
        correct = 0
        for step, i in enumerate(range(0, len(X), opts.batch_size)):
            idx = order[i : i + opts.batch_size]
            xb, yb = X[idx], y[idx]
            try:
                logits, tape = forward(net, xb, record=True)
            except NumericError as e:
                raise DivergenceError(f"epoch {epoch}, step {step}: {e}", epoch, step) from None
            loss, dlogits = compute_loss(logits, yb, opts, v_th)
            if not np.isfinite(loss):
                raise DivergenceError(f"non-finite loss at epoch {epoch}, step {step}", epoch, step)
            grads = backward(tape, dlogits)
            opt.step(grads.as_list())
            total_loss += loss * len(idx)
            correct += int((logits.mean(axis=2).argmax(axis=1) == yb).sum())
        state.history.append({"epoch": epoch + 1, "loss": total_loss / len(X), "accuracy": correct / len(X)})
        state.epoch = epoch + 1
    state.optimizer = opt.state_dict()
    return state


def options_dict(opts: TrainOptions) -> dict:
    return asdict(opts)
