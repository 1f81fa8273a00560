from .checkpoint import load_checkpoint, save_checkpoint
from .gradcheck import check_gradients, finite_difference_grads, near_kink, relative_errors
from .losses import loss_ce_mean, loss_tet
from .loop import DivergenceError, TrainOptions, TrainState, evaluate, predict, train
from .network import (
    Block,
    DenseLayer,
    Gradients,
    Network,
    NumericError,
    ShapeError,
    Tape,
    backward,
    build_network,
    forward,
    grad_l2_norms,
    surrogate_grad,
)
from .optim import SGD, Adam, make_optimizer

__all__ = [
    "Adam",
    "Block",
    "DenseLayer",
    "DivergenceError",
    "Gradients",
    "Network",
    "NumericError",
    "SGD",
    "ShapeError",
    "Tape",
    "TrainOptions",
    "TrainState",
    "backward",
    "build_network",
    "check_gradients",
    "evaluate",
    "finite_difference_grads",
    "forward",
    "grad_l2_norms",
    "load_checkpoint",
    "loss_ce_mean",
    "loss_tet",
    "make_optimizer",
    "near_kink",
    "predict",
    "relative_errors",
    "save_checkpoint",
    "surrogate_grad",
    "train",
]
