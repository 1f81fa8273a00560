"""Central finite differences on the relaxed forward pass.

The loss used for checking is linear in the logits, ``L = sum(R * logits)``, so
``dL/dlogits = R`` can be fed straight into :func:`backward`.
"""

from __future__ import annotations

import numpy as np

from .network import Network, backward, forward, forward_stacked


def _perturbed_copies(param: np.ndarray, eps: float) -> np.ndarray:
    """Return ``(2 * size, *param.shape)``: +eps then -eps on every coordinate."""
    n = param.size
    eye = np.eye(n).reshape((n,) + param.shape) * eps
    return np.concatenate([param + eye, param - eye])


def finite_difference_grads(net: Network, x, R, eps: float = 1e-5, T: int | None = None) -> list[np.ndarray]:
    """FD gradients of ``sum(R * logits)`` for every array in ``net.parameters()``."""
    weights = [layer.weight for layer in net.layers]
    biases = [layer.bias for layer in net.layers]
    out = []
    for l in range(len(weights)):
        for which in ("weight", "bias"):
            base = weights[l] if which == "weight" else biases[l]
            if base is None:
                continue
            n = base.size
            stack = _perturbed_copies(base, eps)
            ws, bs = list(weights), list(biases)
            if which == "weight":
                ws[l] = stack
            else:
                bs[l] = stack[:, None, :]
            logits = forward_stacked(net, x, ws, bs, relaxed=True, T=T)
            vals = (logits * R).reshape(2 * n, -1).sum(axis=1)
            out.append(((vals[:n] - vals[n:]) / (2 * eps)).reshape(base.shape))
    return out


def relative_errors(analytic: list[np.ndarray], numeric: list[np.ndarray], floor: float = 1e-6) -> np.ndarray:
    a = np.concatenate([np.ravel(g) for g in analytic])
    n = np.concatenate([np.ravel(g) for g in numeric])
    return np.abs(a - n) / np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)


def check_gradients(net: Network, x, R, eps: float = 1e-5, T: int | None = None) -> float:
    """Max relative error between tape gradients and FD on the relaxed graph."""
    _, tape = forward(net, x, record=True, relaxed=True, T=T)
    analytic = backward(tape, R).as_list()
    numeric = finite_difference_grads(net, x, R, eps=eps, T=T)
    return float(relative_errors(analytic, numeric).max())


def near_kink(net: Network, x, margin: float, T: int | None = None) -> bool:
    """True when a pre-reset potential sits within ``margin`` of a surrogate window edge.

    The relaxed spike is not differentiable at the edges, so FD there is
    meaningless; gradient-check drivers resample such configurations.
    """
    _, tape = forward(net, x, record=True, relaxed=True, T=T)
    for block, rec in zip(net.blocks, tape.layers):
        p = block.params
        d = np.abs(np.abs(np.stack(rec.u_pre) - p.v_th) - p.sg_width / 2)
        if (d < margin).any():
            return True
    return False
