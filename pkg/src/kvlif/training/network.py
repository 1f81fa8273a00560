"""Dense spiking networks unrolled in time, with a recording tape and BPTT.

Shapes used throughout: inputs are ``(batch, features)`` (the same frame is fed
at every step) or ``(batch, features, T)``; logits are ``(batch, classes, T)``.

Weights may carry a leading "copy" axis, ``(P, out, in)``, in which case every
activation gains a leading ``P`` axis and the P weight sets are simulated side by
side. Finite-difference checking relies on this; training never uses it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit as sigmoid

from ..neurons import (
    LayerState,
    NeuronParams,
    StepError,
    heaviside,
    relaxed_spike,
    step_function,
)


class ShapeError(ValueError):
    pass


class NumericError(FloatingPointError):
    """Non-finite activation; carries the layer and time step where it appeared."""

    def __init__(self, message: str, layer: int, step: int):
        super().__init__(message)
        self.layer = layer
        self.step = step


@dataclass
class DenseLayer:
    weight: np.ndarray  # (out, in)
    bias: np.ndarray | None = None

    def __post_init__(self):
        self.weight = np.asarray(self.weight)
        if self.weight.ndim != 2:
            raise ShapeError(f"weight must be 2-D (out, in), got shape {self.weight.shape}")
        if self.bias is not None:
            self.bias = np.asarray(self.bias, dtype=self.weight.dtype)
            if self.bias.shape != (self.weight.shape[0],):
                raise ShapeError(f"bias shape {self.bias.shape} does not match {self.weight.shape[0]} outputs")
        if not np.isfinite(self.weight).all() or (self.bias is not None and not np.isfinite(self.bias).all()):
            raise ValueError("layer parameters must be finite")

    @property
    def in_dim(self) -> int:
        return self.weight.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weight.shape[0]


@dataclass
class Block:
    layer: DenseLayer
    kind: str
    params: NeuronParams

    def __post_init__(self):
        step_function(self.kind)


@dataclass
class Network:
    """Spiking blocks followed by a non-spiking leaky-integrator readout.

    ``encoding`` is ``"direct"`` when a single frame is presented at every step
    and ``"temporal"`` when inputs already carry a time axis.
    """

    blocks: list[Block]
    readout: DenseLayer
    T: int
    readout_decay: float = 0.5
    encoding: str = "direct"

    def __post_init__(self):
        if self.T < 1:
            raise ValueError(f"T must be >= 1, got {self.T}")
        if not 0.0 <= self.readout_decay < 1.0:
            raise ValueError(f"readout_decay must lie in [0, 1), got {self.readout_decay}")
        if self.encoding not in ("direct", "temporal"):
            raise ValueError(f"unknown encoding {self.encoding!r}")
        widths = [b.layer for b in self.blocks] + [self.readout]
        for prev, nxt in zip(widths, widths[1:]):
            if prev.out_dim != nxt.in_dim:
                raise ShapeError(f"layer with {prev.out_dim} outputs feeds a layer expecting {nxt.in_dim} inputs")

    @property
    def layers(self) -> list[DenseLayer]:
        return [b.layer for b in self.blocks] + [self.readout]

    @property
    def in_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def n_classes(self) -> int:
        return self.readout.out_dim

    def parameters(self) -> list[np.ndarray]:
        """Flat list of trainable arrays in a fixed order (weight, bias per layer)."""
        out = []
        for layer in self.layers:
            out.append(layer.weight)
            if layer.bias is not None:
                out.append(layer.bias)
        return out

    def copy(self) -> "Network":
        return Network(
            blocks=[
                Block(DenseLayer(b.layer.weight.copy(), None if b.layer.bias is None else b.layer.bias.copy()), b.kind, b.params)
                for b in self.blocks
            ],
            readout=DenseLayer(self.readout.weight.copy(), None if self.readout.bias is None else self.readout.bias.copy()),
            T=self.T,
            readout_decay=self.readout_decay,
            encoding=self.encoding,
        )


def kaiming_uniform(rng: np.random.Generator, out_dim: int, in_dim: int, dtype=np.float64) -> np.ndarray:
    bound = np.sqrt(6.0 / in_dim)
    return rng.uniform(-bound, bound, size=(out_dim, in_dim)).astype(dtype)


def build_network(
    in_dim: int,
    hidden: list[int],
    n_classes: int,
    kinds,
    params: NeuronParams,
    T: int,
    seed: int = 0,
    bias: bool = True,
    readout_decay: float = 0.5,
    encoding: str = "direct",
    dtype=np.float64,
) -> Network:
    """Seeded Kaiming-uniform initialisation; ``kinds`` is one kind or one per hidden layer."""
    if isinstance(kinds, str):
        kinds = [kinds] * len(hidden)
    if len(kinds) != len(hidden):
        raise ValueError("need one neuron kind per hidden layer")
    rng = np.random.default_rng(seed)
    blocks = []
    fan_in = in_dim
    for width, kind in zip(hidden, kinds):
        w = kaiming_uniform(rng, width, fan_in, dtype)
        b = np.zeros(width, dtype=dtype) if bias else None
        blocks.append(Block(DenseLayer(w, b), kind, params))
        fan_in = width
    w = kaiming_uniform(rng, n_classes, fan_in, dtype)
    readout = DenseLayer(w, np.zeros(n_classes, dtype=dtype) if bias else None)
    return Network(blocks, readout, T, readout_decay=readout_decay, encoding=encoding)


@dataclass
class LayerRecord:
    """Per-step intermediates of one spiking layer; each list has one entry per step."""

    inputs: list = field(default_factory=list)  # presynaptic activity S^{l-1}[t]
    current: list = field(default_factory=list)  # I^l[t] before shunting
    shunt: list = field(default_factory=list)
    u_pre: list = field(default_factory=list)
    k_prev: list = field(default_factory=list)
    k: list = field(default_factory=list)
    spike: list = field(default_factory=list)

    def spikes(self) -> np.ndarray:
        """Spikes stacked as ``(batch, neurons, T)``."""
        return np.stack(self.spike, axis=-1)


@dataclass
class Tape:
    net: Network
    x: np.ndarray
    T: int
    relaxed: bool
    layers: list[LayerRecord]
    readout_inputs: list
    logits: np.ndarray

    def replay(self) -> np.ndarray:
        """Re-run the recorded forward pass and return its logits."""
        logits, _ = forward(self.net, self.x, T=self.T, relaxed=self.relaxed)
        return logits

    def layer_spikes(self) -> list[np.ndarray]:
        return [rec.spikes() for rec in self.layers]


def _frame(x: np.ndarray, t: int) -> np.ndarray:
    return x if x.ndim == 2 else x[..., t]


def _finite_or_raise(arr: np.ndarray, what: str, layer: int, t: int) -> None:
    if not np.isfinite(arr).all():
        raise NumericError(f"non-finite {what} in layer {layer} at step {t}", layer, t)


def _unroll(net: Network, x: np.ndarray, T: int, weights, biases, relaxed: bool, record: bool):
    # overflow is reported as NumericError below, not as a numpy warning
    with np.errstate(over="ignore", invalid="ignore"):
        return _unroll_steps(net, x, T, weights, biases, relaxed, record)


def _unroll_steps(net: Network, x: np.ndarray, T: int, weights, biases, relaxed: bool, record: bool):
    spike_fn = relaxed_spike if relaxed else heaviside
    n_blocks = len(net.blocks)
    states = [None] * n_blocks
    records = [LayerRecord() for _ in range(n_blocks)] if record else None
    readout_inputs = []
    m = None
    logits = []
    for t in range(T):
        s = _frame(x, t)
        for l, block in enumerate(net.blocks):
            w, b = weights[l], biases[l]
            cur = s @ np.swapaxes(w, -1, -2)
            if b is not None:
                cur = cur + b
            _finite_or_raise(cur, "input current", l, t)
            prev = states[l]
            if prev is None:
                prev = LayerState.zeros(cur.shape, cur.dtype)
            try:
                out = step_function(block.kind)(cur, prev, block.params, spike_fn)
            except StepError as e:
                raise NumericError(f"layer {l}, step {t}: {e}", l, t) from None
            _finite_or_raise(out.state.u, "membrane potential", l, t)
            if record:
                rec = records[l]
                rec.inputs.append(s)
                rec.current.append(cur)
                rec.shunt.append(out.shunt)
                rec.u_pre.append(out.u_pre_reset)
                rec.k_prev.append(prev.k)
                rec.k.append(out.state.k)
                rec.spike.append(out.spike)
            states[l] = out.state
            s = out.spike
        w, b = weights[-1], biases[-1]
        cur = s @ np.swapaxes(w, -1, -2)
        if b is not None:
            cur = cur + b
        m = cur if m is None else net.readout_decay * m + cur
        _finite_or_raise(m, "readout potential", n_blocks, t)
        if record:
            readout_inputs.append(s)
        logits.append(m)
    return np.stack(logits, axis=-1), records, readout_inputs


def _check_input(net: Network, x: np.ndarray, T: int | None) -> int:
    if x.ndim not in (2, 3):
        raise ShapeError(f"input must be (batch, features) or (batch, features, T), got {x.shape}")
    if x.shape[1] != net.in_dim:
        raise ShapeError(f"input has {x.shape[1]} features, network expects {net.in_dim}")
    if net.encoding == "temporal" and x.ndim != 3:
        raise ShapeError("temporal encoding needs a (batch, features, T) input")
    if T is None:
        T = net.T if x.ndim == 2 else x.shape[2]
    if T < 1:
        raise ValueError(f"T must be >= 1, got {T}")
    if x.ndim == 3 and x.shape[2] < T:
        raise ShapeError(f"input carries {x.shape[2]} steps, {T} requested")
    if not np.isfinite(x).all():
        raise NumericError("non-finite network input", 0, 0)
    return T


def forward(net: Network, x, record: bool = False, T: int | None = None, relaxed: bool = False):
    """Run the network for ``T`` steps (default ``net.T``) and return ``(logits, tape)``.

    Logits are the readout membrane potentials, ``(batch, classes, T)``. ``tape``
    is ``None`` unless ``record`` is set. With ``relaxed=True`` the Heaviside
    spike is replaced by its piecewise-linear surrogate primitive, which makes
    the whole graph differentiable and is only meant for gradient checking.
    """
    x = np.asarray(x)
    if not np.issubdtype(x.dtype, np.floating):
        x = x.astype(net.readout.weight.dtype)
    T = _check_input(net, x, T)
    weights = [layer.weight for layer in net.layers]
    biases = [layer.bias for layer in net.layers]
    logits, records, readout_inputs = _unroll(net, x, T, weights, biases, relaxed, record)
    tape = Tape(net, x, T, relaxed, records, readout_inputs, logits) if record else None
    return logits, tape


def forward_stacked(net: Network, x, weights, biases, relaxed: bool = True, T: int | None = None) -> np.ndarray:
    """Forward pass with explicit (possibly copy-stacked) parameters, no tape."""
    x = np.asarray(x, dtype=np.float64)
    T = _check_input(net, x, T)
    logits, _, _ = _unroll(net, x, T, weights, biases, relaxed, record=False)
    return logits


def surrogate_grad(u_pre, width: float, v_th: float):
    """Rectangular surrogate derivative of the spike: ``1/width`` inside the open window."""
    u_pre = np.asarray(u_pre, dtype=np.float64) if np.isscalar(u_pre) else np.asarray(u_pre)
    return (np.abs(u_pre - v_th) < width / 2.0).astype(u_pre.dtype) / width


@dataclass
class Gradients:
    weights: list[np.ndarray]
    biases: list[np.ndarray | None]
    # per-step weight contributions, filled when requested
    per_step: list[list[np.ndarray]] | None = None

    def as_list(self) -> list[np.ndarray]:
        """Same order as :meth:`Network.parameters`."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            if b is not None:
                out.append(b)
        return out


def backward(tape: Tape, loss_grad, per_step: bool = False) -> Gradients:
    """Reverse-mode sweep over the tape.

    ``loss_grad`` is dL/dlogits with the same ``(batch, classes, T)`` shape as the
    logits. The spike derivative is replaced by the rectangular surrogate; every
    other operation (leak, shunt gate, potassium recursion, adaptive reset) is
    differentiated exactly and gradients flow across time through both U and K.
    """
    net = tape.net
    g = np.asarray(loss_grad)
    if g.shape != tape.logits.shape:
        raise ShapeError(f"loss gradient shape {g.shape} does not match logits {tape.logits.shape}")
    layers = net.layers
    n_blocks = len(net.blocks)
    gw = [np.zeros_like(layer.weight) for layer in layers]
    gb = [None if layer.bias is None else np.zeros_like(layer.bias) for layer in layers]
    steps = [[None] * tape.T for _ in layers] if per_step else None

    gu = [0.0] * n_blocks  # dL/dU_post carried back from step t+1
    gk = [0.0] * n_blocks  # dL/dK carried back from step t+1
    gm = 0.0
    lam_r = net.readout_decay
    for t in reversed(range(tape.T)):
        # readout leaky integrator
        gm = g[..., t] + lam_r * gm
        s_in = tape.readout_inputs[t]
        contrib = gm.T @ s_in
        gw[-1] += contrib
        if gb[-1] is not None:
            gb[-1] += gm.sum(axis=0)
        if per_step:
            steps[-1][t] = contrib
        gs = gm @ layers[-1].weight

        for l in reversed(range(n_blocks)):
            block = net.blocks[l]
            rec = tape.layers[l]
            p = block.params
            u = rec.u_pre[t]
            s = rec.spike[t]
            h = surrogate_grad(u, p.sg_width, p.v_th)
            if block.kind == "lif-s":
                ds = gs - p.v_th * gu[l]
                du = gu[l] + ds * h
                dcur = du
                gk_prev = 0.0
            elif block.kind == "lif-h":
                ds = gs - u * gu[l]
                du = gu[l] * (1.0 - s) + ds * h
                dcur = du
                gk_prev = 0.0
            else:
                k = rec.k[t]
                sk = sigmoid(k)
                dk = gk[l] - gu[l] * s * sk * (1.0 - sk)
                ds = gs - gu[l] * (p.v_th + sk) + dk
                du = gu[l] + ds * h + p.beta * dk
                dcur = du * rec.shunt[t]
                skp = sigmoid(rec.k_prev[t])
                gk_prev = p.alpha * dk - du * rec.current[t] * p.gamma * skp * (1.0 - skp)
            gu[l] = p.lam * du
            gk[l] = gk_prev
            contrib = dcur.T @ rec.inputs[t]
            gw[l] += contrib
            if gb[l] is not None:
                gb[l] += dcur.sum(axis=0)
            if per_step:
                steps[l][t] = contrib
            gs = dcur @ layers[l].weight
    return Gradients(gw, gb, steps)


def grad_l2_norms(grads: Gradients | list[np.ndarray]) -> dict:
    """Per-layer Euclidean norm of the weight gradients, with their mean and std."""
    ws = grads.weights if isinstance(grads, Gradients) else list(grads)
    norms = [float(np.linalg.norm(np.ravel(w))) for w in ws]
    return {"norms": norms, "mean": float(np.mean(norms)), "std": float(np.std(norms))}
