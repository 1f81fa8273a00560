"""Discrete-time neuron models: soft/hard-reset LIF and the potassium-regulated KvLIF.

Every step function is pure: it maps an input current and the previous
:class:`LayerState` to a :class:`StepOutput` and never mutates its arguments.
Arrays of any shape are accepted; all operations are elementwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy.special import expit as sigmoid

NEURON_KINDS = ("lif-s", "lif-h", "kvlif")

SpikeFn = Callable[[np.ndarray, float, float], np.ndarray]


class StepError(ValueError):
    """Raised when a step receives non-finite values."""

    def __init__(self, message: str, index: tuple[int, ...] | None = None):
        super().__init__(message)
        self.index = index


@dataclass(frozen=True)
class NeuronParams:
    """Scalar hyperparameters shared by all neurons of a layer.

    ``alpha``, ``beta`` and ``gamma`` only affect KvLIF; ``sg_width`` is the
    width of the rectangular surrogate used during training.
    """

    lam: float = 0.5
    v_th: float = 1.0
    alpha: float = 0.8
    beta: float = 0.3
    gamma: float = 0.05
    sg_width: float = 1.0

    def __post_init__(self):
        for name, value in self.to_dict().items():
            if not np.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value}")
        if not 0.0 < self.lam < 1.0:
            raise ValueError(f"lambda must lie strictly inside (0, 1), got {self.lam}")
        if self.v_th <= 0.0:
            raise ValueError(f"v_th must be positive, got {self.v_th}")
        if not 0.0 <= self.alpha < 1.0:
            raise ValueError(f"alpha must lie in [0, 1), got {self.alpha}")
        if self.beta < 0.0:
            raise ValueError(f"beta must be non-negative, got {self.beta}")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in [0, 1], got {self.gamma}")
        if self.sg_width <= 0.0:
            raise ValueError(f"sg_width must be positive, got {self.sg_width}")

    def with_(self, **overrides) -> "NeuronParams":
        return replace(self, **overrides)

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "v_th": self.v_th,
            "alpha": self.alpha,
            "beta": self.beta,
            "gamma": self.gamma,
            "sg_width": self.sg_width,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NeuronParams":
        d = dict(d)
        if "lambda" in d:
            d["lam"] = d.pop("lambda")
        return cls(**d)


# Table-6 style presets: alpha/beta/gamma per dataset, lambda=0.5, v_th=sigma=1.
PRESET_BETA = {
    "cifar10": 0.3,
    "cifar100": 0.1,
    "tiny": 0.3,
    "cifar10-dvs": 0.1,
    "dvs-gesture": 0.3,
    "toy": 0.3,
}


def paper_params(beta: float = 0.3) -> NeuronParams:
    """Default hyperparameters (lambda=0.5, v_th=1, alpha=0.8, gamma=0.05)."""
    return NeuronParams(lam=0.5, v_th=1.0, alpha=0.8, beta=beta, gamma=0.05, sg_width=1.0)


@dataclass(frozen=True)
class LayerState:
    u: np.ndarray
    k: np.ndarray

    @classmethod
    def zeros(cls, shape, dtype=np.float64) -> "LayerState":
        return cls(u=np.zeros(shape, dtype=dtype), k=np.zeros(shape, dtype=dtype))


@dataclass(frozen=True)
class StepOutput:
    spike: np.ndarray
    state: LayerState
    u_pre_reset: np.ndarray
    # input gain applied before integration; 1 for the LIF variants
    shunt: np.ndarray | float = field(default=1.0)


def heaviside(u: np.ndarray, v_th: float, width: float) -> np.ndarray:
    """Binary spike: 1 where ``u >= v_th``."""
    return (u >= v_th).astype(u.dtype)


def relaxed_spike(u: np.ndarray, v_th: float, width: float) -> np.ndarray:
    """Piecewise-linear spike whose derivative is exactly the rectangular surrogate."""
    return np.clip((u - v_th) / width + 0.5, 0.0, 1.0).astype(u.dtype, copy=False)


def _check_finite(name: str, arr) -> None:
    a = np.asarray(arr)
    bad = ~np.isfinite(a)
    if bad.any():
        idx = tuple(int(i) for i in np.argwhere(bad)[0]) if a.ndim else ()
        raise StepError(f"non-finite {name} at neuron index {idx}", idx)


def _prepare(i, prev: LayerState):
    i = np.asarray(i)
    if i.dtype != np.float32:
        i = i.astype(np.float64, copy=False)
    _check_finite("input current", i)
    _check_finite("membrane potential", prev.u)
    _check_finite("potassium state", prev.k)
    return i


def lif_soft_step(i, prev: LayerState, p: NeuronParams, spike_fn: SpikeFn = heaviside) -> StepOutput:
    """LIF step with reset by subtraction: the residual above threshold is kept."""
    i = _prepare(i, prev)
    u_pre = p.lam * prev.u + i
    s = spike_fn(u_pre, p.v_th, p.sg_width)
    u_next = u_pre - p.v_th * s
    return StepOutput(s, LayerState(u_next, np.zeros_like(u_next)), u_pre)


def lif_hard_step(i, prev: LayerState, p: NeuronParams, spike_fn: SpikeFn = heaviside) -> StepOutput:
    """LIF step with reset to zero."""
    i = _prepare(i, prev)
    u_pre = p.lam * prev.u + i
    s = spike_fn(u_pre, p.v_th, p.sg_width)
    u_next = u_pre * (1.0 - s)
    return StepOutput(s, LayerState(u_next, np.zeros_like(u_next)), u_pre)


def kvlif_step(i, prev: LayerState, p: NeuronParams, spike_fn: SpikeFn = heaviside) -> StepOutput:
    """KvLIF step.

    The order of operations is fixed: the input is shunted by the previous
    potassium state, integrated, the potassium state is driven by the
    pre-reset potential, the spike increments it, and the reset subtracts
    ``v_th + sigmoid(k)`` using the already-incremented state.
    """
    i = _prepare(i, prev)
    shunt = 1.0 - p.gamma * sigmoid(prev.k)
    u_pre = p.lam * prev.u + i * shunt
    k_init = p.alpha * prev.k + p.beta * u_pre
    s = spike_fn(u_pre, p.v_th, p.sg_width)
    k = k_init + s
    u_next = u_pre - s * (p.v_th + sigmoid(k))
    return StepOutput(s, LayerState(u_next, k), u_pre, shunt)


STEP_FUNCTIONS = {
    "lif-s": lif_soft_step,
    "lif-h": lif_hard_step,
    "kvlif": kvlif_step,
}


def step_function(kind: str):
    try:
        return STEP_FUNCTIONS[kind]
    except KeyError:
        raise ValueError(f"unknown neuron kind {kind!r}; expected one of {NEURON_KINDS}") from None


@dataclass(frozen=True)
class Trace:
    """Per-step record of a single-layer simulation; arrays are (time, *neurons)."""

    u_pre: np.ndarray
    u_post: np.ndarray
    k: np.ndarray
    spike: np.ndarray

    def __len__(self) -> int:
        return self.spike.shape[0]

    @property
    def firing_rate(self) -> float:
        return float(self.spike.mean())


def run_sequence(kind: str, inputs, p: NeuronParams) -> Trace:
    """Fold the step function of ``kind`` over ``inputs`` (time first) from rest."""
    inputs = np.asarray(inputs, dtype=np.float64)
    if inputs.ndim == 0 or inputs.shape[0] == 0:
        raise ValueError("run_sequence needs at least one time step")
    step = step_function(kind)
    state = LayerState.zeros(inputs.shape[1:])
    rows = []
    for t in range(inputs.shape[0]):
        try:
            out = step(inputs[t], state, p)
        except StepError as e:
            raise StepError(f"step {t}: {e}", e.index) from None
        rows.append((out.u_pre_reset, out.state.u, out.state.k, out.spike))
        state = out.state
    u_pre, u_post, k, s = (np.stack(c) for c in zip(*rows))
    return Trace(u_pre, u_post, k, s)
