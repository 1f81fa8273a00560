"""Checkpoint container (``.npz``); the layout is described in docs/formats.md."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..neurons import NeuronParams
from .loop import TrainState
from .network import Block, DenseLayer, Network

FORMAT_VERSION = 1


def save_checkpoint(path, net: Network, seed: int, state: TrainState | None = None, extra: dict | None = None) -> Path:
    path = Path(path)
    state = state or TrainState()
    arrays = {}
    for i, layer in enumerate(net.layers):
        arrays[f"layer{i}.weight"] = layer.weight
        if layer.bias is not None:
            arrays[f"layer{i}.bias"] = layer.bias
    scalars = {}
    for key, value in state.optimizer.items():
        if isinstance(value, list):
            for j, a in enumerate(value):
                arrays[f"opt.{key}.{j}"] = a
        else:
            scalars[key] = value
    meta = {
        "format_version": FORMAT_VERSION,
        "seed": seed,
        "T": net.T,
        "readout_decay": net.readout_decay,
        "encoding": net.encoding,
        "blocks": [{"kind": b.kind, "params": b.params.to_dict()} for b in net.blocks],
        "epoch": state.epoch,
        "history": state.history,
        "optimizer_scalars": scalars,
        "extra": extra or {},
    }
    arrays["meta"] = np.frombuffer(json.dumps(meta, sort_keys=True).encode("utf-8"), dtype=np.uint8)
    with open(path, "wb") as f:
        np.savez(f, **arrays)
    return path


def load_checkpoint(path):
    """Return ``(net, seed, state, extra)``."""
    with np.load(Path(path)) as z:
        meta = json.loads(z["meta"].tobytes().decode("utf-8"))
        if meta.get("format_version") != FORMAT_VERSION:
            raise ValueError(f"unsupported checkpoint format version {meta.get('format_version')}")
        n_layers = len(meta["blocks"]) + 1
        layers = []
        for i in range(n_layers):
            bias_key = f"layer{i}.bias"
            layers.append(DenseLayer(z[f"layer{i}.weight"].copy(), z[bias_key].copy() if bias_key in z.files else None))
        optimizer = dict(meta["optimizer_scalars"])
        groups: dict[str, dict[int, np.ndarray]] = {}
        for name in z.files:
            if name.startswith("opt."):
                _, key, j = name.split(".")
                groups.setdefault(key, {})[int(j)] = z[name].copy()
        for key, items in groups.items():
            optimizer[key] = [items[j] for j in sorted(items)]
    blocks = [Block(layer, b["kind"], NeuronParams.from_dict(b["params"])) for layer, b in zip(layers, meta["blocks"])]
    net = Network(blocks, layers[-1], meta["T"], readout_decay=meta["readout_decay"], encoding=meta["encoding"])
    state = TrainState(epoch=meta["epoch"], optimizer=optimizer, history=meta["history"])
    return net, meta["seed"], state, meta["extra"]
