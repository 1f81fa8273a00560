"""Implementations behind the CLI subcommands.

Each ``cmd_*`` function takes a validated :class:`ExperimentConfig` and an
output root, writes its CSV files plus ``manifest.json`` into a fresh run
directory, and returns ``(manifest, run_dir)``.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import energy_account, false_positive_scenario, firing_rate, intensity_sweep
from .config import ConfigError, ExperimentConfig
from .datasets import flatten_events, load_idx_dataset, train_test
from .encoding import encode_poisson
from .manifest import RunManifest
from .neurons import run_sequence
from .training import (
    make_optimizer,
    TrainOptions,
    TrainState,
    build_network,
    evaluate,
    forward,
    load_checkpoint,
    save_checkpoint,
    train,
)

log = logging.getLogger("kvlif")


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)


def write_csv(path: Path, header: list[str], rows: list[dict]) -> Path:
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(row[h]) for h in header])
    return path


def make_run_dir(out: Path, command: str, cfg: ExperimentConfig) -> Path:
    digest = hashlib.sha256(json.dumps(cfg.to_dict(), sort_keys=True).encode()).hexdigest()[:8]
    stamp = datetime.now(timezone.utc).strftime("%Y%m%dT%H%M%S")
    base = Path(out) / f"{stamp}_{command}_s{cfg.seed}_{digest}"
    run_dir, n = base, 1
    while run_dir.exists():
        run_dir = base.with_name(f"{base.name}_{n}")
        n += 1
    run_dir.mkdir(parents=True)
    return run_dir


class _Run:
    """Bookkeeping shared by every command: run directory, timing, manifest."""

    def __init__(self, command: str, cfg: ExperimentConfig, out):
        self.cfg = cfg
        self.dir = make_run_dir(Path(out), command, cfg)
        self.t0 = time.perf_counter()
        self.manifest = RunManifest(
            command=command,
            config=cfg.to_dict(),
            tool_version=__version__,
            started_at=datetime.now(timezone.utc).isoformat(timespec="seconds"),
        )

    def csv(self, name: str, header, rows) -> Path:
        path = write_csv(self.dir / name, header, rows)
        self.manifest.outputs.append(name)
        return path

    def finish(self):
        self.manifest.wall_clock_s = time.perf_counter() - self.t0
        self.manifest.write(self.dir / "manifest.json")
        log.info("wrote %s", self.dir)
        return self.manifest, self.dir


# ---------------------------------------------------------------- dynamics


def dynamics_drive(cfg: ExperimentConfig) -> np.ndarray:
    dy = cfg.dynamics
    if dy.input == "zero":
        return np.zeros(dy.T)
    if dy.input == "constant":
        return np.full(dy.T, dy.intensity * dy.weight)
    return encode_poisson(np.array([dy.intensity]), dy.T, seed=cfg.seed).values[0] * dy.weight


def cmd_dynamics(cfg: ExperimentConfig, out):
    run = _Run("dynamics", cfg, out)
    p = cfg.neuron_params()
    drive = dynamics_drive(cfg)
    summary = []
    for kind in cfg.neurons:
        tr = run_sequence(kind, drive, p)
        rows = [
            {"t": t, "input": drive[t], "u_pre": tr.u_pre[t], "u_post": tr.u_post[t], "k": tr.k[t], "spike": int(tr.spike[t])}
            for t in range(len(tr))
        ]
        run.csv(f"trace_{kind}.csv", ["t", "input", "u_pre", "u_post", "k", "spike"], rows)
        rate = firing_rate(tr.spike)
        summary.append({"model": kind, "T": len(tr), "spikes": int(tr.spike.sum()), "firing_rate": rate, "min_u_post": float(tr.u_post.min())})
        run.manifest.firing_rates[kind] = rate
    run.csv("summary.csv", ["model", "T", "spikes", "firing_rate", "min_u_post"], summary)
    run.manifest.metrics["summary"] = summary
    return run.finish()


def cmd_sweep(cfg: ExperimentConfig, out):
    run = _Run("sweep", cfg, out)
    p = cfg.neuron_params()
    dy = cfg.dynamics
    grid = [v * p.v_th for v in dy.sweep_intensities]
    res = intensity_sweep(cfg.neurons, grid, dy.sweep_T, p)
    rows = list(res.rows())
    run.csv("sweep.csv", ["model", "intensity", "spikes", "rate"], rows)
    fp_rows = []
    for kind in cfg.neurons:
        spikes, n_fp = false_positive_scenario(kind, dy.event_amp * p.v_th, dy.noise_amp * p.v_th, p, T=dy.sweep_T)
        fp_rows.append({"model": kind, "event_amp": dy.event_amp, "noise_amp": dy.noise_amp, "false_positives": n_fp, "spikes": " ".join(str(int(s)) for s in spikes)})
    run.csv("false_positive.csv", ["model", "event_amp", "noise_amp", "false_positives", "spikes"], fp_rows)
    run.manifest.metrics["sweep"] = rows
    run.manifest.metrics["false_positive"] = fp_rows
    return run.finish()


# ---------------------------------------------------------------- data / nets


def load_data(cfg: ExperimentConfig):
    """Return ``(train, test)`` pairs in their raw layout plus the network encoding.

    Moving-bar frames stay 5-D here so pixel noise can find spatial positions;
    :func:`net_input` flattens them.
    """
    d = cfg.dataset
    if d.kind == "idx":
        return load_idx_dataset(d.train_images, d.train_labels), load_idx_dataset(d.test_images, d.test_labels), "direct"
    kw = {"n_features": d.n_features, "low": d.low, "high": d.high} if d.kind == "two_rate" else {"size": d.size, "background": d.background}
    tr, te = train_test(d.kind, d.n_train, d.n_test, cfg.T, cfg.seed, **kw)
    return tr, te, "temporal"


def net_input(X: np.ndarray, dtype) -> np.ndarray:
    X = flatten_events(X) if X.ndim == 5 else X
    return X.astype(dtype, copy=False)


def _dtype(cfg: ExperimentConfig):
    return np.float32 if cfg.train.precision == "float32" else np.float64


def new_network(cfg: ExperimentConfig, kind: str, in_dim: int, n_classes: int, encoding: str):
    return build_network(
        in_dim, [int(h) for h in cfg.hidden], n_classes, kind, cfg.neuron_params(), cfg.T,
        seed=cfg.seed, readout_decay=cfg.readout_decay, encoding=encoding, dtype=_dtype(cfg),
    )


def train_options(cfg: ExperimentConfig) -> TrainOptions:
    t = cfg.train
    return TrainOptions(
        epochs=t.epochs, lr=t.lr, batch_size=t.batch_size, seed=cfg.seed, optimizer=t.optimizer,
        momentum=t.momentum, weight_decay=t.weight_decay, loss=t.loss, tet_lambda=t.tet_lambda,
    )


def _n_classes(y_train, y_test) -> int:
    return int(max(y_train.max(), y_test.max())) + 1


def trained_networks(cfg: ExperimentConfig, checkpoint=None):
    """One trained network per neuron kind: loaded from ``checkpoint`` or trained now.

    ``checkpoint`` may be a single ``.npz`` file or a train run directory holding
    ``checkpoint_<kind>.npz`` files.
    """
    (Xtr, ytr), (Xte, yte), encoding = load_data(cfg)
    dtype = _dtype(cfg)
    nets = {}
    if checkpoint is not None:
        ckpt = Path(checkpoint)
        files = [ckpt] if ckpt.is_file() else sorted(ckpt.glob("checkpoint_*.npz"))
        if not files:
            raise FileNotFoundError(f"no checkpoint found at {ckpt}")
        for f in files:
            net, _, _, _ = load_checkpoint(f)
            kinds = {b.kind for b in net.blocks}
            nets[kinds.pop() if len(kinds) == 1 else "mixed"] = net
    else:
        for kind in cfg.neurons:
            net = new_network(cfg, kind, net_input(Xtr[:1], dtype).shape[1], _n_classes(ytr, yte), encoding)
            train(net, net_input(Xtr, dtype), ytr, train_options(cfg))
            nets[kind] = net
    return nets, (Xtr, ytr), (Xte, yte)


# ---------------------------------------------------------------- train


def cmd_train(cfg: ExperimentConfig, out, resume=None):
    run = _Run("train", cfg, out)
    (Xtr, ytr), (Xte, yte), encoding = load_data(cfg)
    dtype = _dtype(cfg)
    Xtr_in, Xte_in = net_input(Xtr, dtype), net_input(Xte, dtype)
    opts = train_options(cfg)
    history_rows = []
    if resume is not None:
        net, seed, state, _ = load_checkpoint(resume)
        if seed != cfg.seed:
            raise ConfigError(f"checkpoint was trained with seed {seed}, config has {cfg.seed}")
        expected = set(make_optimizer(opts.optimizer, net.parameters(), opts.lr).state_dict())
        if state.optimizer and set(state.optimizer) != expected:
            raise ConfigError(f"checkpoint optimizer state {sorted(state.optimizer)} does not fit optimizer {opts.optimizer!r}")
        kinds = {b.kind for b in net.blocks}
        jobs = [(kinds.pop() if len(kinds) == 1 else "mixed", net, state)]
    else:
        jobs = [(k, new_network(cfg, k, Xtr_in.shape[1], _n_classes(ytr, yte), encoding), TrainState()) for k in cfg.neurons]
    for kind, net, state in jobs:
        state = train(net, Xtr_in, ytr, opts, state=state)
        save_checkpoint(run.dir / f"checkpoint_{kind}.npz", net, cfg.seed, state)
        run.manifest.outputs.append(f"checkpoint_{kind}.npz")
        for h in state.history:
            history_rows.append({"model": kind, **h})
        _, tape = forward(net, Xte_in, record=True)
        run.manifest.metrics[kind] = {
            "history": state.history,
            "epochs_completed": state.epoch,
            "train_accuracy": evaluate(net, Xtr_in, ytr),
            "test_accuracy": evaluate(net, Xte_in, yte),
        }
        run.manifest.firing_rates[kind] = firing_rate(tape.layer_spikes(), per_layer=True)
        log.info("%s: test accuracy %.4f", kind, run.manifest.metrics[kind]["test_accuracy"])
    run.csv("history.csv", ["model", "epoch", "loss", "accuracy"], history_rows)
    return run.finish()


# ---------------------------------------------------------------- evaluation


def _noisy(X: np.ndarray, spec) -> np.ndarray:
    if spec.kind == "pixel_event" and X.ndim != 5:
        raise ConfigError("pixel_event noise needs event frames (dataset kind moving_bar)")
    if spec.kind == "temporal_drop" and X.ndim == 2:
        raise ConfigError("temporal_drop needs inputs with a time axis")
    return spec.apply(X)


def cmd_robustness(cfg: ExperimentConfig, out, checkpoint=None):
    run = _Run("robustness", cfg, out)
    nets, _, (Xte, yte) = trained_networks(cfg, checkpoint)
    dtype = _dtype(cfg)
    specs = cfg.noise_specs()
    rows = []
    for kind, net in nets.items():
        clean = evaluate(net, net_input(Xte, dtype), yte)
        rows.append({"model": kind, "noise_kind": cfg.noise.kind, "level": 0.0, "accuracy": clean})
        for spec in specs:
            acc = evaluate(net, net_input(_noisy(Xte, spec), dtype), yte)
            rows.append({"model": kind, "noise_kind": spec.kind, "level": spec.level, "accuracy": acc})
    run.csv("robustness.csv", ["model", "noise_kind", "level", "accuracy"], rows)
    run.manifest.robustness = rows
    return run.finish()


def cmd_energy(cfg: ExperimentConfig, out, checkpoint=None):
    run = _Run("energy", cfg, out)
    nets, _, (Xte, yte) = trained_networks(cfg, checkpoint)
    X = net_input(Xte, _dtype(cfg))
    layer_rows, total_rows, rate_rows = [], [], []
    for kind, net in nets.items():
        _, tape = forward(net, X, record=True)
        report = energy_account(tape, kvlif_macs_per_step=cfg.kvlif_macs_per_step)
        for r in report.per_layer:
            layer_rows.append({"model": kind, **r})
        total_rows.append({"model": kind, "samples": len(X), "n_ac": report.n_ac, "n_mac": report.n_mac, "energy_uj": report.total_uj})
        rates = firing_rate(tape.layer_spikes(), per_layer=True)
        rate_rows.extend({"model": kind, "layer": l, "firing_rate": r} for l, r in enumerate(rates))
        run.manifest.energy[kind] = report.to_dict()
        run.manifest.firing_rates[kind] = rates
    run.csv("energy_layers.csv", ["model", "layer", "kind", "n_ac", "n_mac"], layer_rows)
    run.csv("energy.csv", ["model", "samples", "n_ac", "n_mac", "energy_uj"], total_rows)
    run.csv("firing_rates.csv", ["model", "layer", "firing_rate"], rate_rows)
    return run.finish()


def cmd_shortwindow(cfg: ExperimentConfig, out, checkpoint=None):
    run = _Run("shortwindow", cfg, out)
    nets, _, (Xte, yte) = trained_networks(cfg, checkpoint)
    X = net_input(Xte, _dtype(cfg))
    rows = []
    for kind, net in nets.items():
        for T in cfg.shortwindow_T:
            if T > net.T:
                raise ConfigError(f"inference T={T} exceeds training T={net.T}")
            rows.append({"model": kind, "T": int(T), "accuracy": evaluate(net, X, yte, T=int(T))})
    run.csv("shortwindow.csv", ["model", "T", "accuracy"], rows)
    run.manifest.metrics["shortwindow"] = rows
    return run.finish()


COMMANDS = {
    "dynamics": cmd_dynamics,
    "sweep": cmd_sweep,
    "train": cmd_train,
    "robustness": cmd_robustness,
    "energy": cmd_energy,
    "shortwindow": cmd_shortwindow,
}
