"""Soft-reset limitation formulas, response sweeps, firing rates and SOP energy."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from .neurons import NEURON_KINDS, NeuronParams, run_sequence

E_AC_PJ = 0.9
E_MAC_PJ = 4.6


def min_input_soft(delta_prev, p: NeuronParams):
    """Smallest input that makes a soft-reset neuron fire again given residual ``delta_prev``.

    Works with any numeric type, including :class:`fractions.Fraction` for exact
    comparisons.
    """
    if delta_prev < 0:
        raise ValueError(f"residual must be non-negative, got {delta_prev}")
    if isinstance(delta_prev, Fraction):
        return Fraction(p.v_th) - Fraction(p.lam) * delta_prev
    return p.v_th - p.lam * delta_prev


def residual_closed_form(delta_i, lam, T: int):
    """Residual after ``T`` consecutive spikes under constant overload ``delta_i``.

    Geometric sum ``delta_i * (1 - lam**T) / (1 - lam)``.
    """
    if T < 1:
        raise ValueError(f"T must be >= 1, got {T}")
    return delta_i * (1 - lam**T) / (1 - lam)


def residual_recursion(delta_i, lam, T: int):
    """Same quantity by iterating ``delta <- lam * delta + delta_i`` from zero."""
    delta = 0 * delta_i
    for _ in range(T):
        delta = lam * delta + delta_i
    return delta


@dataclass
class SweepResult:
    intensities: np.ndarray
    rates: dict[str, np.ndarray]
    counts: dict[str, np.ndarray]
    T: int

    def rows(self):
        for j, level in enumerate(self.intensities):
            for kind in self.rates:
                yield {"model": kind, "intensity": float(level), "spikes": int(self.counts[kind][j]), "rate": float(self.rates[kind][j])}


def intensity_sweep(models, intensities, T: int, p: NeuronParams) -> SweepResult:
    """Drive each model from rest with a constant current per intensity for ``T`` steps."""
    grid = np.asarray(intensities, dtype=np.float64)
    if (grid < 0).any():
        raise ValueError("intensities must be non-negative")
    if grid.size > 1 and not (np.diff(grid) > 0).all():
        raise ValueError("intensity grid must be strictly increasing")
    drive = np.repeat(grid[None, :], T, axis=0)
    rates, counts = {}, {}
    for kind in models:
        spikes = run_sequence(kind, drive, p).spike
        counts[kind] = spikes.sum(axis=0).astype(np.int64)
        rates[kind] = spikes.mean(axis=0)
    return SweepResult(grid, rates, counts, T)


def false_positive_scenario(kind: str, event_amp: float, noise_amp: float, p: NeuronParams, T: int = 8):
    """Input ``[event, noise, 0, ...]``; any spike after step 0 is a false positive.

    Returns ``(spikes, n_false_positives)``.
    """
    if not noise_amp < p.v_th <= event_amp:
        raise ValueError("need noise_amp < v_th <= event_amp")
    if T < 2:
        raise ValueError("T must be >= 2")
    drive = np.zeros(T)
    drive[0], drive[1] = event_amp, noise_amp
    spikes = run_sequence(kind, drive, p).spike
    return spikes, int(spikes[1:].sum())


def firing_rate(spikes, per_layer: bool = False):
    """Spike count divided by neurons x time steps x batch.

    ``spikes`` is one binary array or a list of per-layer arrays. With
    ``per_layer`` a list of rates is returned, otherwise one pooled rate.
    """
    layers = spikes if isinstance(spikes, (list, tuple)) else [spikes]
    arrays = [np.asarray(s) for s in layers]
    for a in arrays:
        if not np.isin(a, (0, 1)).all():
            raise ValueError("spike tensor must be binary")
    if per_layer:
        return [float(a.mean()) if a.size else 0.0 for a in arrays]
    total = sum(a.size for a in arrays)
    return float(sum(a.sum() for a in arrays) / total) if total else 0.0


@dataclass
class EnergyReport:
    n_ac: int
    n_mac: int
    e_ac: float = E_AC_PJ
    e_mac: float = E_MAC_PJ
    per_layer: list = field(default_factory=list)

    @property
    def total_pj(self) -> float:
        return self.e_ac * self.n_ac + self.e_mac * self.n_mac

    @property
    def total_uj(self) -> float:
        return self.total_pj / 1e6

    def __add__(self, other: "EnergyReport") -> "EnergyReport":
        if (self.e_ac, self.e_mac) != (other.e_ac, other.e_mac):
            raise ValueError("cannot add reports with different unit energies")
        return EnergyReport(self.n_ac + other.n_ac, self.n_mac + other.n_mac, self.e_ac, self.e_mac)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["total_uj"] = self.total_uj
        return d


def _is_binary(a: np.ndarray) -> bool:
    return bool(np.isin(a, (0, 1)).all())


def count_operations(tape, kvlif_macs_per_step: int = 4) -> list[dict]:
    """Per-layer AC/MAC counts for one recorded forward pass, summed over the batch.

    A layer fed with binary spikes costs one accumulate per incoming spike and
    per output neuron. A layer fed with real values (e.g. a direct-encoded
    image, or a noisy input) costs ``in * out`` multiply-accumulates per sample
    and per step. KvLIF neurons add ``kvlif_macs_per_step`` MACs per neuron per
    step for the potassium update (gate product, beta*U, alpha*K, sigmoid).
    """
    if tape is None or not tape.layers and not tape.readout_inputs:
        raise ValueError("missing spike record: run forward(..., record=True)")
    net = tape.net
    rows = []
    inputs_per_layer = [rec.inputs for rec in tape.layers] + [tape.readout_inputs]
    kinds = [b.kind for b in net.blocks] + ["readout"]
    for l, (layer, inputs, kind) in enumerate(zip(net.layers, inputs_per_layer, kinds)):
        stacked = np.stack(inputs, axis=-1)  # (batch, in, T)
        batch = stacked.shape[0]
        steps = stacked.shape[-1]
        if _is_binary(stacked):
            n_ac = int(stacked.sum()) * layer.out_dim
            n_mac = 0
        else:
            n_ac = 0
            n_mac = layer.in_dim * layer.out_dim * batch * steps
        if kind == "kvlif":
            n_mac += kvlif_macs_per_step * layer.out_dim * batch * steps
        rows.append({"layer": l, "kind": kind, "n_ac": n_ac, "n_mac": n_mac})
    return rows


def energy_account(tape, kvlif_macs_per_step: int = 4, e_ac: float = E_AC_PJ, e_mac: float = E_MAC_PJ) -> EnergyReport:
    rows = count_operations(tape, kvlif_macs_per_step)
    return EnergyReport(
        n_ac=sum(r["n_ac"] for r in rows),
        n_mac=sum(r["n_mac"] for r in rows),
        e_ac=e_ac,
        e_mac=e_mac,
        per_layer=rows,
    )


def saturation_intensity(p: NeuronParams, kind: str) -> float:
    """Constant input above which a neuron fires at every step, from any reachable state.

    For KvLIF a post-spike potential is ``u_pre - v_th - sigmoid(k) > -1`` and
    the shunt gate never drops below ``1 - gamma``, so by induction every step
    fires once ``I * (1 - gamma) >= v_th + lam``. Both LIF variants saturate at
    ``v_th``.
    """
    if kind in ("lif-s", "lif-h"):
        return p.v_th
    if kind == "kvlif":
        return (p.v_th + p.lam) / (1.0 - p.gamma) if p.gamma < 1 else float("inf")
    raise ValueError(f"unknown neuron kind {kind!r}; expected one of {NEURON_KINDS}")
