"""Spiking-neuron laboratory: LIF baselines, the potassium-regulated KvLIF neuron,
a BPTT training engine, robustness protocols and energy accounting."""

__version__ = "0.1.0"
