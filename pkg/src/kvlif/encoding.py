"""Input encoders and the three test-time corruption protocols.

Noise functions treat axis 0 as the batch axis and draw each sample from its
own stream ``default_rng([seed, index])``, so noising a batch in one call gives
the same result as noising its samples one at a time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

ENCODING_KINDS = ("direct", "poisson", "event")
NOISE_KINDS = ("gaussian_static", "pixel_event", "temporal_drop")


@dataclass(frozen=True)
class EncodedInput:
    values: np.ndarray  # (..., features, T)
    kind: str

    def __post_init__(self):
        if self.kind not in ENCODING_KINDS:
            raise ValueError(f"unknown encoding kind {self.kind!r}")

    @property
    def T(self) -> int:
        return self.values.shape[-1]


def encode_direct(frame, T: int) -> EncodedInput:
    """Present the same real-valued frame at each of ``T`` steps."""
    if T < 1:
        raise ValueError(f"T must be >= 1, got {T}")
    frame = np.asarray(frame, dtype=np.float64)
    if not np.isfinite(frame).all():
        raise ValueError("frame contains non-finite values")
    values = np.repeat(frame[..., None], T, axis=-1)
    return EncodedInput(values, "direct")


def encode_poisson(intensity, T: int, seed: int) -> EncodedInput:
    """Bernoulli spike trains: each entry fires with probability ``intensity`` (clamped to [0, 1])."""
    if T < 1:
        raise ValueError(f"T must be >= 1, got {T}")
    p = np.clip(np.asarray(intensity, dtype=np.float64), 0.0, 1.0)
    rng = np.random.default_rng(seed)
    draws = rng.random(p.shape + (T,))
    return EncodedInput((draws < p[..., None]).astype(np.float64), "poisson")


def exact_count(fraction: float, n: int) -> int:
    """``floor(fraction * n)``, tolerant of products such as 0.29 * 100 = 28.999..."""
    return min(n, int(math.floor(fraction * n + 1e-9)))


def _sample_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng([seed, index])


def inject_gaussian(frames, std: float, seed: int) -> np.ndarray:
    """Add zero-mean Gaussian noise of standard deviation ``std``; no clamping afterwards."""
    if std < 0:
        raise ValueError(f"noise std must be non-negative, got {std}")
    frames = np.asarray(frames, dtype=np.float64)
    if std == 0:
        return frames.copy()
    out = frames.copy()
    for b in range(frames.shape[0]):
        out[b] += _sample_rng(seed, b).normal(0.0, std, size=frames.shape[1:])
    return out


def inject_pixel_noise(event_frames, fraction: float, std: float, seed: int) -> np.ndarray:
    """Gaussian noise on ``floor(fraction * H * W)`` randomly chosen pixels of each sample.

    ``event_frames`` is ``(batch, channels, H, W, T)``; a chosen pixel is
    perturbed in every channel and at every step, all other entries are left
    untouched. With ``fraction=1`` the result equals :func:`inject_gaussian`.
    """
    if not 0.0 <= fraction <= 1.0:
        raise ValueError(f"pixel fraction must lie in [0, 1], got {fraction}")
    if std < 0:
        raise ValueError(f"noise std must be non-negative, got {std}")
    x = np.asarray(event_frames, dtype=np.float64)
    if x.ndim != 5:
        raise ValueError(f"event frames must be (batch, channels, H, W, T), got shape {x.shape}")
    out = x.copy()
    _, _, H, W, _ = x.shape
    n_pix = exact_count(fraction, H * W)
    if n_pix == 0 or std == 0:
        return out
    for b in range(x.shape[0]):
        rng = _sample_rng(seed, b)
        noise = rng.normal(0.0, std, size=x.shape[1:])
        mask = np.zeros(H * W, dtype=bool)
        mask[rng.permutation(H * W)[:n_pix]] = True
        mask = mask.reshape(1, H, W, 1)
        out[b] = np.where(mask, x[b] + noise, x[b])
    return out


def drop_timesteps(event_frames, rate: float, seed: int) -> np.ndarray:
    """Zero ``floor(rate * T)`` randomly chosen time slices (last axis) of each sample."""
    if not 0.0 <= rate <= 1.0:
        raise ValueError(f"drop rate must lie in [0, 1], got {rate}")
    x = np.asarray(event_frames, dtype=np.float64)
    out = x.copy()
    T = x.shape[-1]
    n_drop = exact_count(rate, T)
    if n_drop == 0:
        return out
    for b in range(x.shape[0]):
        idx = _sample_rng(seed, b).permutation(T)[:n_drop]
        out[b, ..., idx] = 0.0
    return out


@dataclass(frozen=True)
class NoiseSpec:
    kind: str
    level: float
    seed: int = 0
    std: float = 0.5  # per-pixel noise std, pixel_event only

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}; expected one of {NOISE_KINDS}")
        if self.kind == "gaussian_static" and self.level < 0:
            raise ValueError(f"noise std must be non-negative, got {self.level}")
        if self.kind != "gaussian_static" and not 0.0 <= self.level <= 1.0:
            raise ValueError(f"{self.kind} level must lie in [0, 1], got {self.level}")
        if self.std < 0:
            raise ValueError(f"noise std must be non-negative, got {self.std}")

    def apply(self, x) -> np.ndarray:
        if self.kind == "gaussian_static":
            return inject_gaussian(x, self.level, self.seed)
        if self.kind == "pixel_event":
            return inject_pixel_noise(x, self.level, self.std, self.seed)
        return drop_timesteps(x, self.level, self.seed)
