"""Toy datasets and a small IDX-style array file reader/writer.

File layout (all integers little-endian)::

    byte 0-1   0x00 0x00
    byte 2     element type: 0x08 uint8, 0x09 int8, 0x0B int16, 0x0C int32,
               0x0D float32, 0x0E float64
    byte 3     number of dimensions N
    4*N bytes  uint32 size of each dimension
    rest       elements in C order, little-endian
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .encoding import encode_poisson

IDX_TYPES = {
    0x08: np.dtype("u1"),
    0x09: np.dtype("i1"),
    0x0B: np.dtype("<i2"),
    0x0C: np.dtype("<i4"),
    0x0D: np.dtype("<f4"),
    0x0E: np.dtype("<f8"),
}
_IDX_CODES = {dt.newbyteorder("<") if dt.itemsize > 1 else dt: code for code, dt in IDX_TYPES.items()}


def write_idx(path, array) -> Path:
    array = np.asarray(array)
    dt = array.dtype.newbyteorder("<") if array.dtype.itemsize > 1 else array.dtype
    code = _IDX_CODES.get(dt)
    if code is None:
        raise ValueError(f"dtype {array.dtype} cannot be stored in an idx file")
    if array.ndim > 255:
        raise ValueError("too many dimensions")
    header = bytes([0, 0, code, array.ndim]) + struct.pack(f"<{array.ndim}I", *array.shape)
    path = Path(path)
    path.write_bytes(header + np.ascontiguousarray(array, dtype=dt).tobytes())
    return path


def read_idx(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < 4 or raw[0] != 0 or raw[1] != 0:
        raise ValueError(f"{path}: not an idx file (bad magic)")
    code, ndim = raw[2], raw[3]
    if code not in IDX_TYPES:
        raise ValueError(f"{path}: unknown element type 0x{code:02X}")
    dims = struct.unpack_from(f"<{ndim}I", raw, 4)
    dt = IDX_TYPES[code]
    offset = 4 + 4 * ndim
    expected = int(np.prod(dims, dtype=np.int64)) * dt.itemsize
    if len(raw) - offset != expected:
        raise ValueError(f"{path}: payload is {len(raw) - offset} bytes, header implies {expected}")
    return np.frombuffer(raw, dtype=dt, offset=offset).reshape(dims).astype(dt.newbyteorder("="))


def load_idx_dataset(images_path, labels_path):
    """Images scaled to [0, 1] when stored as uint8, flattened to ``(n, features)``."""
    raw = read_idx(images_path)
    y = read_idx(labels_path).astype(np.int64).ravel()
    if len(raw) != len(y):
        raise ValueError(f"{len(raw)} images but {len(y)} labels")
    X = raw.reshape(len(raw), -1).astype(np.float64)
    if raw.dtype == np.uint8:
        X /= 255.0
    return X, y


def two_rate_dataset(n: int, n_features: int, T: int, low: float = 0.2, high: float = 0.6, seed: int = 0):
    """Two classes of Poisson spike trains differing only in firing probability.

    Returns ``X`` of shape ``(n, n_features, T)`` with entries in {0, 1} and
    balanced labels (class 1 is the ``high`` intensity).
    """
    rng = np.random.default_rng([seed, 0])
    y = rng.permutation(np.arange(n) % 2)
    intensity = np.where(y[:, None] == 1, high, low) * np.ones((n, n_features))
    X = encode_poisson(intensity, T, seed=int(rng.integers(2**31))).values
    return X, y


def moving_bar_dataset(n: int, size: int = 8, T: int = 8, background: float = 0.02, seed: int = 0):
    """Event frames of a bar sweeping in one of four directions.

    Classes: 0 rightwards, 1 leftwards, 2 downwards, 3 upwards. Frames are
    ``(n, 2, size, size, T)`` with an ON channel at the bar's new position and
    an OFF channel at the position it left, plus sparse background events.
    """
    rng = np.random.default_rng([seed, 1])
    y = rng.permutation(np.arange(n) % 4)
    X = np.zeros((n, 2, size, size, T))
    for i, label in enumerate(y):
        start = int(rng.integers(size))
        lo = int(rng.integers(0, size // 2))
        hi = int(rng.integers(lo + size // 4 + 1, size + 1))
        step = 1 if label in (0, 2) else -1
        for t in range(T):
            new = (start + step * t) % size
            old = (start + step * (t - 1)) % size
            if label in (0, 1):
                X[i, 0, lo:hi, new, t] = 1.0
                if t:
                    X[i, 1, lo:hi, old, t] = 1.0
            else:
                X[i, 0, new, lo:hi, t] = 1.0
                if t:
                    X[i, 1, old, lo:hi, t] = 1.0
    X = np.maximum(X, (rng.random(X.shape) < background).astype(np.float64))
    return X, y


def flatten_events(frames) -> np.ndarray:
    """``(n, C, H, W, T)`` -> ``(n, C*H*W, T)``."""
    frames = np.asarray(frames)
    return frames.reshape(frames.shape[0], -1, frames.shape[-1])


def train_test(kind: str, n_train: int, n_test: int, T: int, seed: int, **kw):
    """Build matching train and test splits from independent streams."""
    if kind == "two_rate":
        args = (kw.get("n_features", 4), T, kw.get("low", 0.2), kw.get("high", 0.6))
        make = two_rate_dataset
    elif kind == "moving_bar":
        args = (kw.get("size", 8), T, kw.get("background", 0.02))
        make = moving_bar_dataset
    else:
        raise ValueError(f"unknown dataset kind {kind!r}")
    return make(n_train, *args, seed=seed * 2 + 1), make(n_test, *args, seed=seed * 2 + 2)
