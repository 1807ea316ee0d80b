"""One-dimensional full convolution and its Toeplitz matrix form.

A mask ``w = (w_0, ..., w_s)`` maps ``x`` of length ``m`` to ``x * w`` of
length ``m + s`` with ``y_i = sum_j w_j x_{i-j}``. Stacking these layers
gives widths ``m_n = m_{n-1} + s_n``.
"""

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .lp_linalg import embedding

__all__ = [
    "DENSE_LIMIT",
    "ShiftDecomposition",
    "ZeroCenterError",
    "as_mask",
    "cnn_weight_matrix",
    "cnn_widths",
    "convolve",
    "load_masks",
    "mask_ratio_sum_term",
    "save_masks",
    "shift_decompose",
    "toeplitz",
]

# Toeplitz matrices wider than this are applied through ``convolve`` instead.
DENSE_LIMIT = 4096


class ZeroCenterError(ValueError):
    """A mask with ``w_0 = 0`` was passed where the center must be nonzero."""


def as_mask(w):
    w = np.array(w, dtype=float).ravel()
    if w.size == 0:
        raise ValueError("a filter mask needs at least one coefficient")
    if not np.all(np.isfinite(w)):
        raise ValueError("filter mask entries must be finite")
    return w


def convolve(x, w):
    """Full convolution along axis 0.

    ``x`` may be a vector of length ``m`` or an ``(m, k)`` array whose columns
    are convolved independently. Runs in ``O(m * s)``; terms are accumulated
    in increasing mask index, the same order as the defining sum.
    """
    w = as_mask(w)
    x = np.asarray(x, dtype=float)
    m = x.shape[0]
    if m < 1:
        raise ValueError("cannot convolve an empty vector")
    y = np.zeros((m + w.size - 1,) + x.shape[1:])
    for j, wj in enumerate(w):
        y[j:j + m] += wj * x
    return y


def toeplitz(w, m):
    """The ``(m+s) x m`` lower-banded matrix with ``T[i, j] = w[i - j]``."""
    w = as_mask(w)
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    T = np.zeros((m + w.size - 1, m))
    cols = np.arange(m)
    for j, wj in enumerate(w):
        T[cols + j, cols] = wj
    return T


def cnn_weight_matrix(w, m_prev):
    """Weight matrix of a convolutional layer acting on width ``m_prev``."""
    return toeplitz(w, m_prev)


def cnn_widths(d, s):
    """Width schedule ``(m_0=d, m_1, ...)`` for mask tail lengths ``s``."""
    if d < 1:
        raise ValueError(f"input dimension must be >= 1, got {d}")
    widths = [int(d)]
    for sn in s:
        if sn < 0:
            raise ValueError(f"mask tail lengths must be >= 0, got {sn}")
        widths.append(widths[-1] + int(sn))
    return tuple(widths)


@dataclass(frozen=True)
class ShiftDecomposition:
    """``W / scale = I_{rows, cols} + perturbation``."""

    rows: int
    cols: int
    perturbation: np.ndarray
    scale: float = 1.0

    def embedding(self):
        return embedding(self.rows, self.cols)

    def reconstruct(self):
        return self.scale * (self.embedding() + self.perturbation)


def shift_decompose(W, normalize_by=None):
    W = np.asarray(W, dtype=float)
    rows, cols = W.shape
    if rows < cols:
        raise ValueError(f"weight matrix must have rows >= cols, got {rows}x{cols}")
    scale = 1.0 if normalize_by is None else float(normalize_by)
    if scale == 0.0:
        raise ZeroCenterError("cannot normalize by zero")
    P = W / scale if normalize_by is not None else W.copy()
    P -= embedding(rows, cols)
    return ShiftDecomposition(rows, cols, P, scale)


def mask_ratio_sum_term(w):
    """``sum_{j>=1} |w_j| / |w_0|``, an upper bound on every p-norm of the
    normalized perturbation of the layer's weight matrix."""
    w = as_mask(w)
    if w[0] == 0.0:
        raise ZeroCenterError("mask center w_0 is zero")
    return float(np.abs(w[1:]).sum() / abs(w[0]))


def load_masks(path):
    """Read a mask sequence: a JSON array whose entry ``n-1`` is layer ``n``'s mask."""
    data = json.loads(Path(path).read_text())
    if not isinstance(data, list) or not all(isinstance(m, list) for m in data):
        raise ValueError(f"{path}: expected a JSON array of arrays of numbers")
    return [as_mask(m) for m in data]


def save_masks(path, masks):
    # json writes floats with repr, which round-trips exactly
    Path(path).write_text(json.dumps([[float(c) for c in as_mask(m)] for m in masks]) + "\n")
