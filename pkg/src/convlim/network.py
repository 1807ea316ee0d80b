"""Deep ReLU networks with non-decreasing widths.

A network is an input dimension plus a sequence of layers, each a weight
(dense matrix, or a convolution mask) and a bias. Layers can also come from
a rule ``rule(n, m_prev) -> layer`` evaluated lazily and memoized, so a depth
sweep only ever builds each layer once.

On an activation domain the network is affine; ``affine_representation``
returns that affine map for a given activation trace.
"""

import json
import math
import threading
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .conv import DENSE_LIMIT, as_mask, convolve, toeplitz
from .lp_linalg import apply_activation, relu, relu_pattern, vector_pnorm

__all__ = [
    "AffineForm",
    "ConvLayer",
    "DenseLayer",
    "Network",
    "PaddedVector",
    "activation_trace",
    "affine_representation",
    "domain_membership",
    "forward",
    "load_network",
    "padded_forward",
    "save_network",
]


def _as_bias(b):
    b = np.array(b, dtype=float).ravel()
    if not np.all(np.isfinite(b)):
        raise ValueError("bias entries must be finite")
    return b


class DenseLayer:
    """``x -> W x + b`` with an explicit ``(m_out, m_in)`` matrix."""

    def __init__(self, weight, bias):
        weight = np.array(weight, dtype=float)
        if weight.ndim != 2:
            raise ValueError(f"dense weight must be 2-D, got shape {weight.shape}")
        bias = _as_bias(bias)
        if bias.size != weight.shape[0]:
            raise ValueError(f"bias length {bias.size} != weight rows {weight.shape[0]}")
        if weight.shape[0] < weight.shape[1]:
            raise ValueError(f"widths must not shrink: weight is {weight.shape[0]}x{weight.shape[1]}")
        self.weight = weight
        self.bias = bias

    def out_width(self, m_in):
        if m_in != self.weight.shape[1]:
            raise ValueError(f"layer expects width {self.weight.shape[1]}, got {m_in}")
        return self.weight.shape[0]

    def matrix(self, m_in):
        self.out_width(m_in)
        return self.weight

    def linear(self, X):
        return self.weight @ X

    def to_json(self):
        return {"dense": self.weight.tolist(), "bias": self.bias.tolist()}


class ConvLayer:
    """``x -> x * w + b`` for a filter mask ``w``; applied matrix-free."""

    def __init__(self, mask, bias):
        self.mask = as_mask(mask)
        self.bias = _as_bias(bias)

    @property
    def s(self):
        return self.mask.size - 1

    def out_width(self, m_in):
        m_out = m_in + self.s
        if self.bias.size != m_out:
            raise ValueError(f"bias length {self.bias.size} != layer width {m_out}")
        return m_out

    def matrix(self, m_in):
        self.out_width(m_in)
        if m_in > DENSE_LIMIT:
            raise ValueError(f"width {m_in} is above DENSE_LIMIT={DENSE_LIMIT}; use linear()")
        return toeplitz(self.mask, m_in)

    def linear(self, X):
        return convolve(X, self.mask)

    def to_json(self):
        return {"mask": self.mask.tolist(), "bias": self.bias.tolist()}


def _layer_from_json(obj):
    if "mask" in obj:
        return ConvLayer(obj["mask"], obj["bias"])
    if "dense" in obj:
        return DenseLayer(obj["dense"], obj["bias"])
    raise ValueError(f"layer needs a 'mask' or 'dense' key, got {sorted(obj)}")


class Network:
    """Input dimension ``d`` plus layers 1, 2, ... (1-based).

    Pass either a finite ``layers`` sequence or a ``rule(n, m_prev)``; with a
    rule, ``horizon`` optionally caps the depth that may be requested.
    """

    def __init__(self, d, layers=None, rule=None, horizon=None):
        if d < 1:
            raise ValueError(f"input dimension must be >= 1, got {d}")
        if (layers is None) == (rule is None):
            raise ValueError("give exactly one of layers= or rule=")
        self.d = int(d)
        self._rule = rule
        self._layers = []
        self._widths = [self.d]
        self._lock = threading.Lock()
        if layers is not None:
            for layer in layers:
                self._push(layer)
            self.horizon = len(self._layers)
        else:
            self.horizon = math.inf if horizon is None else int(horizon)

    def _push(self, layer):
        m_out = layer.out_width(self._widths[-1])
        self._layers.append(layer)
        self._widths.append(m_out)

    def expand(self, n):
        """Make sure layers ``1..n`` exist."""
        if n > self.horizon:
            raise ValueError(f"depth {n} exceeds the network's {self.horizon} layers")
        if n <= len(self._layers):
            return
        with self._lock:
            while len(self._layers) < n:
                k = len(self._layers) + 1
                self._push(self._rule(k, self._widths[-1]))

    def layer(self, n):
        if n < 1:
            raise ValueError(f"layers are numbered from 1, got {n}")
        self.expand(n)
        return self._layers[n - 1]

    def width(self, n):
        self.expand(n)
        return self._widths[n]

    def widths(self, n):
        self.expand(n)
        return tuple(self._widths[: n + 1])

    def weight(self, n):
        return self.layer(n).matrix(self._widths[n - 1])

    def bias(self, n):
        return self.layer(n).bias

    def pre_activation(self, n, X):
        """``W_n X + b_n`` for a vector or a batch of column vectors."""
        layer = self.layer(n)
        b = layer.bias if X.ndim == 1 else layer.bias[:, None]
        return layer.linear(X) + b

    def to_json(self):
        return {"d": self.d, "layers": [layer.to_json() for layer in self._layers]}


def _check_input(net, x):
    x = np.asarray(x, dtype=float)
    if x.shape[0] != net.d:
        raise ValueError(f"input has length {x.shape[0]}, network expects {net.d}")
    return x


def forward(net, x, n):
    """Hidden state after ``n`` layers. ``x`` may be ``(d,)`` or ``(d, batch)``."""
    x = _check_input(net, x)
    net.expand(n)
    for k in range(1, n + 1):
        x = relu(net.pre_activation(k, x))
    return x


@dataclass(frozen=True)
class PaddedVector:
    """A finite vector read as an element of l^p with an implicit zero tail."""

    active: np.ndarray

    def __len__(self):
        return self.active.shape[0]

    def norm(self, p=math.inf):
        return vector_pnorm(self.active, p)

    def padded_to(self, m):
        if m < len(self):
            raise ValueError(f"cannot pad a length-{len(self)} vector to {m}")
        out = np.zeros((m,) + self.active.shape[1:])
        out[: len(self)] = self.active
        return out

    def distance(self, other, p=math.inf):
        m = max(len(self), len(other))
        return vector_pnorm(self.padded_to(m) - other.padded_to(m), p)


def padded_forward(net, x, n):
    return PaddedVector(forward(net, x, n))


def activation_trace(net, x, n):
    """Activation matrices ``[J_1, ..., J_n]`` met by ``x`` on its forward pass."""
    x = _check_input(net, x)
    if x.ndim != 1:
        raise ValueError("activation_trace takes a single input vector")
    trace = []
    for k in range(1, n + 1):
        z = net.pre_activation(k, x)
        J = relu_pattern(z)
        trace.append(J)
        x = apply_activation(J, z)
    return trace


@dataclass(frozen=True)
class AffineForm:
    linear: np.ndarray
    offset: np.ndarray

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            return self.linear @ x + self.offset
        return self.linear @ x + self.offset[:, None]


def affine_representation(net, trace, n):
    """Affine map equal to the depth-``n`` network on the trace's activation domain.

    ``linear = J_n W_n ... J_1 W_1`` and
    ``offset = sum_i (J_n W_n ... J_{i+1} W_{i+1}) J_i b_i``, accumulated by
    the recursion ``A <- J W A``, ``c <- J (W c + b)``.
    """
    if len(trace) < n:
        raise ValueError(f"trace has {len(trace)} layers, need {n}")
    A = np.eye(net.d)
    c = np.zeros(net.d)
    for k in range(1, n + 1):
        J = trace[k - 1]
        W = net.weight(k)
        if J.width != W.shape[0]:
            raise ValueError(f"layer {k}: activation width {J.width} != layer width {W.shape[0]}")
        A = apply_activation(J, W @ A)
        c = apply_activation(J, W @ c + net.bias(k))
    return AffineForm(A, c)


def domain_membership(net, trace, x, n):
    """Whether ``x`` lies in the activation domain indexed by ``trace[:n]``.

    On-support units need a strictly positive pre-activation, off-support
    units a non-positive one.
    """
    x = _check_input(net, x)
    for k in range(1, n + 1):
        z = net.pre_activation(k, x)
        J = trace[k - 1]
        if J.width != z.shape[0]:
            return False
        if not np.array_equal(z > 0.0, J.mask):
            return False
        x = apply_activation(J, z)
    return True


def load_network(path):
    obj = json.loads(Path(path).read_text())
    return Network(int(obj["d"]), layers=[_layer_from_json(layer) for layer in obj["layers"]])


def save_network(path, net):
    Path(path).write_text(json.dumps(net.to_json()) + "\n")
