"""Partial products ``J_n W_n ... J_1 W_1`` as operators into l^p.

Each partial product is an ``m_n x d`` matrix; with a zero tail it becomes
an operator from R^d into l^p, so products of different depths can be
compared directly. ``extend_product`` grows a product one layer at a time
together with the accumulated bias term

    c_n = sum_i (J_n W_n ... J_{i+1} W_{i+1}) J_i b_i.

Also here: the support-stabilization of products of activation matrices and
embeddings, the finite series inequality and the tail bound
``2 * (sum_{i>q} a_i) * exp(sum_i a_i)`` that dominates the distance between
partial products past a cutoff ``q``.
"""

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .lp_linalg import (
    EXACT_P,
    ActivationMatrix,
    apply_activation,
    as_p,
    embedding,
    induced_norm,
    induced_norm_bounds,
    vector_pnorm,
)
from .network import PaddedVector

__all__ = [
    "ConvergenceReport",
    "PaddedOperator",
    "ProductState",
    "TailEstimate",
    "cutoff_is_stable",
    "declared_tail_bound",
    "detect_convergence",
    "extend_product",
    "max_stable_cutoff",
    "padded_distance",
    "padded_distance_bounds",
    "product_states",
    "series_inequality_lhs",
    "series_inequality_rhs",
    "stabilization_depth",
    "stabilized_activation_product",
    "start_product",
    "tail_bound",
]


@dataclass(frozen=True)
class PaddedOperator:
    """An ``m x d`` block read as an operator R^d -> l^p (zero rows below)."""

    active: np.ndarray

    @property
    def rows(self):
        return self.active.shape[0]

    @property
    def cols(self):
        return self.active.shape[1]

    def norm(self, p=math.inf):
        return induced_norm(self.active, p)

    def padded_to(self, m):
        if m < self.rows:
            raise ValueError(f"cannot pad {self.rows} rows down to {m}")
        out = np.zeros((m, self.cols))
        out[: self.rows] = self.active
        return out


@dataclass(frozen=True)
class ProductState:
    depth: int
    current: PaddedOperator
    bias_accum: PaddedVector
    widths: tuple


def start_product(d):
    """Depth-0 state: the identity on R^d and a zero bias term."""
    return ProductState(0, PaddedOperator(np.eye(d)), PaddedVector(np.zeros(d)), (int(d),))


def _apply_weight(W, X):
    # W is a dense matrix or a layer object with a matrix-free ``linear``
    if hasattr(W, "linear"):
        return W.linear(X)
    W = np.asarray(W, dtype=float)
    if W.shape[1] != X.shape[0]:
        raise ValueError(f"weight is {W.shape[0]}x{W.shape[1]}, product has {X.shape[0]} rows")
    return W @ X


def extend_product(state, J, W, b):
    """One more layer: ``A <- J W A`` and ``c <- J (W c + b)``."""
    A = _apply_weight(W, state.current.active)
    m = A.shape[0]
    if m < state.current.rows:
        raise ValueError("widths must not shrink")
    b = np.asarray(b, dtype=float).ravel()
    if J.width != m or b.size != m:
        raise ValueError(f"layer width {m}, activation width {J.width}, bias length {b.size}")
    A = apply_activation(J, A)
    c = apply_activation(J, _apply_weight(W, state.bias_accum.active) + b)
    return ProductState(
        state.depth + 1, PaddedOperator(A), PaddedVector(c), state.widths + (m,)
    )


def product_states(net, n, trace=None, keep=None):
    """Run ``extend_product`` through layers ``1..n`` of ``net``.

    ``trace`` supplies the activation matrices (default: full support every
    layer). Returns the states at the depths in ``keep`` (default: all).
    """
    keep = set(range(n + 1)) if keep is None else set(keep)
    state = start_product(net.d)
    out = [state] if 0 in keep else []
    for k in range(1, n + 1):
        layer = net.layer(k)
        m = net.width(k)
        J = ActivationMatrix.full(m) if trace is None else trace[k - 1]
        state = extend_product(state, J, layer, layer.bias)
        if k in keep:
            out.append(state)
    return out


def _block(x):
    if isinstance(x, (PaddedOperator, PaddedVector)):
        return x.active
    return np.asarray(x, dtype=float)


def _padded_difference(a, b):
    a, b = _block(a), _block(b)
    if a.shape[1:] != b.shape[1:]:
        raise ValueError(f"column mismatch: {a.shape} vs {b.shape}")
    m = max(a.shape[0], b.shape[0])
    diff = np.zeros((m,) + a.shape[1:])
    diff[: a.shape[0]] += a
    diff[: b.shape[0]] -= b
    return diff


def padded_distance(a, b, p=math.inf):
    """``|| I a - I b ||_p`` after zero-padding both to the larger row count.

    Works for operators (2-D blocks) and vectors (1-D). For operators and a
    ``p`` outside ``{1, 2, inf}`` the Riesz-Thorin upper bound is returned;
    see ``padded_distance_bounds`` for the full interval.
    """
    diff = _padded_difference(a, b)
    if diff.ndim == 1:
        return vector_pnorm(diff, p)
    return induced_norm(diff, p)


def padded_distance_bounds(a, b, p=math.inf):
    diff = _padded_difference(a, b)
    p = as_p(p)
    if diff.ndim == 1 or p in EXACT_P:
        v = padded_distance(a, b, p)
        return v, v
    return induced_norm_bounds(diff, p)


def stabilized_activation_product(widths, k, Js):
    """Collapse ``J_n I_{m_n, m_{n-1}} ... J_k I_{m_k, m_{k-1}}``.

    ``widths`` is ``(m_0, m_1, ..., m_n)``, ``k`` is 1-based and ``Js`` is
    ``[J_k, ..., J_n]``. The product equals ``I_{m_n, m_{k-1}} J'`` where the
    support of ``J'`` is the intersection of the supports, cut to the first
    ``m_{k-1}`` indices. Returns ``(J', product)``.
    """
    m_start = widths[k - 1]
    mask = np.ones(m_start, dtype=bool)
    for i, J in enumerate(Js, start=k):
        if J.width != widths[i]:
            raise ValueError(f"J_{i} has width {J.width}, expected {widths[i]}")
        mask &= J.mask[:m_start]
    J_prime = ActivationMatrix(mask)
    m_end = widths[k - 1 + len(Js)]
    return J_prime, embedding(m_end, m_start) * mask[None, :]


def stabilization_depth(widths, k, Js):
    """Last depth at which the support of ``J'`` shrank (``k - 1`` if never).

    Only the supplied horizon is visible, so this is the depth after which
    the support stayed fixed up to ``k - 1 + len(Js)``, not a certificate.
    """
    m_start = widths[k - 1]
    mask = np.ones(m_start, dtype=bool)
    last = k - 1
    count = m_start
    for i, J in enumerate(Js, start=k):
        mask &= J.mask[:m_start]
        c = int(mask.sum())
        if c != count:
            last, count = i, c
    return last


def cutoff_is_stable(widths, Js, q, n, n_prime):
    """Whether ``J'_k`` is the same at depths ``n`` and ``n_prime`` for every
    ``k <= q + 1``, so that the tail bound at cutoff ``q`` applies.

    ``Js`` is ``[J_1, ..., J_{n_prime}]``.
    """
    for k in range(1, q + 2):
        m_start = widths[k - 1]
        mask = np.ones(m_start, dtype=bool)
        for i in range(k, n + 1):
            mask &= Js[i - 1].mask[:m_start]
        before = mask.copy()
        for i in range(n + 1, n_prime + 1):
            mask &= Js[i - 1].mask[:m_start]
        if not np.array_equal(before, mask):
            return False
    return True


def max_stable_cutoff(widths, Js, n, n_prime):
    """Largest ``q < n`` with ``cutoff_is_stable(widths, Js, q, n, n_prime)``,
    or ``-1`` if even ``q = 0`` fails."""
    for k in range(1, n + 1):
        m_start = widths[k - 1]
        mask = np.ones(m_start, dtype=bool)
        for i in range(k, n + 1):
            mask &= Js[i - 1].mask[:m_start]
        count = int(mask.sum())
        for i in range(n + 1, n_prime + 1):
            mask &= Js[i - 1].mask[:m_start]
        if int(mask.sum()) != count:
            return k - 2
    return n - 1


def _check_nonneg(a):
    a = np.asarray(a, dtype=float).ravel()
    if np.any(a < 0) or not np.all(np.isfinite(a)):
        raise ValueError("sequence entries must be finite and nonnegative")
    return a


def series_inequality_lhs(a, q):
    """Sum of ``prod_{i in S} a_i`` over nonempty ``S`` with ``max S > q``.

    Equal to ``prod_{i<=n} (1 + a_i) - prod_{i<=q} (1 + a_i)``.
    """
    a = _check_nonneg(a)
    if not 0 <= q <= a.size:
        raise ValueError(f"cutoff q={q} outside [0, {a.size}]")
    head = math.prod(1.0 + x for x in a[:q])
    return head * (math.prod(1.0 + x for x in a[q:]) - 1.0)


def series_inequality_rhs(a, q):
    a = _check_nonneg(a)
    return float(a[q:].sum() * math.exp(a.sum()))


@dataclass(frozen=True)
class TailEstimate:
    q: int
    tail_sum: float
    total_sum: float
    bound: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "bound", 2.0 * self.tail_sum * math.exp(self.total_sum))


def tail_bound(p_norms, q, remainder=0.0):
    """Tail bound from norms ``a_1..a_N`` at cutoff ``q``.

    ``remainder`` is a bound on ``sum_{i > N} a_i``; it is added to both the
    tail and the total. With ``remainder=0`` the estimate covers partial
    products up to depth ``N``.
    """
    a = _check_nonneg(p_norms)
    if q < 0:
        raise ValueError(f"cutoff must be >= 0, got {q}")
    tail = float(a[q:].sum()) + remainder
    return TailEstimate(q, tail, float(a.sum()) + remainder)


def declared_tail_bound(decay, q):
    """Tail bound when every term obeys the declared summable majorant."""
    return TailEstimate(q, decay.tail(q), decay.total())


@dataclass
class ConvergenceReport:
    converged: bool
    depths: list
    operator_residuals: list
    bias_residuals: list
    limit_proxy: ProductState
    basis: str
    tail_bound: float = math.nan
    notes: list = field(default_factory=list)


def detect_convergence(states, p=math.inf, tol=1e-8, window=3, decay=None):
    """Finite-window Cauchy test on a sequence of product states.

    ``operator_residuals[i]`` and ``bias_residuals[i]`` are the padded
    distances between consecutive states ``i`` and ``i + 1``. The verdict
    asks every pair among the last ``window + 1`` states to be within
    ``tol``. A summable ``decay`` for the perturbation norms adds the
    analytic tail bound at the deepest cutoff; without one the result is
    empirical only.
    """
    states = list(states)
    if window < 1:
        raise ValueError("window must be >= 1")
    if len(states) < window + 1:
        raise ValueError(f"need at least {window + 1} states, got {len(states)}")
    depths = [s.depth for s in states]
    if any(b <= a for a, b in zip(depths, depths[1:])):
        raise ValueError(f"state depths must increase, got {depths}")

    op_res = [padded_distance(a.current, b.current, p) for a, b in zip(states, states[1:])]
    bias_res = [padded_distance(a.bias_accum, b.bias_accum, p) for a, b in zip(states, states[1:])]

    converged = True
    for a, b in itertools.combinations(states[-(window + 1):], 2):
        if (padded_distance(a.current, b.current, p) > tol
                or padded_distance(a.bias_accum, b.bias_accum, p) > tol):
            converged = False
            break

    notes = []
    bound = math.nan
    if decay is not None and decay.declared and decay.summable:
        basis = "tail_bound"
        bound = declared_tail_bound(decay, states[-(window + 1)].depth).bound
        notes.append("operator distances past the window start are bounded by tail_bound")
    else:
        basis = "empirical"
        notes.append("no summable majorant declared; verdict is empirical only")
    return ConvergenceReport(converged, depths, op_res, bias_res, states[-1], basis, bound, notes)
