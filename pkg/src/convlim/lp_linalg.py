"""Vectors, matrices and l^p norms.

Exponents are plain floats in ``[1, inf]``; ``"inf"`` strings are accepted
wherever a ``p`` is taken. Exact induced norms exist for ``p`` in
``{1, 2, inf}``; every other ``p`` only gets an interval.

Activation matrices are 0/1 diagonal matrices. They are stored as a boolean
mask (a bitset) and only materialized on request.
"""

import math

import numpy as np

__all__ = [
    "ActivationMatrix",
    "apply_activation",
    "as_p",
    "embedding",
    "induced_norm",
    "induced_norm_bounds",
    "induced_norm_exact",
    "relu",
    "relu_pattern",
    "spectral_norm",
    "vector_pnorm",
]

EXACT_P = (1.0, 2.0, math.inf)


def as_p(p):
    """Normalize an exponent to a float in ``[1, inf]``."""
    if isinstance(p, str):
        key = p.strip().lower()
        p = math.inf if key in ("inf", "infinity", "oo") else float(key)
    p = float(p)
    if math.isnan(p) or p < 1.0:
        raise ValueError(f"p must satisfy p >= 1, got {p!r}")
    return p


def vector_pnorm(v, p=math.inf):
    v = np.asarray(v, dtype=float).ravel()
    p = as_p(p)
    if v.size == 0:
        return 0.0
    a = np.abs(v)
    if p == math.inf:
        return float(a.max())
    if p == 1.0:
        return float(a.sum())
    if p == 2.0:
        return float(np.sqrt(np.dot(a, a)))
    # scale first so large entries don't overflow a**p
    top = a.max()
    if top == 0.0:
        return 0.0
    return float(top * np.sum((a / top) ** p) ** (1.0 / p))


def _as_matrix(A):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {A.shape}")
    return A


def spectral_norm(A, rtol=1e-12, max_iter=10_000):
    """Largest singular value by power iteration on the Gram matrix.

    Starts from the normalized all-ones vector and again from a fixed
    alternating vector; the larger Rayleigh quotient wins, which guards
    against a start that is orthogonal to the top singular vector. If the
    iteration cap is hit, falls back to LAPACK.
    """
    A = _as_matrix(A)
    if A.size == 0 or not np.any(A):
        return 0.0
    G = A.T @ A if A.shape[1] <= A.shape[0] else A @ A.T
    n = G.shape[0]
    starts = [np.ones(n), np.cos(np.arange(n) * 2.399963229728653) + 0.5]
    best = 0.0
    for v in starts:
        lam = _power_iterate(G, v, rtol, max_iter)
        if lam is None:
            return float(np.linalg.norm(A, 2))
        best = max(best, lam)
    return math.sqrt(best)


def _power_iterate(G, v, rtol, max_iter):
    nv = np.linalg.norm(v)
    if nv == 0.0:
        return 0.0
    v = v / nv
    lam = 0.0
    prev_step = None
    for _ in range(max_iter):
        w = G @ v
        lam_new = float(v @ w)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return max(lam, 0.0)
        v = w / nw
        step = abs(lam_new - lam)
        lam = lam_new
        if step == 0.0:
            return lam
        if prev_step is not None and prev_step > 0.0:
            # geometric tail estimate of the remaining error
            rho = min(step / prev_step, 0.999999)
            if step * rho / (1.0 - rho) <= rtol * lam:
                return lam
        prev_step = step
    return None


def induced_norm_exact(A, p):
    """Induced matrix norm for ``p`` in ``{1, 2, inf}``."""
    A = _as_matrix(A)
    p = as_p(p)
    if p not in EXACT_P:
        raise ValueError(f"no exact induced norm for p={p}; use induced_norm_bounds")
    if A.size == 0:
        return 0.0
    if p == 1.0:
        return float(np.abs(A).sum(axis=0).max())
    if p == math.inf:
        return float(np.abs(A).sum(axis=1).max())
    return spectral_norm(A)


def induced_norm_bounds(A, p, samples=64, seed=0):
    """Return ``(lower, upper)`` bracketing the induced p-norm of ``A``.

    ``upper`` is the Riesz-Thorin interpolation bound
    ``||A||_1 ** (1/p) * ||A||_inf ** (1 - 1/p)``. ``lower`` is the best ratio
    ``||Ax||_p / ||x||_p`` seen over the unit vectors, the all-ones vector and
    ``samples`` seeded Gaussian vectors.
    """
    A = _as_matrix(A)
    p = as_p(p)
    if A.size == 0:
        return 0.0, 0.0
    n1 = induced_norm_exact(A, 1)
    ninf = induced_norm_exact(A, math.inf)
    if p == math.inf:
        upper = ninf
    else:
        upper = n1 ** (1.0 / p) * ninf ** (1.0 - 1.0 / p)

    rng = np.random.default_rng(seed)
    cols = A.shape[1]
    probes = np.concatenate(
        [np.eye(cols), np.ones((cols, 1)), rng.standard_normal((cols, samples))],
        axis=1,
    )
    lower = 0.0
    for x in probes.T:
        nx = vector_pnorm(x, p)
        if nx > 0.0:
            lower = max(lower, vector_pnorm(A @ x, p) / nx)
    return min(lower, upper), upper


def induced_norm(A, p):
    """Exact norm where available, otherwise the Riesz-Thorin upper bound."""
    p = as_p(p)
    if p in EXACT_P:
        return induced_norm_exact(A, p)
    return induced_norm_bounds(A, p)[1]


def embedding(rows, cols):
    """Materialize the embedding ``[I_cols; 0]`` of shape ``(rows, cols)``."""
    if rows < cols or cols < 1:
        raise ValueError(f"embedding needs rows >= cols >= 1, got {rows}x{cols}")
    return np.eye(rows, cols)


class ActivationMatrix:
    """A 0/1 diagonal matrix of a given width, stored by its support.

    Indices are 0-based. Instances are immutable and hashable.
    """

    __slots__ = ("_mask",)

    def __init__(self, mask):
        mask = np.array(mask, dtype=bool).ravel()
        mask.setflags(write=False)
        self._mask = mask

    @classmethod
    def from_support(cls, width, support):
        mask = np.zeros(int(width), dtype=bool)
        idx = np.asarray(sorted(set(support)), dtype=int)
        if idx.size and (idx[0] < 0 or idx[-1] >= width):
            raise ValueError(f"support {sorted(set(support))} not inside range({width})")
        mask[idx] = True
        return cls(mask)

    @classmethod
    def full(cls, width):
        return cls(np.ones(int(width), dtype=bool))

    @classmethod
    def empty(cls, width):
        return cls(np.zeros(int(width), dtype=bool))

    @property
    def width(self):
        return self._mask.size

    @property
    def mask(self):
        return self._mask

    @property
    def support(self):
        return tuple(int(i) for i in np.flatnonzero(self._mask))

    def materialize(self):
        return np.diag(self._mask.astype(float))

    def __len__(self):
        return self.width

    def __eq__(self, other):
        if not isinstance(other, ActivationMatrix):
            return NotImplemented
        return self.width == other.width and bool(np.array_equal(self._mask, other._mask))

    def __hash__(self):
        return hash((self.width, self._mask.tobytes()))

    def __repr__(self):
        return f"ActivationMatrix(width={self.width}, support={set(self.support)})"


def relu(v):
    v = np.asarray(v, dtype=float)
    return np.where(v > 0.0, v, 0.0)


def relu_pattern(v):
    """Activation matrix of ``v``: index ``j`` is on iff ``v[j] > 0`` (no tolerance)."""
    return ActivationMatrix(np.asarray(v, dtype=float) > 0.0)


def apply_activation(J, v):
    v = np.asarray(v, dtype=float)
    if v.shape[0] != J.width:
        raise ValueError(f"activation width {J.width} does not match vector length {v.shape[0]}")
    mask = J.mask if v.ndim == 1 else J.mask[:, None]
    return np.where(mask, v, 0.0)
