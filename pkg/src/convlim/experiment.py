"""Depth-growth experiments.

An experiment builds a family's network up to the deepest checkpoint and,
for every checkpoint ``n``, measures how far the zero-padded output at
depth ``n`` is from the output at the deepest checkpoint (the reference),
both as a sup over a grid and as a Monte-Carlo ``L^q`` estimate. It also
records the distance of the full-support operator and bias terms and the
declared tail bound. Results go to a CSV with a fixed header.
"""

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .decay import DecayDeclaration
from .families import family_decays, family_network
from .lp_linalg import as_p
from .products import declared_tail_bound, padded_distance, product_states

__all__ = [
    "CSV_HEADER",
    "ExperimentConfig",
    "ResidualRow",
    "columnwise_pnorm",
    "evaluation_points",
    "lq_distance_estimate",
    "run_depth_experiment",
    "write_rows",
]

CSV_HEADER = ("depth", "width", "grid_sup_residual", "lq_estimate",
              "operator_residual", "bias_residual", "tail_bound")
DEFAULT_RESOURCE_CAP = 10**7
_CHUNK = 256


@dataclass
class ExperimentConfig:
    d: int
    family: dict
    checkpoints: list
    p: float = math.inf
    q: float = 2.0
    grid: int = 33
    samples: int = 1000
    seed: int = 0
    tolerance: float = 1e-6
    output: str = "residuals.csv"
    resource_cap: int = DEFAULT_RESOURCE_CAP
    decay: str = None

    def __post_init__(self):
        self.p = as_p(self.p)
        self.q = as_p(self.q)
        self.checkpoints = [int(n) for n in self.checkpoints]
        if self.d < 1:
            raise ValueError(f"d must be >= 1, got {self.d}")
        if not self.checkpoints or self.checkpoints[0] < 1:
            raise ValueError("checkpoints must be a nonempty list of depths >= 1")
        if any(b <= a for a, b in zip(self.checkpoints, self.checkpoints[1:])):
            raise ValueError(f"checkpoints must be strictly increasing, got {self.checkpoints}")
        if self.grid < 1 or self.samples < 1:
            raise ValueError("grid resolution and sample count must be >= 1")
        if not self.tolerance > 0:
            raise ValueError(f"tolerance must be > 0, got {self.tolerance}")

    @classmethod
    def from_dict(cls, obj):
        known = set(cls.__dataclass_fields__)
        extra = set(obj) - known
        if extra:
            raise ValueError(f"unknown config keys: {sorted(extra)}")
        return cls(**obj)

    @classmethod
    def from_json(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text()))

    def perturbation_decay(self):
        if self.decay is not None:
            return DecayDeclaration.parse(self.decay)
        for dec in family_decays(self.family):
            if dec.applies_to == "perturbation_norms":
                return dec
        return None


@dataclass
class ResidualRow:
    depth: int
    width: int
    grid_sup_residual: float
    lq_estimate: float
    operator_residual: float
    bias_residual: float
    tail_bound: float

    def cells(self):
        return [str(self.depth), str(self.width)] + [
            f"{getattr(self, k):.15g}" for k in CSV_HEADER[2:]
        ]


def columnwise_pnorm(X, p):
    p = as_p(p)
    A = np.abs(X)
    if A.shape[0] == 0:
        return np.zeros(A.shape[1])
    if p == math.inf:
        return A.max(axis=0)
    if p == 1.0:
        return A.sum(axis=0)
    return np.sum(A**p, axis=0) ** (1.0 / p)


def evaluation_points(d, grid, samples, seed):
    """Tensor grid on ``[0,1]^d`` for ``d <= 2``, seeded uniform samples otherwise."""
    if d <= 2:
        axis = np.linspace(0.0, 1.0, grid) if grid > 1 else np.array([0.5])
        mesh = np.meshgrid(*([axis] * d), indexing="ij")
        return np.stack([g.ravel() for g in mesh])
    return np.random.default_rng(seed).random((d, samples))


def _threads():
    try:
        return max(1, int(os.environ.get("CONVLIM_THREADS", os.cpu_count() or 1)))
    except ValueError:
        return 1


def _padded_residuals(net, X, depths, ref, p):
    """Per-point ``||N~_n(x) - N~_ref(x)||_p`` for each depth in ``depths``."""
    outputs = {}
    H = X
    for k in range(1, ref + 1):
        H = net.pre_activation(k, H)
        H = np.where(H > 0.0, H, 0.0)
        if k in depths:
            outputs[k] = H
    top = outputs[ref]
    res = {}
    for n in depths:
        diff = top.copy()
        diff[: outputs[n].shape[0]] -= outputs[n]
        res[n] = columnwise_pnorm(diff, p)
    return res


def _residuals_over(net, X, depths, ref, p):
    depths = set(depths) | {ref}
    net.expand(ref)
    chunks = [X[:, i:i + _CHUNK] for i in range(0, X.shape[1], _CHUNK)]
    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        parts = list(pool.map(lambda C: _padded_residuals(net, C, depths, ref, p), chunks))
    # fixed chunk order keeps the reduction deterministic
    return {n: np.concatenate([part[n] for part in parts]) for n in depths}


def lq_distance_estimate(net, n, n_prime, q, p, samples, seed):
    """Monte-Carlo estimate of ``|| N~_n - N~_n' ||`` in ``L^q([0,1]^d, l^p)``.

    The cube has volume 1, so the sample mean of ``||.||_p^q`` estimates the
    integral; ``q = inf`` takes the sample maximum.
    """
    q = as_p(q)
    if samples < 1:
        raise ValueError("samples must be >= 1")
    X = np.random.default_rng(seed).random((net.d, samples))
    lo, hi = min(n, n_prime), max(n, n_prime)
    if lo == hi:
        return 0.0
    r = _residuals_over(net, X, [lo], hi, p)[lo]
    if q == math.inf:
        return float(r.max())
    return float(np.mean(r**q) ** (1.0 / q))


def run_depth_experiment(config, write=True):
    """Run the experiment described by ``config``; returns the rows.

    Writes the CSV to ``config.output`` unless ``write`` is false.
    """
    if isinstance(config, dict):
        config = ExperimentConfig.from_dict(config)
    net = family_network(config.family, config.d)
    ref = config.checkpoints[-1]
    net.expand(ref)
    cost = net.width(ref) * ref
    if cost > config.resource_cap:
        raise ValueError(f"width x depth = {cost} exceeds the resource cap {config.resource_cap}")

    X = evaluation_points(config.d, config.grid, config.samples, config.seed)
    grid_res = _residuals_over(net, X, config.checkpoints, ref, config.p)
    S = np.random.default_rng(config.seed).random((config.d, config.samples))
    mc_res = _residuals_over(net, S, config.checkpoints, ref, config.p)

    states = {s.depth: s for s in product_states(net, ref, keep=config.checkpoints)}
    decay = config.perturbation_decay()
    rows = []
    for n in config.checkpoints:
        r = mc_res[n]
        lq = float(r.max()) if config.q == math.inf else float(np.mean(r**config.q) ** (1.0 / config.q))
        tb = declared_tail_bound(decay, n).bound if decay is not None and decay.summable else math.nan
        rows.append(ResidualRow(
            depth=n,
            width=net.width(n),
            grid_sup_residual=float(grid_res[n].max()),
            lq_estimate=lq,
            operator_residual=padded_distance(states[n].current, states[ref].current, config.p),
            bias_residual=padded_distance(states[n].bias_accum, states[ref].bias_accum, config.p),
            tail_bound=tb,
        ))
    if write:
        write_rows(config.output, rows)
    return rows


def write_rows(path, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in rows:
        writer.writerow(row.cells())
    Path(path).write_text(buf.getvalue())
