"""Randomized self-checks behind ``convlim verify`` and ``convlim repr-test``.

Each check returns a :class:`CheckResult`; none of them raise on failure.
"""

import math
from dataclasses import dataclass
from functools import reduce

import numpy as np

from .conv import convolve, toeplitz
from .lp_linalg import ActivationMatrix, embedding
from .network import DenseLayer, Network, activation_trace, affine_representation, forward
from .products import series_inequality_lhs, series_inequality_rhs, stabilized_activation_product

__all__ = [
    "CheckResult",
    "check_conv_toeplitz",
    "check_series_inequality",
    "check_representation",
    "check_stabilization",
    "random_network",
    "representation_error",
    "run_all",
]


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str

    def line(self):
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.detail}"


def random_network(rng, d=None, depth=None, max_width=8, max_d=4, max_depth=6):
    """Dense network with entries uniform in [-1, 1] and non-decreasing widths."""
    d = int(rng.integers(1, max_d + 1)) if d is None else d
    depth = int(rng.integers(1, max_depth + 1)) if depth is None else depth
    widths = [d]
    for _ in range(depth):
        widths.append(int(rng.integers(widths[-1], max(widths[-1], max_width) + 1)))
    layers = [
        DenseLayer(rng.uniform(-1, 1, (widths[k], widths[k - 1])), rng.uniform(-1, 1, widths[k]))
        for k in range(1, depth + 1)
    ]
    return Network(d, layers=layers)


def representation_error(net, X):
    """Largest sup-norm gap between the affine representation and the forward pass."""
    n = net.horizon
    err = 0.0
    for x in X.T:
        form = affine_representation(net, activation_trace(net, x, n), n)
        err = max(err, float(np.abs(form(x) - forward(net, x, n)).max()))
    return err


def check_representation(n_nets=200, n_points=50, seed=0, tol=1e-9):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_nets):
        net = random_network(rng)
        worst = max(worst, representation_error(net, rng.random((net.d, n_points))))
    return CheckResult("representation", worst <= tol, f"max error {worst:.3e} over {n_nets} nets (tol {tol:g})")


def check_conv_toeplitz(n_cases=2000, seed=0, tol=1e-12):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_cases):
        w = rng.standard_normal(int(rng.integers(1, 10)))
        x = rng.standard_normal(int(rng.integers(1, 65)))
        worst = max(worst, float(np.abs(toeplitz(w, x.size) @ x - convolve(x, w)).max()))
    return CheckResult("conv_toeplitz", worst <= tol, f"max deviation {worst:.3e} over {n_cases} cases")


def _brute_force_embedding_product(widths, k, Js):
    factors = [
        J.materialize() @ embedding(widths[i], widths[i - 1])
        for i, J in enumerate(Js, start=k)
    ]
    return reduce(lambda acc, F: F @ acc, factors, np.eye(widths[k - 1]))


def check_stabilization(n_cases=500, seed=0):
    rng = np.random.default_rng(seed)
    bad = 0
    for _ in range(n_cases):
        depth = int(rng.integers(1, 11))
        widths = [int(rng.integers(1, 5))]
        for _ in range(depth):
            widths.append(widths[-1] + int(rng.integers(0, 4)))
        k = int(rng.integers(1, depth + 1))
        Js = [ActivationMatrix(rng.random(widths[i]) < 0.8) for i in range(k, depth + 1)]
        _, product = stabilized_activation_product(widths, k, Js)
        if not np.array_equal(product, _brute_force_embedding_product(widths, k, Js)):
            bad += 1
    return CheckResult("stabilization", bad == 0, f"{bad} mismatches in {n_cases} cases")


def check_series_inequality(n_cases=500, seed=0):
    rng = np.random.default_rng(seed)
    worst = -math.inf
    for _ in range(n_cases):
        a = rng.random(int(rng.integers(1, 13)))
        q = int(rng.integers(0, a.size + 1))
        worst = max(worst, series_inequality_lhs(a, q) - series_inequality_rhs(a, q))
    return CheckResult("series_inequality", worst <= 1e-12, f"max lhs - rhs = {worst:.3e}")


def run_all(seed=0, scale=1.0):
    """Run every check; ``scale`` shrinks or grows the case counts."""
    def n(base):
        return max(1, int(base * scale))

    return [
        check_representation(n(200), n(50), seed),
        check_conv_toeplitz(n(2000), seed),
        check_stabilization(n(500), seed),
        check_series_inequality(n(500), seed),
    ]
