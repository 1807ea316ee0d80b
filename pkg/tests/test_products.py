import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import zeta

from convlim.decay import DecayDeclaration
from convlim.families import family_network
from convlim.lp_linalg import ActivationMatrix, embedding
from convlim.network import ConvLayer, Network
from convlim.products import (
    PaddedOperator,
    cutoff_is_stable,
    declared_tail_bound,
    detect_convergence,
    extend_product,
    max_stable_cutoff,
    padded_distance,
    padded_distance_bounds,
    product_states,
    series_inequality_lhs,
    series_inequality_rhs,
    stabilization_depth,
    stabilized_activation_product,
    start_product,
    tail_bound,
)

from oracles import brute_force_activation_product, subset_enumeration_lhs


def test_extend_product_embedding():
    s = extend_product(start_product(2), ActivationMatrix.full(3), embedding(3, 2), np.zeros(3))
    assert np.array_equal(s.current.active, embedding(3, 2))
    assert not s.bias_accum.active.any()
    assert s.widths == (2, 3) and s.depth == 1


def test_extend_product_bias_recursion():
    e1 = lambda m: np.eye(m)[0]
    s = start_product(2)
    s = extend_product(s, ActivationMatrix.full(3), embedding(3, 2), e1(3))
    s = extend_product(s, ActivationMatrix.full(4), embedding(4, 3), e1(4))
    # c_2 = J_2 W_2 e_1 + e_1 by hand
    assert np.array_equal(s.bias_accum.active, embedding(4, 3) @ e1(3) + e1(4))


def test_extend_product_empty_support(rng):
    s = extend_product(start_product(2), ActivationMatrix.full(3), rng.standard_normal((3, 2)), np.ones(3))
    s = extend_product(s, ActivationMatrix.empty(4), rng.standard_normal((4, 3)), np.ones(4))
    assert not s.current.active.any() and not s.bias_accum.active.any()


def test_extend_product_dimension_errors():
    with pytest.raises(ValueError):
        extend_product(start_product(2), ActivationMatrix.full(2), embedding(3, 2), np.zeros(3))
    with pytest.raises(ValueError):
        extend_product(start_product(2), ActivationMatrix.full(3), embedding(3, 3), np.zeros(3))


def test_matrix_free_layers_agree_with_dense(rng):
    net = Network(2, layers=[ConvLayer(rng.standard_normal(3), rng.standard_normal(4)),
                             ConvLayer(rng.standard_normal(2), rng.standard_normal(5))])
    J1, J2 = ActivationMatrix(rng.random(4) < 0.7), ActivationMatrix(rng.random(5) < 0.7)
    free = product_states(net, 2, trace=[J1, J2])[-1]
    dense = start_product(2)
    for k, J in ((1, J1), (2, J2)):
        dense = extend_product(dense, J, net.weight(k), net.bias(k))
    assert np.allclose(free.current.active, dense.current.active, rtol=0, atol=1e-14)
    assert np.allclose(free.bias_accum.active, dense.bias_accum.active, rtol=0, atol=1e-14)


def test_padded_distance_examples():
    I2 = np.eye(2)
    assert padded_distance(I2, I2) == 0.0
    assert padded_distance(I2, embedding(3, 2)) == 0.0
    assert padded_distance(I2, [[1, 0], [0, 1], [1, 0]], math.inf) == 1.0
    with pytest.raises(ValueError):
        padded_distance(np.eye(2), np.eye(3))


def test_padded_distance_zero_padding_neutral(rng):
    for _ in range(50):
        a = rng.standard_normal((rng.integers(1, 6), 3))
        b = rng.standard_normal((rng.integers(1, 6), 3))
        pad = np.vstack([a, np.zeros((4, 3))])
        for p in (1, math.inf):
            assert padded_distance(pad, b, p) == padded_distance(a, b, p)
            assert padded_distance(PaddedOperator(a), b, p) == padded_distance(a, b, p)
        # Gram products see the zero rows in a different BLAS order
        assert padded_distance(pad, b, 2) == pytest.approx(padded_distance(a, b, 2), rel=1e-12)


def test_padded_distance_general_p_interval(rng):
    a, b = rng.standard_normal((4, 3)), rng.standard_normal((6, 3))
    lo, hi = padded_distance_bounds(a, b, 3)
    assert lo <= hi and padded_distance(a, b, 3) == hi
    v, w = rng.standard_normal(3), rng.standard_normal(5)
    exact = np.sum(np.abs(np.r_[v, 0, 0] - w) ** 3) ** (1 / 3)
    assert padded_distance_bounds(v, w, 3) == (pytest.approx(exact), pytest.approx(exact))


def test_stabilized_product_example():
    widths = (2, 3, 4)
    Js = [ActivationMatrix.from_support(3, {0, 2}), ActivationMatrix.from_support(4, {0, 1, 3})]
    J_prime, product = stabilized_activation_product(widths, 1, Js)
    assert J_prime.support == (0,)
    assert np.array_equal(product, embedding(4, 2) @ np.diag([1.0, 0.0]))
    assert np.array_equal(product, brute_force_activation_product(widths, 1, [{0, 2}, {0, 1, 3}]))


def test_stabilized_product_full_and_empty():
    widths = (2, 3, 5)
    full = [ActivationMatrix.full(3), ActivationMatrix.full(5)]
    J_prime, product = stabilized_activation_product(widths, 1, full)
    assert J_prime == ActivationMatrix.full(2)
    assert np.array_equal(product, embedding(5, 2))
    J_prime, product = stabilized_activation_product(widths, 1, [ActivationMatrix.full(3), ActivationMatrix.empty(5)])
    assert J_prime.support == () and not product.any()


def test_stabilized_product_random_vs_brute_force(rng):
    for _ in range(1000):
        depth = int(rng.integers(1, 11))
        widths = [int(rng.integers(1, 5))]
        for _ in range(depth):
            widths.append(widths[-1] + int(rng.integers(0, 4)))
        k = int(rng.integers(1, depth + 1))
        supports = [set(np.flatnonzero(rng.random(widths[i]) < 0.8)) for i in range(k, depth + 1)]
        Js = [ActivationMatrix.from_support(widths[i], s) for i, s in enumerate(supports, start=k)]
        _, product = stabilized_activation_product(widths, k, Js)
        assert np.array_equal(product, brute_force_activation_product(widths, k, supports))


def test_max_stable_cutoff_agrees_with_cutoff_check(rng):
    for _ in range(30):
        widths = [2]
        for _ in range(12):
            widths.append(widths[-1] + int(rng.integers(0, 3)))
        Js = [ActivationMatrix(rng.random(m) < 0.9) for m in widths[1:]]
        for n in range(1, 12):
            for n2 in range(n + 1, 13):
                q_max = max_stable_cutoff(widths, Js, n, n2)
                for q in range(n):
                    assert cutoff_is_stable(widths, Js, q, n, n2) == (q <= q_max)


def test_stabilization_depth():
    widths = (3, 3, 3, 3, 3)
    Js = [ActivationMatrix.full(3), ActivationMatrix([1, 0, 1]), ActivationMatrix.full(3),
          ActivationMatrix([1, 1, 0])]
    assert stabilization_depth(widths, 1, Js) == 4
    assert stabilization_depth(widths, 1, Js[:3]) == 2
    assert stabilization_depth(widths, 1, Js[:1]) == 0


@pytest.mark.parametrize("a, q, expected", [((0.5,), 0, 0.5), ((0.1, 0.2), 0, 0.32), ((0.3, 0.4), 2, 0.0)])
def test_series_lhs_examples(a, q, expected):
    assert series_inequality_lhs(a, q) == pytest.approx(expected, rel=1e-14, abs=0)
    assert series_inequality_lhs(a, q) <= series_inequality_rhs(a, q) + 1e-15


def test_series_rhs_examples():
    assert series_inequality_rhs([0.5], 0) == pytest.approx(0.5 * math.exp(0.5))
    assert series_inequality_rhs([0.1, 0.2], 0) == pytest.approx(0.3 * math.exp(0.3))


def test_series_lhs_matches_enumeration(rng):
    for _ in range(300):
        a = rng.random(rng.integers(1, 13))
        q = int(rng.integers(0, a.size + 1))
        assert series_inequality_lhs(a, q) == pytest.approx(subset_enumeration_lhs(a, q), rel=1e-12, abs=1e-12)


@settings(max_examples=300, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=1, max_size=12), st.data())
def test_series_inequality_holds(a, data):
    q = data.draw(st.integers(0, len(a)))
    assert series_inequality_lhs(a, q) <= series_inequality_rhs(a, q) * (1 + 1e-12) + 1e-15


def test_series_lhs_rejects_negative():
    with pytest.raises(ValueError):
        series_inequality_lhs([0.1, -0.2], 0)


def test_tail_bound_examples():
    assert tail_bound([0.1, 0.2, 0.3], 3).bound == 0.0
    assert tail_bound(np.zeros(10), 2).bound == 0.0
    a = 1.0 / np.arange(1, 51) ** 2
    est = tail_bound(a, 10)
    direct_tail = sum(1.0 / i**2 for i in range(11, 51))
    direct_total = sum(1.0 / i**2 for i in range(1, 51))
    assert est.tail_sum == pytest.approx(direct_tail, rel=1e-14)
    assert est.total_sum == pytest.approx(1.625133, abs=1e-6)
    assert est.bound == pytest.approx(2 * direct_tail * math.exp(direct_total), rel=1e-14)
    # with the infinite remainder past 50 the tail becomes sum_{i>10} 1/i^2
    rem = float(zeta(2, 51))
    assert tail_bound(a, 10, remainder=rem).tail_sum == pytest.approx(0.095166, abs=1e-6)


def test_declared_tail_bound_matches_summation():
    est = declared_tail_bound(DecayDeclaration.power(1, 2), 100)
    assert est.total_sum == pytest.approx(math.pi**2 / 6, rel=1e-14)
    assert est.tail_sum == pytest.approx(math.pi**2 / 6 - sum(1 / i**2 for i in range(1, 101)), rel=1e-10)
    assert est.bound == pytest.approx(0.1031, abs=1e-4)


def _random_perturbed_layers(rng, d, depth, p, growth=3):
    """``W_n = I + P_n`` with ``||P_n||_p = 1/n^2`` exactly."""
    widths = [d]
    Ws = []
    for n in range(1, depth + 1):
        widths.append(widths[-1] + int(rng.integers(0, growth + 1)))
        P = rng.standard_normal((widths[n], widths[n - 1]))
        P *= (1.0 / n**2) / (np.abs(P).sum(axis=1 if p == math.inf else 0).max())
        Ws.append(embedding(widths[n], widths[n - 1]) + P)
    return widths, Ws


def _random_activation_sequence(rng, widths, settle):
    """Random J_n; after depth ``settle`` only units beyond m_{n-1} may switch off,
    so every J'_k is stable from ``settle`` on."""
    Js = []
    for n in range(1, len(widths)):
        mask = rng.random(widths[n]) < 0.85
        if n > settle:
            mask[: widths[n - 1]] = True
        Js.append(ActivationMatrix(mask))
    return Js


@pytest.mark.parametrize("p", [1, math.inf])
def test_tail_dominance_random_activations(rng, p):
    depth = 60
    checked = 0
    for _ in range(6):
        widths, Ws = _random_perturbed_layers(rng, 2, depth, p)
        Js = _random_activation_sequence(rng, widths, settle=int(rng.integers(1, 15)))
        state, states = start_product(2), []
        for n in range(1, depth + 1):
            state = extend_product(state, Js[n - 1], Ws[n - 1], np.zeros(widths[n]))
            states.append(state)
        norms = 1.0 / np.arange(1, depth + 1) ** 2
        for n in range(2, depth + 1, 3):
            for n2 in range(n + 1, depth + 1, 4):
                dist = padded_distance(states[n - 1].current, states[n2 - 1].current, p)
                q_max = max_stable_cutoff(widths, Js, n, n2)
                for q in range(0, q_max + 1):
                    checked += 1
                    assert dist <= tail_bound(norms[:n2], q).bound + 1e-10
    assert checked > 1000


def test_all_identity_activations_dominance(rng):
    # all J = I: the classical infinite product of I + P_n
    widths, Ws = _random_perturbed_layers(rng, 3, 80, math.inf)
    Js = [ActivationMatrix.full(m) for m in widths[1:]]
    state, states = start_product(3), []
    for n in range(1, 81):
        state = extend_product(state, Js[n - 1], Ws[n - 1], np.zeros(widths[n]))
        states.append(state)
    norms = 1.0 / np.arange(1, 81) ** 2
    for n in range(1, 80, 5):
        for n2 in range(n + 1, 81, 7):
            assert cutoff_is_stable(widths, Js, n - 1, n, n2)
            dist = padded_distance(states[n - 1].current, states[n2 - 1].current, math.inf)
            assert dist <= tail_bound(norms[:n2], n - 1).bound + 1e-10


def test_bias_sequence_is_cauchy(rng):
    depth = 400
    widths, Ws = _random_perturbed_layers(rng, 2, depth, math.inf, growth=1)
    Js = _random_activation_sequence(rng, widths, settle=10)
    state, res = start_product(2), {}
    keep = {50, 100, 200, 400}
    for n in range(1, depth + 1):
        b = rng.standard_normal(widths[n])
        b *= (1.0 / n**2) / np.abs(b).max()
        state = extend_product(state, Js[n - 1], Ws[n - 1], b)
        if n in keep:
            res[n] = state
    r = [padded_distance(res[n].bias_accum, res[2 * n].bias_accum) for n in (50, 100, 200)]
    assert r[0] > r[1] > r[2]
    # both pieces of the bias difference are O(tail of 1/n^2) times the product bound
    C = math.exp(math.pi**2 / 6)
    for n, rn in zip((50, 100, 200), r):
        assert rn <= 2 * C * float(zeta(2, n + 1)) * (1 + math.pi**2 / 6)


def test_detect_convergence_constant_states():
    s = start_product(3)
    states = [replace(s, depth=n) for n in range(4)]
    report = detect_convergence(states, tol=0.0, window=3)
    assert report.converged and report.basis == "empirical"
    assert report.operator_residuals == [0.0, 0.0, 0.0]


def test_detect_convergence_needs_enough_states():
    with pytest.raises(ValueError):
        detect_convergence([start_product(1)], window=1)


def test_detect_convergence_decaying_masks():
    spec = {"name": "unit_center_power", "c": 1, "alpha": 2}
    net = family_network(spec, 1)
    # zero biases, full-support activations
    net0 = Network(1, rule=lambda n, m: ConvLayer(net.layer(n).mask, np.zeros(m + 1)))
    depths = [5, 10, 20, 40, 80, 160]
    states = product_states(net0, 160, keep=depths)
    norms = 1.0 / np.arange(1, 161) ** 2
    for a, b in zip(states, states[1:]):
        assert padded_distance(a.current, b.current) <= tail_bound(norms[: b.depth], a.depth).bound
    report = detect_convergence(states, tol=0.05, window=2, decay=DecayDeclaration.power(1, 2))
    assert report.converged and report.basis == "tail_bound"
    assert report.operator_residuals == sorted(report.operator_residuals, reverse=True)


def test_detect_convergence_constant_mask_grows():
    net = Network(1, rule=lambda n, m: ConvLayer([1.0, 1.0], np.zeros(m + 1)))
    states = product_states(net, 12, keep=range(1, 13))
    report = detect_convergence(states, tol=1e-3, window=3)
    res = report.operator_residuals
    assert all(b >= a for a, b in zip(res, res[1:]))
    assert not report.converged
