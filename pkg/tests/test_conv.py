import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from convlim.conv import (
    ZeroCenterError,
    cnn_weight_matrix,
    cnn_widths,
    convolve,
    load_masks,
    mask_ratio_sum_term,
    save_masks,
    shift_decompose,
    toeplitz,
)
from convlim.lp_linalg import embedding, induced_norm_exact

from oracles import direct_convolution, toeplitz_entries

small_ints = st.integers(-20, 20).map(float)


@pytest.mark.parametrize("x, w, expected", [
    ([1, 2], [1, 1], [1, 3, 2]),
    ([5], [1], [5]),
    ([1, 2, 3], [0, 1], [0, 1, 2, 3]),
])
def test_convolve_examples(x, w, expected):
    assert np.array_equal(convolve(np.array(x, float), w), expected)
    assert np.array_equal(direct_convolution(x, w), expected)


def test_convolve_matches_direct_sum(rng):
    for _ in range(300):
        w = rng.standard_normal(rng.integers(1, 9))
        x = rng.standard_normal(rng.integers(1, 40))
        # same accumulation order as the defining sum, so bitwise equal
        assert np.array_equal(convolve(x, w), direct_convolution(x, w))


def test_convolve_batches_columns(rng):
    w = rng.standard_normal(4)
    X = rng.standard_normal((7, 3))
    Y = convolve(X, w)
    for k in range(3):
        assert np.array_equal(Y[:, k], convolve(X[:, k], w))


def test_toeplitz_examples():
    assert np.array_equal(toeplitz([1, 2], 2), [[1, 0], [2, 1], [0, 2]])
    assert np.array_equal(toeplitz([1], 3), np.eye(3))
    assert np.array_equal(cnn_weight_matrix([1, 2], 2), toeplitz([1, 2], 2))


def test_toeplitz_entries_match_formula(rng):
    for _ in range(100):
        w = rng.standard_normal(rng.integers(1, 7))
        m = int(rng.integers(1, 12))
        T = toeplitz(w, m)
        assert np.array_equal(T, toeplitz_entries(w, m))
        # constant along every diagonal
        for off in range(-m + 1, T.shape[0]):
            assert np.unique(np.diagonal(T, -off)).size <= 1


@given(arrays(float, st.integers(1, 9), elements=small_ints),
       arrays(float, st.integers(1, 30), elements=small_ints))
def test_toeplitz_times_x_is_convolution_exactly(w, x):
    # integer data keeps every partial sum exact, so any summation order agrees
    assert np.array_equal(toeplitz(w, x.size) @ x, convolve(x, w))
    assert convolve(x, w).size == x.size + w.size - 1


def test_toeplitz_times_x_random_reals(rng):
    for _ in range(500):
        w = rng.standard_normal(rng.integers(1, 10))
        x = rng.standard_normal(rng.integers(1, 65))
        assert np.abs(toeplitz(w, x.size) @ x - convolve(x, w)).max() <= 1e-12


@pytest.mark.parametrize("d, s, expected", [
    (2, (1, 1, 1), (2, 3, 4, 5)),
    (3, (), (3,)),
    (1, (2, 2), (1, 3, 5)),
])
def test_cnn_widths(d, s, expected):
    assert cnn_widths(d, s) == expected


def test_cnn_widths_errors():
    with pytest.raises(ValueError):
        cnn_widths(0, ())
    with pytest.raises(ValueError):
        cnn_widths(2, (1, -1))


def test_shift_decompose_examples():
    expected = np.array([[0, 0], [0.5, 0], [0, 0.5]])
    dec = shift_decompose(toeplitz([1, 0.5], 2))
    assert np.array_equal(dec.perturbation, expected)
    dec2 = shift_decompose(toeplitz([2, 1], 2), normalize_by=2)
    assert np.array_equal(dec2.perturbation, expected)
    assert np.array_equal(dec2.reconstruct(), toeplitz([2, 1], 2))
    assert not shift_decompose(embedding(4, 2)).perturbation.any()


def test_shift_decompose_errors():
    with pytest.raises(ZeroCenterError):
        shift_decompose(np.eye(2), normalize_by=0.0)
    with pytest.raises(ValueError):
        shift_decompose(np.ones((2, 3)))


@pytest.mark.parametrize("w, expected", [((1, 0.25, 0.25), 0.5), ((2, 1), 0.5), ((1,), 0.0)])
def test_mask_ratio_sum_term(w, expected):
    assert mask_ratio_sum_term(w) == expected


def test_mask_ratio_rejects_zero_center():
    with pytest.raises(ZeroCenterError):
        mask_ratio_sum_term([0.0, 1.0])


def test_ratio_bounds_normalized_perturbation(rng):
    for _ in range(300):
        s = int(rng.integers(0, 6))
        w = rng.standard_normal(s + 1)
        m = int(rng.integers(1, 12))
        P = shift_decompose(toeplitz(w, m), normalize_by=w[0]).perturbation
        bound = mask_ratio_sum_term(w)
        assert induced_norm_exact(P, 1) <= bound * (1 + 1e-12)
        assert induced_norm_exact(P, math.inf) <= bound * (1 + 1e-12)
        if m >= s + 1:
            assert induced_norm_exact(P, 1) == pytest.approx(bound, rel=1e-12, abs=1e-15)


def test_mask_file_round_trip(tmp_path, rng):
    masks = [rng.standard_normal(rng.integers(1, 5)) for _ in range(6)]
    path = tmp_path / "masks.json"
    save_masks(path, masks)
    back = load_masks(path)
    assert len(back) == 6
    for a, b in zip(masks, back):
        assert np.array_equal(a, b)
    assert isinstance(json.loads(path.read_text())[0], list)


def test_mask_file_rejects_bad_shape(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"w": [1, 2]}')
    with pytest.raises(ValueError):
        load_masks(path)
