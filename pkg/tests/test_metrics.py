import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fp8sta.metrics import cosine_similarity, flops_dense, flops_sparse, mse, snr_db

vectors = st.lists(
    st.floats(allow_nan=False, allow_infinity=False, min_value=-1e6, max_value=1e6),
    min_size=1,
    max_size=32,
)


def test_cosine_identical_vectors():
    v = np.array([0.3, -1.7, 2.2])
    assert cosine_similarity(v, v) == 1.0


def test_cosine_orthogonal():
    assert cosine_similarity([1, 0], [0, 1]) == 0.0


def test_cosine_derived_value():
    # scalar-loop computation: 31 / sqrt(14 * 69)
    a, b = [1, 2, 3], [2, 4, 7]
    dot = sum(x * y for x, y in zip(a, b))
    want = dot / math.sqrt(sum(x * x for x in a) * sum(y * y for y in b))
    assert math.isclose(cosine_similarity(a, b), want, rel_tol=0, abs_tol=1e-15)
    assert abs(cosine_similarity(a, b) - 0.99741) < 1e-5


def test_cosine_zero_vector_conventions():
    assert cosine_similarity([0, 0], [0, 0]) == 1.0
    assert cosine_similarity([0, 0], [1, 0]) == 0.0


def test_cosine_length_mismatch():
    with pytest.raises(ValueError):
        cosine_similarity([1, 2], [1, 2, 3])


@given(v=vectors, c=st.floats(min_value=1e-3, max_value=1e3))
@settings(max_examples=150)
def test_cosine_scale_invariance(v, c):
    arr = np.array(v)
    if not np.any(arr):
        return
    assert abs(cosine_similarity(arr, c * arr) - 1.0) <= 1e-12
    assert abs(cosine_similarity(arr, -c * arr) + 1.0) <= 1e-12


def test_cosine_power_of_two_scaling_is_exact():
    v = np.array([0.7, -3.1, 0.02])
    assert cosine_similarity(v, 4.0 * v) == 1.0
    assert cosine_similarity(v, -0.5 * v) == -1.0


def test_mse_examples():
    assert mse([1, 2], [1, 2]) == 0.0
    assert mse([1, 0], [0, 0]) == 0.5


@given(a=vectors, b=vectors)
@settings(max_examples=100)
def test_mse_symmetric(a, b):
    n = min(len(a), len(b))
    assert mse(a[:n], b[:n]) == mse(b[:n], a[:n])


def test_mse_matches_scalar_loop():
    rng = np.random.default_rng(31)
    a, b = rng.standard_normal(64), rng.standard_normal(64)
    want = sum((x - y) ** 2 for x, y in zip(a, b)) / 64
    assert abs(mse(a, b) - want) <= 1e-12


def test_snr_exact_match_is_infinite():
    assert snr_db([1.0, 2.0], [1.0, 2.0]) == math.inf


def test_snr_zero_db_when_error_equals_signal():
    assert snr_db([1, 0], [0, 0]) == 0.0


def test_snr_hand_value():
    # ||ref||^2 = 25, ||err||^2 = 0.25 -> 10 log10(100) = 20 dB
    assert abs(snr_db([3, 4], [3, 4.5]) - 20.0) <= 1e-12


def test_snr_rejects_zero_reference():
    with pytest.raises(ValueError):
        snr_db([0, 0], [1, 2])


def test_snr_not_symmetric():
    a, b = [3.0, 4.0], [3.0, 4.5]
    assert snr_db(a, b) != snr_db(b, a)


def test_flops_dense_values():
    assert flops_dense(1024, 64) == 268435456
    assert flops_dense(1, 7) == 28
    assert flops_dense(2, 2) == 32


def test_flops_dense_rejects_degenerate():
    with pytest.raises(ValueError):
        flops_dense(0, 4)


def test_flops_sparse_values():
    assert flops_sparse(4, 1, 1.0) == flops_dense(4, 1)
    assert flops_sparse(4, 1, 0.625) == 40
    assert flops_sparse(1024, 64, 0.25) == 67108864


def test_flops_sparse_rejects_bad_density():
    with pytest.raises(ValueError):
        flops_sparse(4, 4, 0.0)
    with pytest.raises(ValueError):
        flops_sparse(4, 4, 1.5)


@given(
    d1=st.floats(min_value=0.01, max_value=1.0),
    d2=st.floats(min_value=0.01, max_value=1.0),
)
@settings(max_examples=100)
def test_flops_sparse_monotone_in_density(d1, d2):
    lo, hi = sorted((d1, d2))
    assert flops_sparse(64, 16, lo) <= flops_sparse(64, 16, hi)
