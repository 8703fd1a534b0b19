import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from lensless.patches import ClusterAssignment, CoefficientSet
from lensless.shrinkage import ShrinkagePolicy, select_lambda, shrink_set, soft_threshold

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def scalar_shrink(a, lam):
    """Thresholding written entry by entry: a * (1 - lam/|a|) when |a| >= lam, else 0."""
    if a == 0 or abs(a) < lam:
        return 0.0
    return a * (1 - lam / abs(a))


def test_select_lambda_examples():
    assert select_lambda(np.array([5, 3, 1, 0.5]), 2) == 1.0
    assert select_lambda(np.zeros(10), 4) == 0.0
    lam = select_lambda(np.array([2.0, 2.0, 2.0]), 1)
    assert lam == 2.0
    assert np.all(soft_threshold(np.array([2.0, 2.0, 2.0]), lam) == 0)
    assert select_lambda(np.array([-4.0, 1.0, -3.0]), 1) == 3.0


@pytest.mark.parametrize("m", [0, 4, -1])
def test_select_lambda_range(m):
    with pytest.raises(ValueError):
        select_lambda(np.arange(4.0), m)


def test_soft_threshold_examples():
    assert soft_threshold(np.array([3.0]), 1.0)[0] == 2.0
    assert soft_threshold(np.array([-0.5]), 1.0)[0] == 0.0
    assert soft_threshold(np.array([-3.0]), 1.0)[0] == -2.0
    with pytest.raises(ValueError):
        soft_threshold(np.ones(2), -0.1)


@given(arrays(np.float64, st.integers(1, 50), elements=finite), st.floats(0, 5))
def test_soft_threshold_matches_scalar_rule(a, lam):
    ref = np.array([scalar_shrink(v, lam) for v in a])
    assert np.max(np.abs(soft_threshold(a, lam) - ref)) <= 1e-14


@given(arrays(np.float64, st.integers(2, 60), elements=finite), st.floats(0, 3), st.floats(0, 3))
def test_shrinkage_properties(a, l1, l2):
    lo, hi = sorted((l1, l2))
    b_lo, b_hi = soft_threshold(a, lo), soft_threshold(a, hi)
    assert np.all(np.abs(b_hi) <= np.abs(b_lo))
    assert np.sum(np.abs(b_lo)) <= np.sum(np.abs(a))
    assert np.max(np.abs(b_lo - a)) <= lo + 1e-12
    assert np.all(np.sign(b_lo)[b_lo != 0] == np.sign(a)[b_lo != 0])


def coefficient_set(blocks):
    members, start = [], 0
    for b in blocks:
        members.append(np.arange(start, start + b.shape[0]))
        start += b.shape[0]
    return CoefficientSet(blocks, members, False, start)


def test_policy_keep_counts():
    assert ShrinkagePolicy("csr_proportional", csr=0.1).keep_count(640) == 64
    assert ShrinkagePolicy("fixed_fraction", keep_fraction=0.5).keep_count(100) == 50
    assert ShrinkagePolicy("csr_proportional", csr=1.0).keep_count(64) == 63
    assert ShrinkagePolicy("csr_proportional", csr=0.001).keep_count(64) == 1
    with pytest.raises(ValueError):
        ShrinkagePolicy("hard")
    with pytest.raises(ValueError):
        ShrinkagePolicy("fixed_fraction", keep_fraction=1.0)


def test_shrink_set_fixed_fraction(rng):
    c = coefficient_set([rng.normal(size=(4, 5, 5))])  # 100 coefficients
    beta, lams = shrink_set(c, ShrinkagePolicy("fixed_fraction", keep_fraction=0.5))
    assert np.count_nonzero(beta.blocks[0]) <= 50
    assert len(lams) == 1


def test_shrink_set_per_cluster(rng):
    blocks = [rng.normal(size=(10, 8, 8)), 5 * rng.normal(size=(3, 8, 8))]
    policy = ShrinkagePolicy("csr_proportional", csr=0.1)
    beta, lams = shrink_set(coefficient_set(blocks), policy)
    for b_in, b_out, lam in zip(blocks, beta.blocks, lams):
        m = policy.keep_count(b_in.size)
        assert lam == np.sort(np.abs(b_in).ravel())[::-1][m]
        assert np.count_nonzero(b_out) <= m
    assert lams[1] > lams[0]


def test_shrink_set_single_coefficient_cluster():
    beta, lams = shrink_set(coefficient_set([np.array([[[3.0]]])]), ShrinkagePolicy())
    assert beta.blocks[0][0, 0, 0] == 3.0 and lams == [0.0]


@given(st.lists(arrays(np.float64, st.tuples(st.integers(1, 6), st.just(2), st.just(2)), elements=finite),
                min_size=1, max_size=4),
       st.sampled_from(["csr_proportional", "fixed_fraction"]), st.floats(0.01, 0.99))
def test_shrink_set_l1_contraction(blocks, mode, rate):
    policy = ShrinkagePolicy(mode, csr=rate, keep_fraction=rate)
    beta, lams = shrink_set(coefficient_set(blocks), policy)
    for a, b, lam in zip(blocks, beta.blocks, lams):
        assert np.sum(np.abs(b)) <= np.sum(np.abs(a))
        assert np.max(np.abs(a - b)) <= lam + 1e-12
        assert np.count_nonzero(b) <= policy.keep_count(a.size)
