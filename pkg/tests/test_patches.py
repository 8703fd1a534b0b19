import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import fft

from lensless.patches import (ClusterAssignment, PatchSystem, analyze3d, average_synthesize,
                              cluster_patches, dct2_analyze, dct2_synthesize, extract_patches,
                              patch_positions, synthesize3d)


def dct_matrix(n):
    """Orthonormal DCT-II basis written out from its closed form."""
    k = np.arange(n)[:, None]
    i = np.arange(n)[None, :]
    c = np.cos(np.pi * (2 * i + 1) * k / (2 * n)) * np.sqrt(2.0 / n)
    c[0] /= np.sqrt(2.0)
    return c


def dense_average_matrix(sys):
    """W by enumeration: column j is the image obtained from unit patch-pixel j."""
    e = sys.patch_edge
    cols = []
    for j in range(sys.n_patches * e * e):
        v = np.zeros(sys.n_patches * e * e)
        v[j] = 1.0
        cols.append(average_synthesize(sys, v.reshape(-1, e, e)).ravel())
    return np.array(cols).T


def brute_coverage(sys):
    cov = np.zeros(sys.shape)
    for r in sys.row_positions:
        for c in sys.col_positions:
            cov[r:r + sys.patch_edge, c:c + sys.patch_edge] += 1
    return cov


def test_positions_clamp():
    assert patch_positions(8, 8, 4).tolist() == [0]
    assert patch_positions(10, 8, 4).tolist() == [0, 2]
    assert patch_positions(16, 8, 4).tolist() == [0, 4, 8]
    with pytest.raises(ValueError):
        patch_positions(4, 8, 4)


def test_single_patch_image(rng):
    sys = PatchSystem((8, 8), 8, 4)
    x = rng.random((8, 8))
    p = extract_patches(sys, x)
    assert p.shape == (1, 8, 8)
    np.testing.assert_array_equal(p[0], x)


def test_small_enumeration():
    sys = PatchSystem((4, 4), 2, 1)
    x = np.arange(16.0).reshape(4, 4)
    p = extract_patches(sys, x)
    assert p.shape == (9, 2, 2)
    assert sum((pp == x[1, 1]).sum() for pp in p) == 4
    assert sys.coverage[1, 1] == 4
    np.testing.assert_array_equal(p[4], x[1:3, 1:3])


def test_constant_image_gives_constant_patches():
    sys = PatchSystem((20, 12), 8, 4)
    p = extract_patches(sys, np.full((20, 12), 0.3))
    assert np.all(p == 0.3)


def test_patch_system_validation():
    with pytest.raises(ValueError):
        PatchSystem((6, 20), 8, 4)
    with pytest.raises(ValueError):
        PatchSystem((20, 20), 4, 5)


@given(st.integers(3, 16), st.integers(3, 16), st.integers(1, 3), st.integers(1, 3), st.integers(0, 2**31))
def test_average_inverts_extract(h, w, edge, stride, seed):
    stride = min(stride, edge)
    sys = PatchSystem((h, w), edge, stride)
    x = np.random.default_rng(seed).random((h, w))
    np.testing.assert_array_equal(average_synthesize(sys, extract_patches(sys, x)), x)


def test_constant_patches_and_perturbation(rng):
    sys = PatchSystem((16, 16), 8, 4)
    out = average_synthesize(sys, np.full((sys.n_patches, 8, 8), 0.7))
    np.testing.assert_array_equal(out, 0.7)
    x = rng.random((16, 16))
    p = extract_patches(sys, x).copy()
    p[4, 0, 0] += 0.5  # patch (1,1) holds pixel (4,4), covered by 4 patches
    delta = average_synthesize(sys, p) - x
    assert sys.coverage[4, 4] == 4
    assert delta[4, 4] == pytest.approx(0.5 / 4, abs=1e-14)
    delta[4, 4] = 0
    assert np.max(np.abs(delta)) < 1e-14


@pytest.mark.parametrize("shape,edge,stride", [((16, 16), 8, 4), ((10, 13), 4, 3), ((7, 9), 3, 2), ((12, 12), 5, 5)])
def test_diag_wwt_equals_inverse_coverage(shape, edge, stride):
    sys = PatchSystem(shape, edge, stride)
    w = dense_average_matrix(sys)
    np.testing.assert_array_equal(sys.coverage, brute_coverage(sys))
    np.testing.assert_allclose(np.diag(w @ w.T), 1.0 / brute_coverage(sys).ravel(), atol=1e-15)
    assert np.all((np.diag(w @ w.T) > 0) & (np.diag(w @ w.T) <= 1))
    # W Q = I as matrices
    q = np.array([extract_patches(sys, e.reshape(shape)).ravel() for e in np.eye(w.shape[0])]).T
    np.testing.assert_allclose(w @ q, np.eye(w.shape[0]), atol=1e-14)


def test_coefficient_redundancy_256():
    sys = PatchSystem((256, 256), 8, 4)
    assert sys.n_coefficients / (256 * 256) >= 3


def test_dct2_constant_patch():
    c = dct2_analyze(np.full((1, 8, 8), 0.25))
    assert c[0, 0, 0] == pytest.approx(8 * 0.25)
    c[0, 0, 0] = 0
    assert np.max(np.abs(c)) < 1e-15


def test_dct2_matches_dense_basis(rng):
    d = dct_matrix(8)
    p = rng.random((5, 8, 8))
    ref = np.einsum("ki,nij,lj->nkl", d, p, d)
    assert np.max(np.abs(dct2_analyze(p) - ref)) < 1e-10
    assert np.max(np.abs(dct2_synthesize(dct2_analyze(p)) - p)) < 1e-12


def test_cluster_single():
    a = cluster_patches(np.zeros((7, 4, 4)), 1)
    assert a.n_clusters == 1 and np.all(a.labels == 0)


@pytest.mark.parametrize("seed", range(6))
def test_cluster_separates_two_groups(seed):
    patches = np.concatenate([np.zeros((10, 4, 4)), np.ones((7, 4, 4))])
    lab = cluster_patches(patches, 2, seed).labels
    assert len(set(lab[:10])) == 1 and len(set(lab[10:])) == 1 and lab[0] != lab[10]


def test_cluster_deterministic_and_nonempty(rng):
    p = rng.random((60, 8, 8))
    a = cluster_patches(p, 4, seed=3)
    b = cluster_patches(p, 4, seed=3)
    np.testing.assert_array_equal(a.labels, b.labels)
    assert np.all(np.bincount(a.labels, minlength=4) > 0)
    # all-identical patches still yield non-empty clusters
    same = cluster_patches(np.zeros((5, 2, 2)), 5, seed=0)
    assert sorted(same.labels.tolist()) == [0, 1, 2, 3, 4]
    with pytest.raises(ValueError):
        cluster_patches(p, 61)


def test_assignment_validation():
    with pytest.raises(ValueError):
        ClusterAssignment(3, np.array([0, 0, 1]))


def test_identical_cluster_keeps_only_stack_dc(rng):
    sys = PatchSystem((8, 16), 8, 8)
    p = np.repeat(rng.random((1, 8, 8)), 2, axis=0)
    c = analyze3d(sys, ClusterAssignment.single(2), p, stack_transform=True)
    assert np.max(np.abs(c.blocks[0][1:])) < 1e-12
    assert np.max(np.abs(c.blocks[0][0])) > 0.1


def test_analyze3d_reduces_to_2d(rng):
    sys = PatchSystem((16, 16), 8, 4)
    p = extract_patches(sys, rng.random((16, 16)))
    c = analyze3d(sys, ClusterAssignment.single(sys.n_patches), p, stack_transform=False)
    np.testing.assert_array_equal(c.blocks[0], dct2_analyze(p))
    assert c.size == sys.n_coefficients


@given(st.integers(1, 5), st.booleans(), st.integers(0, 2**31))
def test_analyze3d_round_trip(n_clusters, stack, seed):
    r = np.random.default_rng(seed)
    sys = PatchSystem((16, 20), 4, 3)
    p = extract_patches(sys, r.random((16, 20)))
    a = cluster_patches(p, n_clusters, seed)
    c = analyze3d(sys, a, p, stack)
    assert c.size == sys.n_coefficients
    assert np.max(np.abs(synthesize3d(sys, c) - p)) < 1e-10


def test_analyze3d_matches_kronecker(rng):
    # 6 patches of 4x4 in two clusters of 3
    sys = PatchSystem((4, 24), 4, 4)
    p = rng.random((6, 4, 4))
    labels = np.array([0, 1, 1, 0, 1, 0])
    a = ClusterAssignment(2, labels)
    c = analyze3d(sys, a, p, stack_transform=True)
    kron = np.kron(dct_matrix(3), np.kron(dct_matrix(4), dct_matrix(4)))
    for k, idx in enumerate(a.members()):
        ref = kron @ p[idx].ravel()
        assert np.max(np.abs(c.blocks[k].ravel() - ref)) < 1e-9


def test_synthesize3d_shape_errors(rng):
    sys = PatchSystem((8, 8), 4, 4)
    p = rng.random((4, 4, 4))
    c = analyze3d(sys, ClusterAssignment.single(4), p)
    with pytest.raises(ValueError):
        synthesize3d(PatchSystem((8, 12), 4, 4), c)
    with pytest.raises(ValueError):
        analyze3d(sys, ClusterAssignment.single(3), p[:3])
    with pytest.raises(ValueError):
        average_synthesize(sys, p[:3])
