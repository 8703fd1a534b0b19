"""Overlapping-patch analysis and synthesis.

Patches are stored as a stack of shape (n_patches, edge, edge) in raster order
of their top-left corners. Synthesis averages every copy of a pixel, so
``average_synthesize(sys, extract_patches(sys, x)) == x``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import fft


def patch_positions(length: int, edge: int, stride: int) -> np.ndarray:
    """Top-left offsets along one axis; the last patch is clamped to the border."""
    if edge > length:
        raise ValueError(f"patch edge {edge} exceeds image extent {length}")
    pos = list(range(0, length - edge + 1, stride))
    if pos[-1] != length - edge:
        pos.append(length - edge)
    return np.array(pos)


@dataclass(frozen=True)
class PatchSystem:
    shape: tuple[int, int]  # (n_y, n_x)
    patch_edge: int = 8
    stride: int = 4

    def __post_init__(self):
        if self.patch_edge < 1 or self.stride < 1:
            raise ValueError("patch_edge and stride must be >= 1")
        if self.stride > self.patch_edge:
            raise ValueError(f"stride {self.stride} > patch edge {self.patch_edge} leaves pixels uncovered")
        if self.patch_edge > min(self.shape):
            raise ValueError(f"patch edge {self.patch_edge} exceeds image extent {min(self.shape)}")

    @cached_property
    def row_positions(self) -> np.ndarray:
        return patch_positions(self.shape[0], self.patch_edge, self.stride)

    @cached_property
    def col_positions(self) -> np.ndarray:
        return patch_positions(self.shape[1], self.patch_edge, self.stride)

    @property
    def n_patches(self) -> int:
        return self.row_positions.size * self.col_positions.size

    @property
    def n_coefficients(self) -> int:
        return self.n_patches * self.patch_edge ** 2

    @cached_property
    def coverage(self) -> np.ndarray:
        """Number of patches containing each pixel."""
        def axis_cover(length, pos):
            c = np.zeros(length)
            for p in pos:
                c[p:p + self.patch_edge] += 1
            return c
        return np.outer(axis_cover(self.shape[0], self.row_positions),
                        axis_cover(self.shape[1], self.col_positions))


def extract_patches(sys: PatchSystem, image: np.ndarray) -> np.ndarray:
    image = np.asarray(image, dtype=np.float64)
    if image.shape != sys.shape:
        raise ValueError(f"image shape {image.shape} != patch system shape {sys.shape}")
    e = sys.patch_edge
    win = sliding_window_view(image, (e, e))
    return win[np.ix_(sys.row_positions, sys.col_positions)].reshape(-1, e, e)


def average_synthesize(sys: PatchSystem, patches: np.ndarray) -> np.ndarray:
    e = sys.patch_edge
    if patches.shape != (sys.n_patches, e, e):
        raise ValueError(f"patch stack shape {patches.shape} != {(sys.n_patches, e, e)}")
    grid = patches.reshape(sys.row_positions.size, sys.col_positions.size, e, e)
    # average deviations from one reference copy so that identical copies
    # reproduce the pixel bit for bit (a plain sum / c can be off by an ulp)
    ref = np.empty(sys.shape)
    for di in range(e):
        for dj in range(e):
            ref[np.ix_(sys.row_positions + di, sys.col_positions + dj)] = grid[:, :, di, dj]
    acc = np.zeros(sys.shape)
    for di in range(e):
        rows = sys.row_positions + di
        for dj in range(e):
            idx = np.ix_(rows, sys.col_positions + dj)
            acc[idx] += grid[:, :, di, dj] - ref[idx]
    return ref + acc / sys.coverage


def dct2_analyze(patches: np.ndarray) -> np.ndarray:
    return fft.dctn(patches, type=2, norm="ortho", axes=(-2, -1))


def dct2_synthesize(coeffs: np.ndarray) -> np.ndarray:
    return fft.idctn(coeffs, type=2, norm="ortho", axes=(-2, -1))


@dataclass(frozen=True)
class ClusterAssignment:
    n_clusters: int
    labels: np.ndarray

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64)
        counts = np.bincount(labels, minlength=self.n_clusters)
        if labels.min(initial=0) < 0 or counts.size != self.n_clusters or np.any(counts == 0):
            raise ValueError("every cluster must be non-empty and labels in range")
        object.__setattr__(self, "labels", labels)

    @classmethod
    def single(cls, n_patches: int) -> ClusterAssignment:
        return cls(1, np.zeros(n_patches, dtype=np.int64))

    def members(self) -> list[np.ndarray]:
        return [np.flatnonzero(self.labels == c) for c in range(self.n_clusters)]


def cluster_patches(patches: np.ndarray, n_clusters: int, seed: int = 0,
                    max_iter: int = 20) -> ClusterAssignment:
    """Seeded k-means on raw patch vectors.

    An emptied cluster takes over the patch lying farthest from its own centroid.
    """
    n = patches.shape[0]
    if n_clusters < 1 or n_clusters > n:
        raise ValueError(f"need 1 <= clusters <= {n}, got {n_clusters}")
    if n_clusters == 1:
        return ClusterAssignment.single(n)
    data = patches.reshape(n, -1)
    rng = np.random.default_rng(seed)
    centroids = data[rng.choice(n, size=n_clusters, replace=False)].copy()
    sq = np.einsum("ij,ij->i", data, data)
    labels = None
    for _ in range(max_iter):
        d2 = sq[:, None] - 2.0 * data @ centroids.T + np.einsum("ij,ij->i", centroids, centroids)[None, :]
        new = np.argmin(d2, axis=1)
        dist = d2[np.arange(n), new]
        counts = np.bincount(new, minlength=n_clusters)
        for c in np.flatnonzero(counts == 0):
            # donor must not leave its own cluster empty
            movable = counts[new] > 1
            far = int(np.argmax(np.where(movable, dist, -np.inf)))
            counts[new[far]] -= 1
            new[far] = c
            counts[c] = 1
            dist[far] = 0.0
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        for c in range(n_clusters):
            centroids[c] = data[labels == c].mean(axis=0)
    return ClusterAssignment(n_clusters, labels)


@dataclass
class CoefficientSet:
    """Per-cluster coefficient blocks, each shaped (patches_in_cluster, edge, edge)."""

    blocks: list[np.ndarray]
    members: list[np.ndarray]
    stack_transform: bool = False
    n_patches: int = field(default=0)

    @property
    def size(self) -> int:
        return sum(b.size for b in self.blocks)

    def with_blocks(self, blocks: list[np.ndarray]) -> CoefficientSet:
        return CoefficientSet(blocks, self.members, self.stack_transform, self.n_patches)


def analyze3d(sys: PatchSystem, assignment: ClusterAssignment, patches: np.ndarray,
              stack_transform: bool = True) -> CoefficientSet:
    """2-D DCT of every patch, then (optionally) a 1-D DCT across each cluster's stack."""
    if patches.shape[0] != assignment.labels.size or patches.shape[0] != sys.n_patches:
        raise ValueError("assignment and patch stack disagree on the patch count")
    members = assignment.members()
    coeffs = dct2_analyze(patches)
    blocks = []
    for idx in members:
        b = coeffs[idx]
        if stack_transform:
            b = fft.dct(b, type=2, norm="ortho", axis=0)
        blocks.append(b)
    return CoefficientSet(blocks, members, stack_transform, sys.n_patches)


def synthesize3d(sys: PatchSystem, coeffs: CoefficientSet) -> np.ndarray:
    e = sys.patch_edge
    if coeffs.n_patches != sys.n_patches:
        raise ValueError("coefficient set was built for a different patch system")
    out = np.empty((sys.n_patches, e, e))
    for idx, b in zip(coeffs.members, coeffs.blocks):
        if b.shape != (idx.size, e, e):
            raise ValueError(f"block shape {b.shape} does not match cluster of {idx.size} patches")
        if coeffs.stack_transform:
            b = fft.idct(b, type=2, norm="ortho", axis=0)
        out[idx] = b
    return dct2_synthesize(out)
