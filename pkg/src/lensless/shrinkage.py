"""Per-cluster threshold selection and soft-thresholding."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .patches import CoefficientSet

MODES = ("csr_proportional", "fixed_fraction")


@dataclass(frozen=True)
class ShrinkagePolicy:
    """How many coefficients survive in each cluster.

    ``csr_proportional`` keeps round(csr * n) of a cluster's n coefficients,
    ``fixed_fraction`` keeps round(keep_fraction * n). Either way the count is
    clamped to [1, n - 1].
    """

    mode: str = "csr_proportional"
    csr: float = 0.1
    keep_fraction: float = 0.5

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown shrinkage mode {self.mode!r}; choose from {MODES}")
        if not 0.0 < self.csr <= 1.0:
            raise ValueError(f"csr must lie in (0, 1], got {self.csr}")
        if not 0.0 < self.keep_fraction < 1.0:
            raise ValueError(f"keep_fraction must lie in (0, 1), got {self.keep_fraction}")

    @property
    def rate(self) -> float:
        return self.csr if self.mode == "csr_proportional" else self.keep_fraction

    def keep_count(self, n: int) -> int:
        m = math.floor(self.rate * n + 0.5)
        return min(max(m, 1), n - 1)


def select_lambda(coeffs: np.ndarray, m_star: int) -> float:
    """The (m_star + 1)-th largest magnitude, so at most m_star entries exceed it."""
    mag = np.abs(np.asarray(coeffs, dtype=np.float64)).ravel()
    if not 1 <= m_star < mag.size:
        raise ValueError(f"m_star must lie in [1, {mag.size - 1}], got {m_star}")
    k = mag.size - 1 - m_star
    return float(np.partition(mag, k)[k])


def soft_threshold(coeffs: np.ndarray, lam: float) -> np.ndarray:
    if lam < 0:
        raise ValueError(f"threshold must be non-negative, got {lam}")
    coeffs = np.asarray(coeffs, dtype=np.float64)
    return np.sign(coeffs) * np.maximum(np.abs(coeffs) - lam, 0.0)


def shrink_set(coeffs: CoefficientSet, policy: ShrinkagePolicy) -> tuple[CoefficientSet, list[float]]:
    """Shrink each cluster with its own data-driven threshold.

    A cluster holding a single coefficient has no valid keep count and is
    passed through untouched (threshold 0).
    """
    blocks, lams = [], []
    for block in coeffs.blocks:
        if block.size < 2:
            blocks.append(block.copy())
            lams.append(0.0)
            continue
        lam = select_lambda(block, policy.keep_count(block.size))
        blocks.append(soft_threshold(block, lam))
        lams.append(lam)
    return coeffs.with_blocks(blocks), lams
