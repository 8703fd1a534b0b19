"""MSE / PSNR for unit-range images."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class QualityReport:
    mse: float
    psnr_db: float  # math.inf when the images are identical
    per_channel: list["QualityReport"] = field(default_factory=list)

    @property
    def exact(self) -> bool:
        return self.mse == 0.0

    def format(self) -> str:
        db = "inf" if math.isinf(self.psnr_db) else f"{self.psnr_db:.4f}"
        lines = [f"mse {self.mse:.6e}  psnr {db} dB"]
        for c, r in enumerate(self.per_channel):
            lines.append(f"  channel {c}: {r.format()}")
        return "\n".join(lines)


def psnr_from_mse(mse: float, peak: float = 1.0) -> float:
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / mse)


def _mse(a: np.ndarray, b: np.ndarray, mask: np.ndarray | None) -> float:
    d = (a - b) ** 2
    if mask is not None:
        d = d[mask]
    return float(np.mean(d))


def psnr(a: np.ndarray, b: np.ndarray, mask: np.ndarray | None = None, peak: float = 1.0) -> QualityReport:
    """PSNR of two planes, or of (h, w, C) colour images with a per-channel breakdown.

    ``mask`` selects the pixels that count (True = include); it is 2-D and
    shared across channels.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != a.shape[:2]:
            raise ValueError(f"mask shape {mask.shape} does not match image {a.shape[:2]}")
        if not mask.any():
            raise ValueError("mask excludes every pixel")
    if a.ndim == 3:
        per = [psnr(a[..., c], b[..., c], mask, peak) for c in range(a.shape[2])]
        mse = float(np.mean([r.mse for r in per]))
        return QualityReport(mse, psnr_from_mse(mse, peak), per)
    mse = _mse(a, b, mask)
    return QualityReport(mse, psnr_from_mse(mse, peak))
