"""Permuted, row-selected Hadamard sensing operator.

Each measurement corresponds to one aperture pattern: a row of the order-N
Sylvester Hadamard matrix with its columns shuffled by one global permutation.
Rows are scaled by 1/sqrt(N), so for any row selection ``A @ A.T == I``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .rng import MASK64, XorShift64Star, permutation


def is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def next_power_of_two(n: int) -> int:
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    return 1 << (n - 1).bit_length()


def fwht(vec: np.ndarray) -> np.ndarray:
    """Unnormalised Walsh-Hadamard transform (Sylvester order) along the last axis.

    Returns ``H_N @ vec`` for 1-D input; leading axes are treated as a batch.
    """
    a = np.array(vec, dtype=np.float64, copy=True)
    n = a.shape[-1]
    if not is_power_of_two(n):
        raise ValueError(f"fwht length must be a power of two, got {n}")
    lead = a.shape[:-1]
    h = 1
    while h < n:
        a = a.reshape(*lead, n // (2 * h), 2, h)
        lo = a[..., 0, :]
        hi = a[..., 1, :]
        a = np.stack((lo + hi, lo - hi), axis=-2)
        h *= 2
    return a.reshape(*lead, n)


def sylvester(n: int) -> np.ndarray:
    """Dense +/-1 Hadamard matrix of order n built by the Sylvester recursion."""
    if not is_power_of_two(n):
        raise ValueError(f"order must be a power of two, got {n}")
    h = np.ones((1, 1))
    while h.shape[0] < n:
        h = np.block([[h, h], [h, -h]])
    return h


@dataclass(frozen=True)
class HadamardOperator:
    """Implicit M x N sensing matrix.

    ``n_pixels`` is the true image size; when it is not a power of two the
    image is zero-padded up to ``order`` and the pad entries never carry
    signal.
    """

    order: int
    permutation: np.ndarray
    selected_rows: np.ndarray
    n_x: int = 0
    n_y: int = 0
    perm_seed: int = 0
    row_seed: int = 0
    _inverse: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not is_power_of_two(self.order):
            raise ValueError(f"order must be a power of two, got {self.order}")
        perm = np.asarray(self.permutation, dtype=np.int64)
        rows = np.asarray(self.selected_rows, dtype=np.int64)
        if perm.shape != (self.order,) or not np.array_equal(np.sort(perm), np.arange(self.order)):
            raise ValueError("permutation must be a bijection on 0..order-1")
        if not 1 <= rows.size <= self.order:
            raise ValueError(f"need 1 <= M <= {self.order}, got M={rows.size}")
        if rows.min() < 0 or rows.max() >= self.order or np.unique(rows).size != rows.size:
            raise ValueError("selected_rows must be distinct indices in 0..order-1")
        if self.n_x == 0 and self.n_y == 0:
            object.__setattr__(self, "n_x", self.order)
            object.__setattr__(self, "n_y", 1)
        if self.n_x * self.n_y > self.order:
            raise ValueError("image does not fit the operator order")
        perm.setflags(write=False)
        rows.setflags(write=False)
        inv = np.empty_like(perm)
        inv[perm] = np.arange(self.order)
        inv.setflags(write=False)
        object.__setattr__(self, "permutation", perm)
        object.__setattr__(self, "selected_rows", rows)
        object.__setattr__(self, "_inverse", inv)

    @property
    def m(self) -> int:
        return int(self.selected_rows.size)

    @property
    def n_pixels(self) -> int:
        return self.n_x * self.n_y

    @property
    def scale(self) -> float:
        return 1.0 / math.sqrt(self.order)

    @property
    def csr(self) -> float:
        return self.m / self.n_pixels

    @property
    def shape(self) -> tuple[int, int]:
        return self.m, self.order

    def has_dc_row(self) -> bool:
        return bool(np.any(self.selected_rows == 0))

    def pad(self, image: np.ndarray) -> np.ndarray:
        """Vectorise an (n_y, n_x) image row-major and zero-pad to ``order``."""
        flat = np.asarray(image, dtype=np.float64).reshape(-1)
        if flat.size != self.n_pixels:
            raise ValueError(f"image has {flat.size} pixels, operator expects {self.n_pixels}")
        out = np.zeros(self.order)
        out[: flat.size] = flat
        return out

    def crop(self, vec: np.ndarray) -> np.ndarray:
        """Drop pad entries and reshape to (n_y, n_x)."""
        return np.asarray(vec)[: self.n_pixels].reshape(self.n_y, self.n_x)

    def dense(self) -> np.ndarray:
        """Explicit matrix; only sensible for small orders."""
        a = np.empty((self.m, self.order))
        a[:, self.permutation] = sylvester(self.order)[self.selected_rows] * self.scale
        return a


def forward(op: HadamardOperator, x: np.ndarray) -> np.ndarray:
    """y = A x for a length-``order`` vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (op.order,):
        raise ValueError(f"expected vector of length {op.order}, got shape {x.shape}")
    return fwht(x[op.permutation])[op.selected_rows] * op.scale


def adjoint(op: HadamardOperator, y: np.ndarray) -> np.ndarray:
    """A^T y; since A A^T = I this is also the minimum-norm solution of A x = y."""
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (op.m,):
        raise ValueError(f"expected vector of length {op.m}, got shape {y.shape}")
    full = np.zeros(op.order)
    full[op.selected_rows] = y
    return fwht(full)[op._inverse] * op.scale


def measurement_count(n_pixels: int, csr: float) -> int:
    if not (0.0 < csr <= 1.0) or not math.isfinite(csr):
        raise ValueError(f"csr must lie in (0, 1], got {csr}")
    m = math.floor(csr * n_pixels + 0.5)
    return min(max(m, 1), n_pixels)


def operator_from_seeds(n_x: int, n_y: int, m: int, perm_seed: int, row_seed: int) -> HadamardOperator:
    """Rebuild an operator from the values stored in a measurement file."""
    if n_x < 1 or n_y < 1:
        raise ValueError(f"image dims must be positive, got {n_x}x{n_y}")
    order = next_power_of_two(n_x * n_y)
    if not 1 <= m <= n_x * n_y:
        raise ValueError(f"M={m} outside [1, {n_x * n_y}]")
    perm = permutation(order, perm_seed)
    others = XorShift64Star(row_seed).sample(range(1, order), m - 1)
    rows = [0] + others
    return HadamardOperator(
        order=order,
        permutation=np.array(perm),
        selected_rows=np.array(rows),
        n_x=n_x,
        n_y=n_y,
        perm_seed=perm_seed,
        row_seed=row_seed,
    )


def build_operator(n_x: int, n_y: int, csr: float, seed: int, row_seed: int | None = None) -> HadamardOperator:
    """Seeded operator with M = round(csr * n_x * n_y) rows, always including row 0.

    The permutation comes from ``seed``; the other M-1 rows are drawn without
    replacement from a second stream seeded with ``row_seed`` (default
    ``seed + 1``).
    """
    m = measurement_count(n_x * n_y, csr)
    if row_seed is None:
        row_seed = (seed + 1) & MASK64
    return operator_from_seeds(n_x, n_y, m, seed, row_seed)
