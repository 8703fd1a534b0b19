"""Camera simulation: ideal and physical (g/f transmittance) measurements."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .hadamard import HadamardOperator, forward, fwht, operator_from_seeds


class CalibrationError(ValueError):
    pass


@dataclass(frozen=True)
class CalibrationModel:
    """Aperture transmittances: ``g`` when an element is open, ``f`` when closed."""

    g: float = 1.0
    f: float = 0.0

    def __post_init__(self):
        if not (0.0 < self.g <= 1.0):
            raise ValueError(f"g must lie in (0, 1], got {self.g}")
        if not (0.0 <= self.f < self.g):
            raise ValueError(f"need 0 <= f < g, got f={self.f}, g={self.g}")


@dataclass
class Measurements:
    """Sensor readings for one or more colour channels plus what is needed to
    rebuild the operator that produced them.

    ``values`` has shape (channels, M). When ``physical`` is True the values
    are raw {0,1}-pattern readings and must go through :func:`calibrate`.
    """

    values: np.ndarray
    n_x: int
    n_y: int
    perm_seed: int
    row_seed: int
    physical: bool = False
    g: float = 1.0
    f: float = 0.0
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim == 1:
            v = v[None, :]
        if v.ndim != 2:
            raise ValueError(f"values must be (channels, M), got shape {v.shape}")
        if not 0.0 < v.shape[1] / (self.n_x * self.n_y) <= 1.0:
            raise ValueError(f"M={v.shape[1]} incompatible with {self.n_x}x{self.n_y} image")
        self.values = v

    @property
    def channels(self) -> int:
        return self.values.shape[0]

    @property
    def m(self) -> int:
        return self.values.shape[1]

    @property
    def csr(self) -> float:
        return self.m / (self.n_x * self.n_y)

    def channel(self, c: int) -> np.ndarray:
        return self.values[c]

    def operator(self) -> HadamardOperator:
        return operator_from_seeds(self.n_x, self.n_y, self.m, self.perm_seed, self.row_seed)


def _check_plane(op: HadamardOperator, image: np.ndarray) -> np.ndarray:
    image = np.asarray(image, dtype=np.float64)
    if image.shape != (op.n_y, op.n_x):
        raise ValueError(f"image shape {image.shape} does not match operator ({op.n_y}, {op.n_x})")
    if not np.all(np.isfinite(image)):
        raise ValueError("image contains non-finite values")
    return image


def _wrap(op: HadamardOperator, values: np.ndarray, **kw) -> Measurements:
    return Measurements(values, op.n_x, op.n_y, op.perm_seed, op.row_seed, **kw)


def sense_ideal(op: HadamardOperator, image: np.ndarray, noise_sigma: float = 0.0,
                noise_seed: int = 0) -> Measurements:
    """y = A x + n with i.i.d. Gaussian n of standard deviation ``noise_sigma``."""
    if noise_sigma < 0:
        raise ValueError(f"noise_sigma must be >= 0, got {noise_sigma}")
    image = _check_plane(op, image)
    y = forward(op, op.pad(image))
    if noise_sigma > 0:
        y = y + np.random.default_rng(noise_seed).normal(0.0, noise_sigma, size=y.shape)
    return _wrap(op, y, extra={"noise_sigma": noise_sigma, "noise_seed": noise_seed})


def _row_zero_index(op: HadamardOperator) -> int:
    hits = np.flatnonzero(op.selected_rows == 0)
    if hits.size == 0:
        raise CalibrationError("operator lacks the all-open row 0; the image sum cannot be measured")
    return int(hits[0])


def sense_physical(op: HadamardOperator, image: np.ndarray, cal: CalibrationModel) -> Measurements:
    """Raw readings z_m = (g - f) * A+_m x + f * sum(x), A+ the {0,1} pattern."""
    _row_zero_index(op)
    image = _check_plane(op, image)
    x = op.pad(image)
    total = x.sum()
    pm = fwht(x[op.permutation])[op.selected_rows]  # +/-1 rows, unnormalised
    plus = 0.5 * (pm + total)
    z = (cal.g - cal.f) * plus + cal.f * total
    return _wrap(op, z, physical=True, g=cal.g, f=cal.f)


def calibrate(z: Measurements, cal: CalibrationModel | None = None,
              op: HadamardOperator | None = None) -> Measurements:
    """Convert raw physical readings to measurements of the orthonormal operator."""
    if not z.physical:
        return z
    g, f = (cal.g, cal.f) if cal is not None else (z.g, z.f)
    if g == f or g == 0:
        raise CalibrationError(f"degenerate calibration: g={g}, f={f}")
    op = op or z.operator()
    if op.m != z.m:
        raise ValueError(f"operator has {op.m} rows, measurements have {z.m}")
    r0 = _row_zero_index(op)
    total = z.values[:, r0:r0 + 1] / g
    plus = (z.values - f * total) / (g - f)
    y = (2.0 * plus - total) * op.scale
    return replace(z, values=y, physical=False, g=1.0, f=0.0)


def sense_rgb(op: HadamardOperator, channels, noise_sigma: float = 0.0, noise_seed: int = 0,
              cal: CalibrationModel | None = None) -> Measurements:
    """Measure each colour plane separately with the same operator.

    ``channels`` is a sequence of planes or an (h, w, 3) / (3, h, w) array.
    Channel c uses noise seed ``noise_seed + c``.
    """
    planes = _split_planes(channels)
    shapes = {p.shape for p in planes}
    if len(shapes) != 1:
        raise ValueError(f"channel planes differ in size: {sorted(shapes)}")
    if cal is not None:
        parts = [sense_physical(op, p, cal) for p in planes]
    else:
        parts = [sense_ideal(op, p, noise_sigma, noise_seed + c) for c, p in enumerate(planes)]
    return replace(parts[0], values=np.vstack([p.values for p in parts]))


def _split_planes(channels) -> list[np.ndarray]:
    if isinstance(channels, np.ndarray):
        if channels.ndim == 2:
            return [channels]
        if channels.ndim == 3 and channels.shape[-1] in (1, 3) and channels.shape[0] not in (1, 3):
            return [channels[..., c] for c in range(channels.shape[-1])]
        return [channels[c] for c in range(channels.shape[0])]
    return [np.asarray(p, dtype=np.float64) for p in channels]
