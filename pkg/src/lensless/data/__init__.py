"""Bundled test images (downsampled scikit-image ``camera`` and ``astronaut``, both public domain / CC0)."""

from importlib import resources

import numpy as np

from ..fileio import decode_pnm

FIXTURES = ("camera64.pgm", "camera128.pgm", "camera256.pgm", "astronaut64.ppm")


def fixture_path(name: str):
    return resources.files(__name__) / name


def load_fixture(name: str) -> np.ndarray:
    if name not in FIXTURES:
        raise KeyError(f"unknown fixture {name!r}; available: {FIXTURES}")
    return decode_pnm(fixture_path(name).read_bytes())[0]
