"""Binary PGM/PPM rasters and SLCI measurement files."""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .acquisition import Measurements


class FormatError(ValueError):
    """Malformed or truncated file; ``offset`` is the byte position of the problem."""

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (at byte {offset})"
        super().__init__(message)
        self.offset = offset


class BadMagicError(FormatError):
    pass


class UnsupportedVersionError(FormatError):
    pass


class SizeMismatchError(FormatError):
    pass


# --- portable pixmaps -----------------------------------------------------

_PNM_CHANNELS = {b"P5": 1, b"P6": 3}
_WS = b" \t\n\r\v\f"


def _header_tokens(buf: bytes, count: int) -> tuple[list[int], int]:
    """Read ``count`` decimal header fields after the magic; returns (values, payload offset)."""
    pos = 2
    values = []
    while len(values) < count:
        if pos >= len(buf):
            raise FormatError("truncated header", pos)
        ch = buf[pos:pos + 1]
        if ch in _WS:
            pos += 1
        elif ch == b"#":
            end = buf.find(b"\n", pos)
            if end < 0:
                raise FormatError("unterminated header comment", pos)
            pos = end + 1
        else:
            start = pos
            while pos < len(buf) and buf[pos:pos + 1].isdigit():
                pos += 1
            if start == pos:
                raise FormatError(f"unexpected header byte {ch!r}", start)
            values.append(int(buf[start:pos]))
    # exactly one whitespace byte separates maxval from the raster
    if pos >= len(buf) or buf[pos:pos + 1] not in _WS:
        raise FormatError("missing whitespace after header", pos)
    return values, pos + 1


def decode_pnm(buf: bytes) -> tuple[np.ndarray, int]:
    """Parse P5/P6 bytes into a unit-range float array and its maxval.

    Gray images come back as (h, w), colour as (h, w, 3).
    """
    magic = buf[:2]
    if magic not in _PNM_CHANNELS:
        raise BadMagicError(f"not a binary PGM/PPM file: magic {magic!r}", 0)
    channels = _PNM_CHANNELS[magic]
    (width, height, maxval), offset = _header_tokens(buf, 3)
    if width < 1 or height < 1:
        raise FormatError(f"invalid dimensions {width}x{height}", 2)
    if not 1 <= maxval <= 65535:
        raise FormatError(f"maxval {maxval} outside 1..65535", offset - 1)
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    need = width * height * channels * dtype.itemsize
    payload = buf[offset:offset + need]
    if len(payload) < need:
        raise FormatError(f"truncated raster: need {need} bytes, found {len(payload)}", offset + len(payload))
    raw = np.frombuffer(payload, dtype=dtype).reshape((height, width, channels))
    if raw.max(initial=0) > maxval:
        raise FormatError(f"sample exceeds maxval {maxval}", offset)
    img = raw.astype(np.float64) / maxval
    return (img[..., 0] if channels == 1 else img), maxval


def encode_pnm(image: np.ndarray, maxval: int = 255) -> bytes:
    """Quantise a unit-range image (values are clipped) to a P5/P6 byte string."""
    image = np.asarray(image, dtype=np.float64)
    if not 1 <= maxval <= 65535:
        raise ValueError(f"maxval must lie in 1..65535, got {maxval}")
    if image.ndim == 2:
        magic, h, w = b"P5", *image.shape
    elif image.ndim == 3 and image.shape[2] == 3:
        magic, h, w = b"P6", *image.shape[:2]
    else:
        raise ValueError(f"cannot encode image of shape {image.shape}")
    q = np.rint(np.clip(image, 0.0, 1.0) * maxval)
    dtype = ">u2" if maxval > 255 else "u1"
    header = b"%s\n%d %d\n%d\n" % (magic, w, h, maxval)
    return header + q.astype(dtype).tobytes()


def read_image(path) -> tuple[np.ndarray, int]:
    return decode_pnm(Path(path).read_bytes())


def write_image(path, image: np.ndarray, maxval: int = 255) -> None:
    Path(path).write_bytes(encode_pnm(image, maxval))


def load_array(path) -> np.ndarray:
    """Image from .npy (float64, unquantised) or from a PGM/PPM file."""
    path = Path(path)
    if path.suffix == ".npy":
        return np.load(path)
    return read_image(path)[0]


def save_array(path, image: np.ndarray, maxval: int = 65535) -> None:
    path = Path(path)
    if path.suffix == ".npy":
        np.save(path, np.asarray(image, dtype=np.float64))
    else:
        write_image(path, image, maxval)


# --- measurement files ----------------------------------------------------
#
# little-endian: magic "SLCI", version u16, n_x u32, n_y u32, channels u8,
# M u32, permutation seed u64, row seed u64, physical flag u8, g f64, f f64,
# then channels * M f64 values (channel-major).

MAGIC = b"SLCI"
VERSION = 1
_HEADER = struct.Struct("<4sHIIBIQQBdd")


def encode_measurements(meas: Measurements) -> bytes:
    header = _HEADER.pack(MAGIC, VERSION, meas.n_x, meas.n_y, meas.channels, meas.m,
                          meas.perm_seed, meas.row_seed, int(meas.physical), meas.g, meas.f)
    return header + meas.values.astype("<f8").tobytes()


def decode_measurements(buf: bytes) -> Measurements:
    if buf[:4] != MAGIC:
        raise BadMagicError(f"bad magic {buf[:4]!r}, expected {MAGIC!r}", 0)
    if len(buf) < _HEADER.size:
        raise SizeMismatchError(f"header needs {_HEADER.size} bytes, file has {len(buf)}", len(buf))
    _, version, n_x, n_y, channels, m, perm_seed, row_seed, flag, g, f = _HEADER.unpack_from(buf)
    if version != VERSION:
        raise UnsupportedVersionError(f"unsupported version {version}", 4)
    if flag not in (0, 1):
        raise FormatError(f"calibration flag must be 0 or 1, got {flag}", 35)
    need = channels * m * 8
    have = len(buf) - _HEADER.size
    if have != need:
        raise SizeMismatchError(
            f"header declares {channels}x{m} values ({need} bytes), payload has {have}", _HEADER.size)
    values = np.frombuffer(buf, dtype="<f8", offset=_HEADER.size).astype(np.float64).reshape(channels, m)
    try:
        return Measurements(values, n_x, n_y, perm_seed, row_seed, physical=bool(flag), g=g, f=f)
    except ValueError as exc:
        raise FormatError(f"inconsistent header: {exc}", 6) from exc


def write_measurements(path, meas: Measurements) -> None:
    Path(path).write_bytes(encode_measurements(meas))


def read_measurements(path) -> Measurements:
    return decode_measurements(Path(path).read_bytes())
