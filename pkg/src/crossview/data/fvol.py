"""Binary feature-volume files.

Layout: 4-byte magic "FVOL", three little-endian uint32 dims (W, H, C),
then W*H*C little-endian IEEE-754 float32 values with flat index
(h*W + w)*C + c, i.e. the raw bytes of a C-contiguous (H, W, C) array.
Round-trips are bit-exact for every finite float32, including negative
zero and subnormals.
"""

import struct

import numpy as np

from ..errors import BadMagic, DimensionOverflow, TruncatedFile

MAGIC = b"FVOL"
_HEADER = struct.Struct("<4sIII")
_MAX_ELEMENTS = 2**31  # guards absurd headers before allocation


def write_feature_volume(values: np.ndarray, path):
    """Write a (H, W, C) volume as float32. Non-float32 input is cast."""
    arr = np.ascontiguousarray(values, dtype="<f4")
    if arr.ndim != 3:
        raise ValueError("feature volume must be a (h, w, c) array")
    h, w, c = arr.shape
    if h == 0 or w == 0 or c == 0:
        raise DimensionOverflow(f"volume dims must be positive, got W={w} H={h} C={c}")
    with open(path, "wb") as f:
        f.write(_HEADER.pack(MAGIC, w, h, c))
        f.write(arr.tobytes())


def read_feature_volume(path) -> np.ndarray:
    with open(path, "rb") as f:
        header = f.read(_HEADER.size)
        if len(header) < _HEADER.size:
            raise TruncatedFile(f"{path}: header is {len(header)} bytes, need {_HEADER.size}")
        magic, w, h, c = _HEADER.unpack(header)
        if magic != MAGIC:
            raise BadMagic(f"{path}: expected {MAGIC!r}, found {magic!r}")
        if w == 0 or h == 0 or c == 0 or w * h * c > _MAX_ELEMENTS:
            raise DimensionOverflow(f"{path}: invalid dims W={w} H={h} C={c}")
        n_bytes = w * h * c * 4
        payload = f.read(n_bytes)
        if len(payload) < n_bytes:
            raise TruncatedFile(f"{path}: payload is {len(payload)} bytes, need {n_bytes}")
    flat = np.frombuffer(payload, dtype="<f4")
    return flat.reshape(h, w, c).copy()
