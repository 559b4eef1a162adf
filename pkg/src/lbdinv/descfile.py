"""Binary container for streamed descriptors ("LBD1").

Layout, all integers little-endian::

    header  4s   magic b"LBD1"
            u16  version (1)
            u8   binary flag (1 = sign payload, 0 = float64 payload)
            u8   reserved (0)
            u64  pattern id (FNV-1a 64 of the pattern JSON)
            u32  patch side
            u32  M
            u32  image width
            u32  image height
            u32  record count
    record  u32  x, u32 y   patch centre in image pixels
            payload: ceil(M/8) bytes, bit j in byte j//8, LSB first,
            1 <-> +1 and 0 <-> -1; or M float64 values.
"""
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import FormatError
from .sensing import Descriptor

__all__ = ["DescriptorSet", "write_descriptors", "read_descriptors", "pack_signs", "unpack_signs",
           "encode", "decode", "MAGIC", "VERSION"]

MAGIC = b"LBD1"
VERSION = 1
_HEADER = struct.Struct("<4sHBBQIIIII")
_XY = struct.Struct("<II")


@dataclass(frozen=True, eq=False)
class DescriptorSet:
    """Descriptors of one image plus their patch centres ``(x, y)``."""

    width: int
    height: int
    patch_side: int
    centers: np.ndarray  # (n, 2) int, columns x, y
    descriptor: Descriptor  # payload (n, M)


def pack_signs(signs) -> np.ndarray:
    bits = (np.asarray(signs) > 0).astype(np.uint8)
    return np.packbits(bits, axis=-1, bitorder="little")


def unpack_signs(packed, m: int) -> np.ndarray:
    bits = np.unpackbits(np.asarray(packed, dtype=np.uint8), axis=-1, count=m, bitorder="little")
    return np.where(bits == 1, 1, -1).astype(np.int8)


def encode(dset: DescriptorSet) -> bytes:
    d = dset.descriptor
    payload = np.atleast_2d(d.payload)
    n, m = payload.shape
    centers = np.asarray(dset.centers, dtype=np.int64).reshape(n, 2)
    parts = [_HEADER.pack(MAGIC, VERSION, int(d.binary), 0, int(d.pattern_id, 16),
                          dset.patch_side, m, dset.width, dset.height, n)]
    body = pack_signs(payload) if d.binary else payload.astype("<f8")
    for (x, y), rec in zip(centers, body):
        parts.append(_XY.pack(int(x), int(y)))
        parts.append(rec.tobytes())
    return b"".join(parts)


def decode(data: bytes) -> DescriptorSet:
    if len(data) < _HEADER.size:
        raise FormatError("file too short for an LBD1 header")
    magic, version, binary, _, pid, side, m, width, height, n = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"unsupported version {version}")
    rec_payload = (m + 7) // 8 if binary else 8 * m
    rec_size = _XY.size + rec_payload
    if len(data) != _HEADER.size + n * rec_size:
        raise FormatError("record section size does not match the header")
    rec = np.frombuffer(data, dtype=np.uint8, offset=_HEADER.size).reshape(n, rec_size)
    centers = rec[:, :_XY.size].copy().view("<u4").astype(np.int64).reshape(n, 2)
    raw = rec[:, _XY.size:]
    if binary:
        payload = unpack_signs(raw, m)
    else:
        payload = raw.copy().view("<f8").astype(np.float64).reshape(n, m)
    return DescriptorSet(width, height, side, centers, Descriptor(payload, f"{pid:016x}", bool(binary)))


def write_descriptors(path, dset: DescriptorSet) -> None:
    Path(path).write_bytes(encode(dset))


def read_descriptors(path) -> DescriptorSet:
    return decode(Path(path).read_bytes())
