"""Flat binary parameter checkpoints.

Layout, all integers little-endian uint32 and all scalars little-endian
float64:

    magic b"STFTSEP1"
    tensor count
    per tensor: name length, utf-8 name bytes, rank, dims, scalars

Tensors are written in sorted name order so identical contents give
identical bytes. Values are widened to float64 on save, which is exact
for the float32 training parameters, so save -> load -> save round-trips
bit-exactly and loading back into a float32 network restores the
original bits.
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import FormatError, SpecError

MAGIC = b"STFTSEP1"

_U32 = struct.Struct("<I")


def save_checkpoint(path, tensors: dict) -> None:
    """Write name -> array mappings; arrays are stored as float64."""
    blob = bytearray()
    blob += MAGIC
    blob += _U32.pack(len(tensors))
    for name in sorted(tensors):
        arr = np.ascontiguousarray(tensors[name], dtype="<f8")
        encoded = name.encode("utf-8")
        blob += _U32.pack(len(encoded))
        blob += encoded
        blob += _U32.pack(arr.ndim)
        for dim in arr.shape:
            blob += _U32.pack(dim)
        blob += arr.tobytes()
    with open(path, "wb") as fh:
        fh.write(blob)


class _Reader:
    def __init__(self, data: bytes, path):
        self.data = data
        self.pos = 0
        self.path = path

    def take(self, count: int) -> bytes:
        if self.pos + count > len(self.data):
            raise FormatError(f"truncated checkpoint: {self.path}")
        chunk = self.data[self.pos:self.pos + count]
        self.pos += count
        return chunk

    def u32(self) -> int:
        return _U32.unpack(self.take(4))[0]


def load_checkpoint(path) -> dict:
    """Read a checkpoint as name -> float64 array, validating the layout."""
    with open(path, "rb") as fh:
        data = fh.read()
    r = _Reader(data, path)
    if r.take(len(MAGIC)) != MAGIC:
        raise FormatError(f"bad checkpoint magic in {path}")
    out = {}
    for _ in range(r.u32()):
        name = r.take(r.u32()).decode("utf-8")
        rank = r.u32()
        shape = tuple(r.u32() for _ in range(rank))
        count = int(np.prod(shape, dtype=np.int64)) if rank else 1
        arr = np.frombuffer(r.take(8 * count), dtype="<f8").reshape(shape)
        out[name] = arr.copy()
    if r.pos != len(data):
        raise FormatError(f"trailing bytes in checkpoint {path}")
    return out


def network_tensors(net, extra: dict | None = None) -> dict:
    """Everything a checkpoint carries: params, BN buffers, extras."""
    out = {}
    out.update(net.params())
    out.update(net.state())
    if extra:
        out.update(extra)
    return out


def restore_network(net, tensors: dict) -> dict:
    """Copy checkpoint values into a built network, in place.

    Every parameter and state buffer of the network must be present with
    a matching shape. Returns the leftover (non-network) tensors, e.g.
    the normalization statistics.
    """
    remaining = dict(tensors)
    targets = {}
    targets.update(net.params())
    targets.update(net.state())
    for name, dest in targets.items():
        if name not in remaining:
            raise SpecError(f"checkpoint is missing tensor {name!r}")
        src = remaining.pop(name)
        if src.shape != dest.shape:
            raise SpecError(
                f"checkpoint tensor {name!r} has shape {src.shape}, "
                f"network expects {dest.shape}"
            )
        dest[...] = src.astype(dest.dtype)
    return remaining
