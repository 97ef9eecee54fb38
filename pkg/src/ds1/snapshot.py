"""Field snapshot file format.

Binary, little-endian: magic "DS1F", format version u32, n_xi u64,
n_eta u64, l_xi f64, l_eta f64, time f64, representation u8
(0 = physical, 1 = fourier), then n_xi*n_eta interleaved (re, im) f64
pairs in row-major xi-major order.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .grid import ComplexField, Representation, SpectralGrid

MAGIC = b"DS1F"
VERSION = 1
_HEADER = struct.Struct("<4sIQQdddB")


class SnapshotError(Exception):
    """Malformed snapshot file."""


def write_snapshot(path: str | Path, field: ComplexField, time: float = 0.0) -> None:
    g = field.grid
    rep = 0 if field.representation is Representation.PHYSICAL else 1
    header = _HEADER.pack(MAGIC, VERSION, g.n_xi, g.n_eta, g.l_xi, g.l_eta, float(time), rep)
    payload = np.ascontiguousarray(field.values, dtype="<c16").tobytes()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)


def read_snapshot(path: str | Path) -> tuple[ComplexField, float]:
    """Read a snapshot; returns (field, time)."""
    with open(path, "rb") as fh:
        raw = fh.read(_HEADER.size)
        if len(raw) != _HEADER.size:
            raise SnapshotError(f"{path}: truncated header ({len(raw)} bytes)")
        magic, version, n_xi, n_eta, l_xi, l_eta, time, rep = _HEADER.unpack(raw)
        if magic != MAGIC:
            raise SnapshotError(f"{path}: bad magic {magic!r}")
        if version != VERSION:
            raise SnapshotError(f"{path}: unsupported format version {version}")
        if rep not in (0, 1):
            raise SnapshotError(f"{path}: bad representation byte {rep}")
        count = n_xi * n_eta
        data = np.fromfile(fh, dtype="<c16", count=count)
    if data.size != count:
        raise SnapshotError(f"{path}: payload truncated ({data.size} of {count} values)")
    grid = SpectralGrid(n_xi=n_xi, n_eta=n_eta, l_xi=l_xi, l_eta=l_eta)
    representation = Representation.PHYSICAL if rep == 0 else Representation.FOURIER
    field = ComplexField(grid, representation, data.reshape(n_xi, n_eta))
    return field, time
