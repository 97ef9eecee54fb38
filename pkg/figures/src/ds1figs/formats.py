"""Parsers for the solver's output files.

Implemented against the documented formats only (no dependency on the
solver package):

* field snapshot: little-endian binary; magic "DS1F", version u32,
  n_xi u64, n_eta u64, l_xi f64, l_eta f64, time f64, representation u8
  (0 physical, 1 fourier), then n_xi*n_eta interleaved (re, im) f64 pairs
  in row-major xi-major order;
* norm series: CSV with header t,linf,mass,l2gradxi,l2gradeta,energy,delta;
* fit reports: JSON documents with a/b/t_star per fitted norm.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAGIC = b"DS1F"
HEADER = struct.Struct("<4sIQQdddB")
CSV_HEADER = "t,linf,mass,l2gradxi,l2gradeta,energy,delta"


class FormatError(Exception):
    """Malformed input file; the message names the offending field/offset."""


@dataclass
class Snapshot:
    n_xi: int
    n_eta: int
    l_xi: float
    l_eta: float
    time: float
    representation: str  # "physical" | "fourier"
    values: np.ndarray

    @property
    def xi(self) -> np.ndarray:
        j = np.arange(self.n_xi)
        return self.l_xi * (-np.pi + 2.0 * np.pi * j / self.n_xi)

    @property
    def eta(self) -> np.ndarray:
        j = np.arange(self.n_eta)
        return self.l_eta * (-np.pi + 2.0 * np.pi * j / self.n_eta)

    def header_bytes(self) -> bytes:
        """Re-serialize the header exactly as stored."""
        rep = 0 if self.representation == "physical" else 1
        return HEADER.pack(
            MAGIC, 1, self.n_xi, self.n_eta, self.l_xi, self.l_eta, self.time, rep
        )


def read_snapshot(path: str | Path) -> Snapshot:
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < HEADER.size:
        raise FormatError(f"{path}: file shorter than the {HEADER.size}-byte header")
    magic, version, n_xi, n_eta, l_xi, l_eta, time, rep = HEADER.unpack_from(raw, 0)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r} at offset 0 (expected {MAGIC!r})")
    if version != 1:
        raise FormatError(f"{path}: unsupported version {version} at offset 4")
    if rep not in (0, 1):
        raise FormatError(f"{path}: representation byte {rep} at offset {HEADER.size - 1}")
    count = n_xi * n_eta
    need = HEADER.size + 16 * count
    if len(raw) < need:
        raise FormatError(
            f"{path}: payload truncated at offset {len(raw)} (need {need} bytes "
            f"for {n_xi} x {n_eta} values)"
        )
    values = np.frombuffer(raw, dtype="<c16", count=count, offset=HEADER.size)
    return Snapshot(
        n_xi=n_xi,
        n_eta=n_eta,
        l_xi=l_xi,
        l_eta=l_eta,
        time=time,
        representation="physical" if rep == 0 else "fourier",
        values=values.reshape(n_xi, n_eta),
    )


@dataclass
class NormSeries:
    t: np.ndarray
    linf: np.ndarray
    mass: np.ndarray
    l2gradxi: np.ndarray
    l2gradeta: np.ndarray
    energy: np.ndarray
    delta: np.ndarray


def read_norms(path: str | Path) -> NormSeries:
    path = Path(path)
    lines = path.read_text().strip().split("\n")
    if not lines or lines[0].strip() != CSV_HEADER:
        raise FormatError(f"{path}: header line {lines[0]!r} (expected {CSV_HEADER!r})")
    cols = [[] for _ in range(7)]
    for i, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 7:
            raise FormatError(f"{path}: line {i} has {len(parts)} fields, expected 7")
        try:
            for c, p in zip(cols, parts):
                c.append(float(p))
        except ValueError as exc:
            raise FormatError(f"{path}: line {i}: {exc}") from exc
    return NormSeries(*(np.asarray(c) for c in cols))


def read_fits(path: str | Path) -> dict:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON at position {exc.pos}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise FormatError(f"{path}: top-level JSON value must be an object")
    return doc
