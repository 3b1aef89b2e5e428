"""Binary snapshot files for interface fields.

Format ``MSK1``, fixed 32-byte little-endian header followed by the raw
sample block:

====== ====== =====================================
offset size   content
====== ====== =====================================
0      4      magic ``b"MSK1"``
4      1      format version (1)
5      1      interface dimension d
6      1      flags (bit 0: affine slope block present)
7      1      reserved (0)
8      8      period L, float64
16     8      samples per axis N, uint64
24     8      reserved (0)
====== ====== =====================================

Then N**d float64 values in C order, then d float64 slope components when
bit 0 of flags is set.  Round trips are bit-exact: the payload is the raw
IEEE sample block, no text conversion anywhere.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .grid import GridSpec, InterfaceField

__all__ = ["save_field", "load_field", "export_csv"]

_MAGIC = b"MSK1"
_VERSION = 1
_HEADER = struct.Struct("<4sBBBBdQ8x")
_FLAG_AFFINE = 0x01


def save_field(path: str | Path, field: InterfaceField) -> None:
    """Write ``field`` to ``path`` in MSK1 format."""
    g = field.grid
    flags = _FLAG_AFFINE if field.affine_slope is not None else 0
    header = _HEADER.pack(_MAGIC, _VERSION, g.d, flags, 0, g.L, g.N)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(field.values, dtype="<f8").tobytes())
        if field.affine_slope is not None:
            fh.write(np.asarray(field.affine_slope, dtype="<f8").tobytes())


def load_field(path: str | Path) -> InterfaceField:
    """Read an MSK1 snapshot back into an :class:`InterfaceField`."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: truncated header ({len(raw)} bytes)")
    magic, version, d, flags, _, L, N = _HEADER.unpack_from(raw)
    if magic != _MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    if version != _VERSION:
        raise ValueError(f"{path}: unsupported version {version}")
    if d not in (1, 2):
        raise ValueError(f"{path}: bad dimension {d}")
    grid = GridSpec(d=d, N=int(N), L=float(L))
    nval = grid.npoints
    need = _HEADER.size + 8 * nval + (8 * d if flags & _FLAG_AFFINE else 0)
    if len(raw) != need:
        raise ValueError(f"{path}: expected {need} bytes, found {len(raw)}")
    vals = np.frombuffer(
        raw, dtype="<f8", count=nval, offset=_HEADER.size
    ).reshape(grid.shape)
    slope = None
    if flags & _FLAG_AFFINE:
        slope = np.frombuffer(raw, dtype="<f8", count=d, offset=_HEADER.size + 8 * nval)
        slope = tuple(float(a) for a in slope)
    return InterfaceField(grid, vals.copy(), slope)


def export_csv(path: str | Path, field: InterfaceField) -> None:
    """Write samples as CSV: ``i,x,f`` (d=1) or ``i,j,x,y,f`` (d=2), C order.

    Floats are written with ``repr`` so the text round-trips the exact
    double.  The affine tilt, if any, is recorded in a comment line.
    """
    g = field.grid
    with open(path, "w", newline="") as fh:
        if field.affine_slope is not None:
            slopes = ",".join(repr(a) for a in field.affine_slope)
            fh.write(f"# affine_slope,{slopes}\n")
        # item() detaches numpy scalars; their repr would not parse as CSV.
        ax = [v.item() for v in g.axis()]
        if g.d == 1:
            fh.write("i,x,f\n")
            for i in range(g.N):
                fh.write(f"{i},{ax[i]!r},{field.values[i].item()!r}\n")
        else:
            fh.write("i,j,x,y,f\n")
            for i in range(g.N):
                for j in range(g.N):
                    fh.write(
                        f"{i},{j},{ax[i]!r},{ax[j]!r},{field.values[i, j].item()!r}\n"
                    )
