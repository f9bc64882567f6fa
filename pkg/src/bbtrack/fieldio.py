"""Binary snapshot format for staggered fields.

Layout: magic ``BBTFLD1\\0``; u32 LE nx, ny; f64 LE hx, hy; u_faces then
v_faces as row-major f64 LE.
"""

import struct

import numpy as np

from .errors import FormatError, IoError
from .grid import Grid, StaggeredField

MAGIC = b"BBTFLD1\x00"
_HEADER = struct.Struct("<8sIIdd")


def write_field(path, f):
    g = f.grid
    payload = _HEADER.pack(MAGIC, g.nx, g.ny, g.hx, g.hy)
    payload += np.ascontiguousarray(f.u_faces, dtype="<f8").tobytes()
    payload += np.ascontiguousarray(f.v_faces, dtype="<f8").tobytes()
    try:
        with open(path, "wb") as fh:
            fh.write(payload)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def read_header(raw):
    if len(raw) < _HEADER.size:
        raise FormatError("file shorter than header")
    magic, nx, ny, hx, hy = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    return nx, ny, hx, hy


def read_field(path, grid=None):
    """Read a snapshot; ``grid`` supplies T/nt (and is checked against nx, ny)."""
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    nx, ny, hx, hy = read_header(raw)
    n_u, n_v = (nx + 1) * ny, nx * (ny + 1)
    expected = _HEADER.size + 8 * (n_u + n_v)
    if len(raw) != expected:
        raise FormatError(f"payload has {len(raw)} bytes, header implies {expected}")
    if grid is None:
        grid = Grid(nx, ny)
    elif (grid.nx, grid.ny) != (nx, ny):
        raise FormatError(f"file grid {nx}x{ny} differs from expected {grid.nx}x{grid.ny}")
    data = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size).astype(float)
    u = data[:n_u].reshape(nx + 1, ny)
    v = data[n_u:].reshape(nx, ny + 1)
    try:
        return StaggeredField(grid, u, v)
    except ValueError as exc:
        raise FormatError(str(exc)) from exc
