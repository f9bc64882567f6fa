import os

import numpy as np
import pytest

from bbtrack.errors import FormatError, IoError
from bbtrack.fieldio import MAGIC, read_field, write_field
from bbtrack.grid import Grid

from conftest import random_field


def test_roundtrip_bitwise(tmp_path, rng):
    f = random_field(Grid(9, 7), rng)
    p = tmp_path / "f.fld"
    write_field(p, f)
    h = read_field(p)
    assert np.array_equal(h.u_faces, f.u_faces) and np.array_equal(h.v_faces, f.v_faces)
    assert (h.grid.nx, h.grid.ny) == (9, 7)


def test_bad_magic(tmp_path, rng):
    p = tmp_path / "f.fld"
    write_field(p, random_field(Grid(4, 4), rng))
    raw = bytearray(p.read_bytes())
    raw[:8] = b"NOTMAGIC"
    p.write_bytes(bytes(raw))
    with pytest.raises(FormatError):
        read_field(p)


def test_truncated_payload(tmp_path, rng):
    p = tmp_path / "f.fld"
    write_field(p, random_field(Grid(4, 4), rng))
    p.write_bytes(p.read_bytes()[:-8])
    with pytest.raises(FormatError):
        read_field(p)
    p.write_bytes(MAGIC)
    with pytest.raises(FormatError):
        read_field(p)


def test_grid_mismatch(tmp_path, rng):
    p = tmp_path / "f.fld"
    write_field(p, random_field(Grid(4, 4), rng))
    with pytest.raises(FormatError):
        read_field(p, Grid(5, 4))


def test_missing_file_and_unwritable(tmp_path, rng):
    with pytest.raises(IoError):
        read_field(tmp_path / "absent.fld")
    with pytest.raises(IoError):
        write_field(os.path.join(tmp_path, "no", "dir", "f.fld"), random_field(Grid(4, 4), rng))
