import numpy as np
import pytest

from muskatlab.grid import GridSpec, InterfaceField
from muskatlab.snapshots import export_csv, load_field, save_field


def test_roundtrip_bitexact_1d(tmp_path):
    g = GridSpec(d=1, N=64, L=2.0 * np.pi)
    rng = np.random.default_rng(0)
    f = InterfaceField(g, rng.standard_normal(g.shape))
    p = tmp_path / "f.msk1"
    save_field(p, f)
    back = load_field(p)
    assert back.grid == g
    assert np.array_equal(back.values, f.values)
    assert back.affine_slope is None


def test_roundtrip_bitexact_2d_with_tilt(tmp_path):
    g = GridSpec(d=2, N=16, L=1.0)
    rng = np.random.default_rng(1)
    f = InterfaceField(g, rng.standard_normal(g.shape), affine_slope=(0.5, -0.25))
    p = tmp_path / "f.msk1"
    save_field(p, f)
    back = load_field(p)
    assert np.array_equal(back.values, f.values)
    assert back.affine_slope == (0.5, -0.25)


def test_rewrite_same_bytes(tmp_path):
    g = GridSpec(d=1, N=32, L=3.0)
    f = InterfaceField.from_function(g, np.sin)
    p1, p2 = tmp_path / "a.msk1", tmp_path / "b.msk1"
    save_field(p1, f)
    save_field(p2, load_field(p1))
    assert p1.read_bytes() == p2.read_bytes()


def test_bad_magic(tmp_path):
    p = tmp_path / "bad.msk1"
    p.write_bytes(b"NOPE" + bytes(60))
    with pytest.raises(ValueError, match="magic"):
        load_field(p)


def test_truncated_header(tmp_path):
    p = tmp_path / "short.msk1"
    p.write_bytes(b"MSK1")
    with pytest.raises(ValueError, match="truncated"):
        load_field(p)


def test_truncated_payload(tmp_path):
    g = GridSpec(d=1, N=32, L=1.0)
    f = InterfaceField(g, np.zeros(g.shape))
    p = tmp_path / "cut.msk1"
    save_field(p, f)
    raw = p.read_bytes()
    p.write_bytes(raw[:-8])
    with pytest.raises(ValueError, match="bytes"):
        load_field(p)


def test_bad_version(tmp_path):
    g = GridSpec(d=1, N=32, L=1.0)
    f = InterfaceField(g, np.zeros(g.shape))
    p = tmp_path / "v.msk1"
    save_field(p, f)
    raw = bytearray(p.read_bytes())
    raw[4] = 9
    p.write_bytes(bytes(raw))
    with pytest.raises(ValueError, match="version"):
        load_field(p)


def test_csv_export_1d(tmp_path):
    g = GridSpec(d=1, N=8, L=8.0)
    f = InterfaceField(g, np.arange(8.0))
    p = tmp_path / "f.csv"
    export_csv(p, f)
    lines = p.read_text().strip().splitlines()
    assert lines[0] == "i,x,f"
    first = lines[1].split(",")
    assert int(first[0]) == 0 and float(first[1]) == 0.0 and float(first[2]) == 0.0
    assert len(lines) == 1 + g.N


def test_csv_export_2d(tmp_path):
    g = GridSpec(d=2, N=8, L=1.0)
    f = InterfaceField(g, np.zeros(g.shape))
    p = tmp_path / "f.csv"
    export_csv(p, f)
    lines = p.read_text().strip().splitlines()
    assert lines[0] == "i,j,x,y,f"
    assert len(lines) == 1 + g.npoints
