import struct

import numpy as np
import pytest

from xdwm.io import (FormatError, iter_frames, read_frame_header, read_trajectory_csv,
                     write_frames, write_trajectory_csv)

CELL = (2e-9, 2e-9, 1e-9)


def _frames(rng, shape=(1, 3, 5), n=3):
    out = []
    for k in range(n):
        m = rng.standard_normal((3,) + shape)
        out.append((k * 1e-11, m / np.linalg.norm(m, axis=0)))
    return out


def test_csv_round_trip(tmp_path, rng):
    frames = _frames(rng)
    occ = np.ones((1, 3, 5), bool)
    occ[0, 0, 0] = False
    p = tmp_path / "t.csv"
    write_trajectory_csv(p, frames, occ, CELL, meta=["run: test"])
    back = read_trajectory_csv(p, occ.shape)
    assert [t for t, _ in back] == [t for t, _ in frames]
    for (_, a), (_, b) in zip(frames, back):
        assert np.array_equal(b[:, occ], a[:, occ])
        assert np.all(b[:, ~occ] == 0)
    lines = p.read_text().splitlines()
    assert lines[:3] == ["# xdwm-trajectory 1", "# run: test", "cell,x,y,z,mx,my,mz,t"]


def test_csv_version_checked(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("# xdwm-trajectory 2\ncell,x,y,z,mx,my,mz,t\n")
    with pytest.raises(FormatError):
        read_trajectory_csv(p, (1, 1, 1))


def test_binary_round_trip(tmp_path, rng):
    frames = _frames(rng, (2, 3, 4))
    p = tmp_path / "f.xdwmf"
    write_frames(p, frames, CELL)
    assert read_frame_header(p) == (1, (2, 3, 4), CELL)
    back = list(iter_frames(p))
    assert len(back) == 3
    for (ta, a), (tb, b) in zip(frames, back):
        assert ta == tb
        assert np.array_equal(b, a.astype(np.float32))
    assert p.stat().st_size == 7 + 1 + 12 + 24 + 3 * (8 + 4 * 3 * 24)


def test_binary_errors(tmp_path, rng):
    p = tmp_path / "f.xdwmf"
    write_frames(p, _frames(rng), CELL)
    raw = bytearray(p.read_bytes())
    bad = tmp_path / "bad"
    bad.write_bytes(b"NOTFRAM" + bytes(raw[7:]))
    with pytest.raises(FormatError):
        list(iter_frames(bad))
    raw[7] = 9
    bad.write_bytes(bytes(raw))
    with pytest.raises(FormatError, match="version"):
        list(iter_frames(bad))
    bad.write_bytes(p.read_bytes()[:-5])
    with pytest.raises(FormatError, match="truncated"):
        list(iter_frames(bad))
    with pytest.raises(FormatError):
        write_frames(p, [], CELL)
    assert struct.calcsize("<7sB3I3d") == 44
