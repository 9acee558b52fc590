"""Trajectory snapshot formats.

CSV: a version line ``# xdwm-trajectory 1``, optional ``# key: value``
metadata lines, then columns ``cell,x,y,z,mx,my,mz,t`` with one row per
occupied cell and snapshot.

Binary frames (little endian)::

    magic   b"XDWMFRM"      7 bytes
    version uint8           1
    shape   3 x uint32      (nz, ny, nx)
    cell    3 x float64     (dx, dy, dz)
    then per frame:
    time    float64
    m       3*nz*ny*nx float32, component-major

Unoccupied cells are written as zeros.
"""

from __future__ import annotations

import csv
import struct
from typing import Iterable, Iterator, List, Sequence, Tuple

import numpy as np

CSV_VERSION = 1
FRAME_VERSION = 1
MAGIC = b"XDWMFRM"
_HEADER = struct.Struct("<7sB3I3d")


class FormatError(ValueError):
    pass


def _coords(shape, cell):
    nz, ny, nx = shape
    z, y, x = np.meshgrid((np.arange(nz) + 0.5) * cell[2], (np.arange(ny) + 0.5) * cell[1],
                          (np.arange(nx) + 0.5) * cell[0], indexing="ij")
    return x, y, z


def write_trajectory_csv(path, frames: Iterable[Tuple[float, np.ndarray]], occupancy: np.ndarray,
                         cell, meta: Sequence[str] = ()):
    occ = np.asarray(occupancy, dtype=bool)
    x, y, z = _coords(occ.shape, cell)
    idx = np.flatnonzero(occ.ravel())
    with open(path, "w", newline="") as fh:
        fh.write(f"# xdwm-trajectory {CSV_VERSION}\n")
        for line in meta:
            fh.write(f"# {line}\n")
        w = csv.writer(fh)
        w.writerow(["cell", "x", "y", "z", "mx", "my", "mz", "t"])
        for t, m in frames:
            flat = np.asarray(m).reshape(3, -1)
            for i in idx:
                w.writerow([int(i), repr(float(x.flat[i])), repr(float(y.flat[i])),
                            repr(float(z.flat[i])), repr(float(flat[0, i])),
                            repr(float(flat[1, i])), repr(float(flat[2, i])), repr(float(t))])


def read_trajectory_csv(path, shape) -> List[Tuple[float, np.ndarray]]:
    """Frames as (t, m) with m of shape (3, *shape); absent cells are zero."""
    with open(path) as fh:
        first = fh.readline().split()
        if first[:2] != ["#", "xdwm-trajectory"] or int(first[2]) != CSV_VERSION:
            raise FormatError("not an xdwm-trajectory v1 file")
        lines = [ln for ln in fh if not ln.startswith("#")]
    rows = list(csv.DictReader(lines))
    n = int(np.prod(shape))
    frames: dict = {}
    for r in rows:
        t = float(r["t"])
        m = frames.setdefault(t, np.zeros((3, n)))
        i = int(r["cell"])
        m[:, i] = (float(r["mx"]), float(r["my"]), float(r["mz"]))
    return [(t, m.reshape((3,) + tuple(shape))) for t, m in frames.items()]


def write_frames(path, frames: Iterable[Tuple[float, np.ndarray]], cell):
    frames = list(frames)
    if not frames:
        raise FormatError("no frames to write")
    shape = frames[0][1].shape[1:]
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, FRAME_VERSION, *shape, *cell))
        for t, m in frames:
            if m.shape[1:] != shape:
                raise FormatError("frames differ in shape")
            fh.write(struct.pack("<d", t))
            fh.write(np.ascontiguousarray(m, dtype="<f4").tobytes())


def iter_frames(path) -> Iterator[Tuple[float, np.ndarray]]:
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) != _HEADER.size:
            raise FormatError("truncated header")
        magic, version, nz, ny, nx, *_ = _HEADER.unpack(head)
        if magic != MAGIC:
            raise FormatError("bad magic")
        if version != FRAME_VERSION:
            raise FormatError(f"unsupported frame version {version}")
        size = 3 * nz * ny * nx * 4
        while True:
            tb = fh.read(8)
            if not tb:
                return
            body = fh.read(size)
            if len(tb) != 8 or len(body) != size:
                raise FormatError("truncated frame")
            yield struct.unpack("<d", tb)[0], np.frombuffer(body, "<f4").reshape(3, nz, ny, nx)


def read_frame_header(path):
    with open(path, "rb") as fh:
        magic, version, nz, ny, nx, dx, dy, dz = _HEADER.unpack(fh.read(_HEADER.size))
    if magic != MAGIC:
        raise FormatError("bad magic")
    return version, (nz, ny, nx), (dx, dy, dz)
