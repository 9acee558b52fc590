"""Anisotropic-magnetoresistance resistance of wires and arbitrary masks.

Every cell is a resistor ``rho * L / A * (1 + s * AMRc * c)`` where ``c``
is the mean dot product of the cell's moment with its neighbours along the
flow axis (the cell itself when it has none). ``s = -1`` by default so a
misaligned neighbourhood, i.e. a domain wall, raises the resistance and an
alternating bit pattern is the most resistive one. ``s = +1`` is the
literal ``(1 + AMRc m1.m2)`` form, which ranks the uniform wire highest.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.sparse.csgraph import connected_components

from .geometry import Mesh

AXES = {"x": 2, "y": 1, "z": 0}


class NonRectangularRegion(ValueError):
    pass


class DisconnectedTerminals(RuntimeError):
    pass


@dataclass(frozen=True)
class ResistanceModel:
    rho: float = 2.0e-7
    AMRc: float = 0.014
    sign: int = -1

    def __post_init__(self):
        if not self.rho > 0:
            raise ValueError("rho must be positive")
        if not 0 <= self.AMRc < 1:
            raise ValueError("AMRc must lie in [0, 1)")
        if self.sign not in (-1, 1):
            raise ValueError("sign must be +1 or -1")

    @classmethod
    def from_params(cls, p, sign: int = -1) -> "ResistanceModel":
        return cls(p.rho, p.AMRc, sign)


def _geom(cell, axis: str) -> float:
    dx, dy, dz = cell
    if axis == "x":
        return dx / (dy * dz)
    if axis == "y":
        return dy / (dx * dz)
    if axis == "z":
        return dz / (dx * dy)
    raise ValueError(f"unknown flow axis {axis!r}")


def link_resistance(m1, m2, cell=(2e-9, 2e-9, 1e-9), model: ResistanceModel = ResistanceModel(),
                    axis: str = "x") -> float:
    """Resistance of one cell between moments ``m1`` and ``m2`` (ohm)."""
    d = float(np.dot(np.asarray(m1, float), np.asarray(m2, float)))
    return model.rho * _geom(cell, axis) * (1.0 + model.sign * model.AMRc * d)


def cell_resistances(m: np.ndarray, occ: np.ndarray, cell, model: ResistanceModel,
                     axis: str = "x") -> np.ndarray:
    """Per-cell resistance for flow along ``axis`` (inf outside ``occ``)."""
    a = AXES[axis]
    n = occ.shape[a]
    dots = np.zeros(occ.shape)
    cnt = np.zeros(occ.shape)
    if n > 1:
        lo = [slice(None)] * 3
        hi = [slice(None)] * 3
        lo[a] = slice(0, n - 1)
        hi[a] = slice(1, n)
        pair = occ[tuple(lo)] & occ[tuple(hi)]
        d = np.sum(m[(slice(None),) + tuple(lo)] * m[(slice(None),) + tuple(hi)], axis=0) * pair
        dots[tuple(lo)] += d
        dots[tuple(hi)] += d
        cnt[tuple(lo)] += pair
        cnt[tuple(hi)] += pair
    c = np.where(cnt > 0, dots / np.maximum(cnt, 1), 1.0)
    r = model.rho * _geom(cell, axis) * (1.0 + model.sign * model.AMRc * c)
    return np.where(occ, r, np.inf)


def _bounding_box(mask: np.ndarray):
    idx = np.argwhere(mask)
    lo = idx.min(axis=0)
    hi = idx.max(axis=0) + 1
    return tuple(slice(a, b) for a, b in zip(lo, hi))


def wire_resistance(m: np.ndarray, region: np.ndarray, cell, model: ResistanceModel = ResistanceModel(),
                    axis: str = "x") -> float:
    """Series chains along ``axis`` combined in parallel across the section."""
    region = np.asarray(region, dtype=bool)
    if not region.any():
        raise NonRectangularRegion("empty region")
    box = _bounding_box(region)
    if not region[box].all():
        raise NonRectangularRegion("region is not a filled rectangle; use solve_resistance")
    sub = region[box]
    r = cell_resistances(m[(slice(None),) + box], sub, cell, model, axis)
    chains = r.sum(axis=AXES[axis])
    return float(1.0 / np.sum(1.0 / chains))


def _faces(region: np.ndarray, axis: str):
    a = AXES[axis]
    box = _bounding_box(region)
    lo = np.zeros_like(region)
    hi = np.zeros_like(region)
    sl_lo = list(box)
    sl_hi = list(box)
    sl_lo[a] = slice(box[a].start, box[a].start + 1)
    sl_hi[a] = slice(box[a].stop - 1, box[a].stop)
    lo[tuple(sl_lo)] = True
    hi[tuple(sl_hi)] = True
    return lo & region, hi & region


def solve_resistance(m: np.ndarray, region: np.ndarray, cell, model: ResistanceModel = ResistanceModel(),
                     terminals: Optional[Tuple[np.ndarray, np.ndarray]] = None,
                     axis: str = "x", transverse: bool = True) -> float:
    """Two-terminal resistance of an arbitrary mask by nodal analysis.

    Cells are nodes; neighbours are joined by two half-cell resistors.
    ``terminals`` are two boolean face masks, defaulting to the first and
    last layer of the region along ``axis``; each face cell is tied to its
    terminal through half a cell. ``transverse=False`` keeps only links
    along ``axis``, which reproduces the series-parallel reduction exactly.
    """
    region = np.asarray(region, dtype=bool)
    if terminals is None:
        terminals = _faces(region, axis)
    ta, tb = (np.asarray(t, dtype=bool) & region for t in terminals)
    if not ta.any() or not tb.any():
        raise DisconnectedTerminals("a terminal face has no cells in the region")
    idx = -np.ones(region.shape, dtype=np.int64)
    n = int(region.sum())
    idx[region] = np.arange(n)
    axes = [axis] if not transverse else [k for k in ("x", "y", "z") if region.shape[AXES[k]] > 1]
    rows, cols, vals = [], [], []
    diag = np.zeros(n)
    for ax in axes:
        a = AXES[ax]
        N = region.shape[a]
        if N < 2:
            continue
        r = cell_resistances(m, region, cell, model, ax)
        lo = [slice(None)] * 3
        hi = [slice(None)] * 3
        lo[a] = slice(0, N - 1)
        hi[a] = slice(1, N)
        ia = idx[tuple(lo)]
        ib = idx[tuple(hi)]
        ok = (ia >= 0) & (ib >= 0)
        g = 1.0 / (0.5 * (r[tuple(lo)][ok] + r[tuple(hi)][ok]))
        ia, ib = ia[ok], ib[ok]
        rows += [ia, ib]
        cols += [ib, ia]
        vals += [-g, -g]
        np.add.at(diag, ia, g)
        np.add.at(diag, ib, g)
    r_ax = cell_resistances(m, region, cell, model, axis)
    ga = np.zeros(n)
    gb = np.zeros(n)
    ga[idx[ta]] = 2.0 / r_ax[ta]
    gb[idx[tb]] = 2.0 / r_ax[tb]
    diag += ga + gb
    rows.append(np.arange(n))
    cols.append(np.arange(n))
    vals.append(diag)
    G = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(n, n))
    # terminal a held at 1 V, terminal b at 0 V
    ncomp, lab = connected_components(G, directed=False)
    la = set(lab[idx[ta]])
    lb = set(lab[idx[tb]])
    if not la & lb:
        raise DisconnectedTerminals("no conducting path between the terminals")
    keep = np.isin(lab, list(la & lb))
    G = G[keep][:, keep]
    phi = spla.spsolve(G.tocsc(), ga[keep] * 1.0)
    current = float(np.sum(gb[keep] * phi))
    if current <= 0:
        raise DisconnectedTerminals("no current reaches the second terminal")
    return 1.0 / current


def mesh_wire_resistance(m: np.ndarray, mesh: Mesh, wire: str,
                         model: ResistanceModel = ResistanceModel(), nodal: bool = False) -> float:
    """Resistance of a named wire band along its own axis."""
    w = mesh.wires[wire]
    if nodal:
        return solve_resistance(m, w.band, mesh.cell, model, axis=w.axis)
    try:
        return wire_resistance(m, w.band, mesh.cell, model, axis=w.axis)
    except NonRectangularRegion:
        return solve_resistance(m, w.band, mesh.cell, model, axis=w.axis)


def domain_profile(bits: Sequence[int], pitch_cells: int, width: float, *,
                   cell=(2e-9, 2e-9, 1e-9), wall_width: Optional[float] = None) -> np.ndarray:
    """Relaxed-looking 1D magnetisation (3, n) of a bit pattern along x.

    Walls are Bloch profiles ``m_z = tanh``, ``m_y = sech`` of width
    parameter ``wall_width`` centred on every domain boundary where the
    bit changes.
    """
    n = len(bits) * pitch_cells
    x = (np.arange(n) + 0.5) * cell[0]
    delta = 5.24e-9 if wall_width is None else wall_width
    mz = np.where(np.repeat(np.asarray(bits), pitch_cells) > 0, 1.0, -1.0)
    theta = np.where(mz > 0, 0.0, np.pi)
    for k in range(1, len(bits)):
        if bits[k] == bits[k - 1]:
            continue
        x0 = k * pitch_cells * cell[0]
        near = np.abs(x - x0) < pitch_cells * cell[0] / 2
        t0 = 0.0 if bits[k - 1] else np.pi
        t1 = np.pi - t0
        th = t0 + (t1 - t0) * (0.5 + np.arctan(np.sinh((x - x0) / delta)) / np.pi)
        theta = np.where(near, th, theta)
    m = np.zeros((3, n))
    m[1] = np.sin(theta)
    m[2] = np.cos(theta)
    return m


def pattern_domain_resistances(bits: Sequence[int], *, pitch: float = 80e-9, width: float = 40e-9,
                               thickness: float = 1e-9, cell=(2e-9, 2e-9, 1e-9),
                               model: ResistanceModel = ResistanceModel(),
                               wall_width: Optional[float] = None) -> np.ndarray:
    """Per-domain resistance (ohm) of a straight wire holding ``bits``."""
    pc = int(round(pitch / cell[0]))
    rows = int(round(width / cell[1]))
    layers = int(round(thickness / cell[2]))
    prof = domain_profile(bits, pc, width, cell=cell, wall_width=wall_width)
    occ = np.ones((1, 1, prof.shape[1]), dtype=bool)
    r = cell_resistances(prof[:, None, None, :], occ, cell, model, "x")[0, 0]
    return r.reshape(len(bits), pc).sum(axis=1) / (rows * layers)


def write_resistance_csv(path, rows: Iterable[Tuple[str, str, float]], model: ResistanceModel,
                         header_lines: Sequence[str] = ()):
    with open(path, "w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        w = csv.writer(fh)
        w.writerow(["pattern_id", "wire_id", "R_ohms", "rho", "AMRc"])
        for pid, wid, R in rows:
            w.writerow([pid, wid, repr(float(R)), model.rho, model.AMRc])
