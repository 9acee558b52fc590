"""Current-density maps inside the conductor mask.

Each source terminal injects ``J * face_area`` spread evenly over its face
cells; sink faces are tied to ground through a half-cell conductance.
Uniform conductivity is assumed, so the map depends on geometry only.
Wires not named as terminals are high impedance: a dead-end branch
carries no current in the steady state.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .geometry import Mesh

ROLES = ("source", "sink", "high_impedance")


class CurrentMapError(ValueError):
    pass


@dataclass
class CurrentMap:
    j: np.ndarray                       # (3, nz, ny, nx), A/m^2
    terminals: List[Tuple[str, str]] = field(default_factory=list)
    injected: float = 0.0               # total source current (A)

    @property
    def is_zero(self) -> bool:
        return not np.any(self.j)

    def scaled(self, factor: float) -> "CurrentMap":
        return CurrentMap(self.j * factor, list(self.terminals), self.injected * factor)


def zero_current(mesh: Mesh) -> CurrentMap:
    return CurrentMap(np.zeros((3,) + mesh.shape))


def _face(mesh: Mesh, spec: str):
    wire, _, face = spec.partition(".")
    try:
        w = mesh.wires[wire]
        mask = w.faces[face]
    except KeyError:
        raise CurrentMapError(f"unknown terminal face {spec!r}") from None
    axis = 2 if face in ("left", "right") else 1
    outward = -1 if face in ("left", "bottom") else 1
    return mask, axis, outward


def uniform_current(mesh: Mesh, wires: Sequence[str], j: float, sign: int = 1) -> CurrentMap:
    """Fast mode: ``j`` along the axis of each straight wire's band."""
    out = np.zeros((3,) + mesh.shape)
    injected = 0.0
    for name in wires:
        w = mesh.wires[name]
        comp = 0 if w.axis == "x" else 1
        out[comp][w.band] = sign * j
        face = w.faces["left" if w.axis == "x" else "bottom"]
        area = mesh.dy * mesh.dz if w.axis == "x" else mesh.dx * mesh.dz
        injected += abs(j) * area * face.sum()
    return CurrentMap(out, [(n, "uniform") for n in wires], injected)


def current_map(mesh: Mesh, terminals: Sequence[Tuple[str, str]], j: float) -> CurrentMap:
    """Solve the conduction problem for the given terminal roles.

    ``terminals`` is a list of ``(face, role)`` pairs, faces named
    ``"<wire>.<left|right|bottom|top>"``. Every source pushes current density
    ``j`` through its face.
    """
    for spec, role in terminals:
        if role not in ROLES:
            raise CurrentMapError(f"unknown terminal role {role!r}")
    sources = [t for t in terminals if t[1] == "source"]
    sinks = [t for t in terminals if t[1] == "sink"]
    if not sources or j == 0:
        return CurrentMap(np.zeros((3,) + mesh.shape), list(terminals), 0.0)
    if not sinks:
        raise CurrentMapError("current map needs at least one sink")

    occ = mesh.occupancy
    idx = -np.ones(mesh.shape, dtype=np.int64)
    n = int(occ.sum())
    idx[occ] = np.arange(n)
    area = (mesh.dx * mesh.dy, mesh.dx * mesh.dz, mesh.dy * mesh.dz)  # normal to z, y, x
    length = (mesh.dz, mesh.dy, mesh.dx)
    G = [area[a] / length[a] for a in range(3)]

    rows, cols, vals = [], [], []
    links = []
    for ax in range(3):
        nax = mesh.shape[ax]
        if nax < 2:
            links.append(None)
            continue
        a = np.take(idx, range(0, nax - 1), axis=ax)
        b = np.take(idx, range(1, nax), axis=ax)
        ok = (a >= 0) & (b >= 0)
        ia, ib = a[ok], b[ok]
        g = G[ax]
        rows += [ia, ib, ia, ib]
        cols += [ia, ib, ib, ia]
        vals += [np.full(ia.size, g), np.full(ia.size, g), np.full(ia.size, -g), np.full(ia.size, -g)]
        links.append((ok, ia, ib))

    rhs = np.zeros(n)
    ground = np.zeros(n)
    injected = 0.0
    src_faces = []
    for spec, _ in sources:
        mask, ax, outward = _face(mesh, spec)
        I_cell = j * area[ax]
        rhs[idx[mask]] += I_cell
        injected += I_cell * mask.sum()
        src_faces.append((mask, ax, outward, I_cell))
    sink_faces = []
    for spec, _ in sinks:
        mask, ax, outward = _face(mesh, spec)
        ground[idx[mask]] += 2 * G[ax]
        sink_faces.append((mask, ax, outward))
    rows.append(np.arange(n))
    cols.append(np.arange(n))
    vals.append(ground)
    L = sp.csc_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(n, n))
    phi_flat = spla.spsolve(L, rhs)
    phi = np.zeros(mesh.shape)
    phi[occ] = phi_flat

    # face currents per cell: plus[ax] flows out through +face, minus[ax] in through -face
    plus = np.zeros((3,) + mesh.shape)
    minus = np.zeros((3,) + mesh.shape)
    for ax in range(3):
        if links[ax] is None:
            continue
        nax = mesh.shape[ax]
        pa = np.take(phi, range(0, nax - 1), axis=ax)
        pb = np.take(phi, range(1, nax), axis=ax)
        ok = links[ax][0]
        I = np.where(ok, G[ax] * (pa - pb), 0.0)
        sl_lo = [slice(None)] * 3
        sl_hi = [slice(None)] * 3
        sl_lo[ax] = slice(0, nax - 1)
        sl_hi[ax] = slice(1, nax)
        plus[ax][tuple(sl_lo)] += I
        minus[ax][tuple(sl_hi)] += I
    for mask, ax, outward, I_cell in src_faces:
        if outward < 0:
            minus[ax][mask] += I_cell
        else:
            plus[ax][mask] -= I_cell
    for mask, ax, outward in sink_faces:
        I_out = 2 * G[ax] * phi[mask]
        if outward > 0:
            plus[ax][mask] += I_out
        else:
            minus[ax][mask] -= I_out

    jmap = np.zeros((3,) + mesh.shape)
    # component order of j is (x, y, z); mesh axes are (z, y, x)
    for ax, comp in ((2, 0), (1, 1), (0, 2)):
        jmap[comp] = 0.5 * (plus[ax] + minus[ax]) / area[ax]
    jmap *= occ
    return CurrentMap(jmap, list(terminals), injected)


def x_shift_terminals(mesh: Mesh, rows=None, direction: int = 1) -> List[Tuple[str, str]]:
    """Source/sink faces for an X-direction shift of the chosen X-NWs."""
    names = [n for n, w in mesh.wires.items() if w.axis == "x"]
    if rows is not None:
        names = [f"x{r}" for r in rows]
    a, b = ("left", "right") if direction > 0 else ("right", "left")
    out = []
    for n in names:
        out += [(f"{n}.{a}", "source"), (f"{n}.{b}", "sink")]
    return out


def y_shift_terminals(mesh: Mesh, ynw: int = 0, direction: int = 1) -> List[Tuple[str, str]]:
    a, b = ("bottom", "top") if direction > 0 else ("top", "bottom")
    return [(f"y{ynw}.{a}", "source"), (f"y{ynw}.{b}", "sink")]
