"""Effective field H_eff = H_ex + H_d + H_anis and the matching energies.

Fields are in A/m, energies in J. Magnetization arrays have shape
``(3, nz, ny, nx)`` and are zero outside the occupied cells.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .demag import Demag, demag_energy
from .geometry import Mesh
from .material import CONSTANTS, MaterialParams, PhysicalConstants


@dataclass
class FieldTerms:
    h_ex: np.ndarray
    h_d: np.ndarray
    h_anis: np.ndarray

    @property
    def h_eff(self) -> np.ndarray:
        return self.h_ex + self.h_d + self.h_anis


def _pairs(occ: np.ndarray):
    """Masks of neighbour pairs (both cells occupied) along z, y, x."""
    out = []
    for ax in range(3):
        n = occ.shape[ax]
        if n < 2:
            out.append(None)
            continue
        a = np.take(occ, range(0, n - 1), axis=ax)
        b = np.take(occ, range(1, n), axis=ax)
        out.append(a & b)
    return out


class _MeshOps:
    """Cached finite-difference helpers of a mesh."""

    _cache: dict = {}

    def __init__(self, mesh: Mesh):
        self.mesh = mesh
        self.occ = mesh.occupancy
        self.pairs = _pairs(mesh.occupancy)
        self.h = (mesh.dz, mesh.dy, mesh.dx)

    @classmethod
    def of(cls, mesh: Mesh) -> "_MeshOps":
        key = id(mesh)
        ops = cls._cache.get(key)
        if ops is None or ops.mesh is not mesh:
            ops = cls(mesh)
            if len(cls._cache) > 64:
                cls._cache.clear()
            cls._cache[key] = ops
        return ops

    def laplacian(self, m: np.ndarray) -> np.ndarray:
        """Masked 6-neighbour Laplacian, free (Neumann) boundaries."""
        lap = np.zeros_like(m)
        for ax, pair in enumerate(self.pairs):
            if pair is None:
                continue
            a = ax + 1
            n = m.shape[a]
            d = np.diff(m, axis=a) * pair / self.h[ax] ** 2
            lo = [slice(None)] * 4
            hi = [slice(None)] * 4
            lo[a] = slice(0, n - 1)
            hi[a] = slice(1, n)
            lap[tuple(lo)] += d
            lap[tuple(hi)] -= d
        return lap

    def exchange_sum(self, m: np.ndarray) -> float:
        """Sum over neighbour pairs of |m_i - m_j|^2 / h^2."""
        s = 0.0
        for ax, pair in enumerate(self.pairs):
            if pair is None:
                continue
            d = np.diff(m, axis=ax + 1) * pair
            s += float(np.sum(d * d)) / self.h[ax] ** 2
        return s


def exchange_field(m: np.ndarray, p: MaterialParams, mesh: Mesh,
                   c: PhysicalConstants = CONSTANTS) -> np.ndarray:
    return (2 * p.A / (c.mu0 * p.Ms)) * _MeshOps.of(mesh).laplacian(m)


def anisotropy_field(m: np.ndarray, p: MaterialParams, mesh: Mesh,
                     c: PhysicalConstants = CONSTANTS) -> np.ndarray:
    h = np.zeros_like(m)
    h[2] = (2 * p.Ku / (c.mu0 * p.Ms)) * m[2]
    return h


def local_demag_field(m: np.ndarray, p: MaterialParams, mesh: Mesh) -> np.ndarray:
    """Thin-film shortcut: H_d = -Ms m_z z."""
    h = np.zeros_like(m)
    h[2] = -p.Ms * m[2]
    return h


def demag_field(m: np.ndarray, p: MaterialParams, mesh: Mesh,
                operator: Optional[Demag] = None) -> np.ndarray:
    if operator is None:
        operator = Demag(mesh)
    return operator.field(m, p.Ms)


def effective(m: np.ndarray, p: MaterialParams, mesh: Mesh, *, demag: str = "full",
              operator: Optional[Demag] = None,
              c: PhysicalConstants = CONSTANTS) -> FieldTerms:
    """All three field terms. ``demag`` is ``"full"``, ``"local"`` or ``"off"``."""
    h_ex = exchange_field(m, p, mesh, c)
    h_an = anisotropy_field(m, p, mesh, c)
    if demag == "full":
        h_d = demag_field(m, p, mesh, operator)
    elif demag == "local":
        h_d = local_demag_field(m, p, mesh)
    elif demag == "off":
        h_d = np.zeros_like(m)
    else:
        raise ValueError(f"unknown demag mode {demag!r}")
    return FieldTerms(h_ex, h_d, h_an)


def exchange_energy(m, p: MaterialParams, mesh: Mesh) -> float:
    return p.A * mesh.cell_volume * _MeshOps.of(mesh).exchange_sum(m)


def anisotropy_energy(m, p: MaterialParams, mesh: Mesh) -> float:
    return -p.Ku * mesh.cell_volume * float(np.sum(m[2] ** 2))


def total_energy(m, p: MaterialParams, mesh: Mesh, *, demag: str = "full",
                 operator: Optional[Demag] = None, c: PhysicalConstants = CONSTANTS) -> float:
    e = exchange_energy(m, p, mesh) + anisotropy_energy(m, p, mesh)
    if demag == "full":
        e += demag_energy(m, demag_field(m, p, mesh, operator), p.Ms, mesh, c.mu0)
    elif demag == "local":
        e += 0.5 * c.mu0 * p.Ms ** 2 * mesh.cell_volume * float(np.sum(m[2] ** 2))
    return e


def uniform(mesh: Mesh, direction=(0.0, 0.0, 1.0)) -> np.ndarray:
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    m = np.zeros((3,) + mesh.shape)
    for i in range(3):
        m[i][mesh.occupancy] = d[i]
    return m


def normalize(m: np.ndarray, mesh: Mesh) -> np.ndarray:
    n = np.sqrt(np.sum(m * m, axis=0))
    out = np.divide(m, n, out=np.zeros_like(m), where=n > 0)
    out *= mesh.occupancy
    return out


def norm_error(m: np.ndarray, mesh: Mesh) -> float:
    """max over occupied cells of | |m| - 1 |."""
    n = np.sqrt(np.sum(m * m, axis=0))[mesh.occupancy]
    return float(np.max(np.abs(n - 1.0)))
