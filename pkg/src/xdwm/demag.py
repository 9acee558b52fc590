"""Magnetostatic (demagnetizing) field via the Newell cuboid tensor.

The tensor is evaluated once per mesh in extended precision. Beyond
``far_cells`` cell diagonals the closed-form Newell sums lose digits to
cancellation; there the tensor is replaced by the point-dipole kernel,
whose relative error at that range is about 1e-4 of an already tiny entry.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
import scipy.fft as sfft

from .geometry import Mesh

LD = np.longdouble
FAR_CELLS = 40.0


def _safe_div(a, b):
    z = b == 0
    return np.where(z, 0, a / np.where(z, 1, b))


def newell_f(x, y, z):
    x, y, z = np.abs(x), np.abs(y), np.abs(z)
    x2, y2, z2 = x * x, y * y, z * z
    R = np.sqrt(x2 + y2 + z2)
    out = (y / 2 * (z2 - x2) * np.arcsinh(_safe_div(y, np.sqrt(x2 + z2)))
           + z / 2 * (y2 - x2) * np.arcsinh(_safe_div(z, np.sqrt(x2 + y2)))
           - x * y * z * np.arctan(_safe_div(y * z, x * R))
           + (2 * x2 - y2 - z2) * R / 6)
    return out


def newell_g(x, y, z):
    z = np.abs(z)
    x2, y2, z2 = x * x, y * y, z * z
    R = np.sqrt(x2 + y2 + z2)
    out = (x * y * z * np.arcsinh(_safe_div(z, np.sqrt(x2 + y2)))
           + y / 6 * (3 * z2 - y2) * np.arcsinh(_safe_div(x, np.sqrt(y2 + z2)))
           + x / 6 * (3 * z2 - x2) * np.arcsinh(_safe_div(y, np.sqrt(x2 + z2)))
           - z * z2 / 6 * np.arctan(_safe_div(x * y, z * R))
           - z * y2 / 2 * np.arctan(_safe_div(x * z, y * R))
           - z * x2 / 2 * np.arctan(_safe_div(y * z, x * R))
           - x * y * R / 3)
    return out


def _stencil(a, axis):
    n = a.shape[axis]
    c = np.take(a, range(1, n - 1), axis=axis)
    lo = np.take(a, range(0, n - 2), axis=axis)
    hi = np.take(a, range(2, n), axis=axis)
    return 2 * c - lo - hi


def _newell_component(func, perm, ix, iy, iz, d):
    """Newell sum for one tensor component on the offset grid ``ix, iy, iz``.

    ``perm`` maps (x, y, z) into the argument order of ``func``. Offsets are
    integer cell counts, ``d`` the cell edges in reference units.
    """
    ex = np.concatenate([[ix[0] - 1], ix, [ix[-1] + 1]]).astype(LD) * d[0]
    ey = np.concatenate([[iy[0] - 1], iy, [iy[-1] + 1]]).astype(LD) * d[1]
    ez = np.concatenate([[iz[0] - 1], iz, [iz[-1] + 1]]).astype(LD) * d[2]
    Z, Y, X = np.meshgrid(ez, ey, ex, indexing="ij")
    args = (X, Y, Z)
    F = func(*(args[p] for p in perm))
    for ax in range(3):
        F = _stencil(F, ax)
    vol = LD(d[0]) * LD(d[1]) * LD(d[2])
    return F / (4 * LD(np.pi) * vol)


def _dipole(comp, X, Y, Z, vol):
    R2 = X * X + Y * Y + Z * Z
    R = np.sqrt(R2)
    r = (X, Y, Z)
    i, j = comp
    delta = 1.0 if i == j else 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        return -vol / (4 * np.pi) * (3 * r[i] * r[j] / (R2 * R2 * R) - delta / (R2 * R))


COMPONENTS = {
    "xx": (newell_f, (0, 1, 2), (0, 0)),
    "yy": (newell_f, (1, 0, 2), (1, 1)),
    "zz": (newell_f, (2, 1, 0), (2, 2)),
    "xy": (newell_g, (0, 1, 2), (0, 1)),
    "xz": (newell_g, (0, 2, 1), (0, 2)),
    "yz": (newell_g, (1, 2, 0), (1, 2)),
}


def demag_tensor(ix, iy, iz, cell, far_cells: float = FAR_CELLS) -> dict:
    """Demag tensor components on the grid of integer cell offsets.

    Returns a dict ``{"xx": N_xx[z, y, x], ...}`` (dimensionless, float64)
    such that ``H = -N M``.
    """
    ix, iy, iz = (np.asarray(a, dtype=np.int64) for a in (ix, iy, iz))
    scale = min(cell)
    d = tuple(c / scale for c in cell)
    Z, Y, X = np.meshgrid(iz * d[2], iy * d[1], ix * d[0], indexing="ij")
    diag = float(np.sqrt(sum(c * c for c in d)))
    far = np.sqrt(X * X + Y * Y + Z * Z) > far_cells * diag
    vol = d[0] * d[1] * d[2]
    out = {}
    for name, (func, perm, comp) in COMPONENTS.items():
        if all(len(a) == 1 and a[0] == 0 for a in (iz,)) and name in ("xz", "yz"):
            # odd in z: vanishes identically on the z = 0 plane
            out[name] = np.zeros(X.shape)
            continue
        near = _newell_component(func, perm, ix, iy, iz, d).astype(np.float64)
        if far.any():
            near = np.where(far, _dipole(comp, X, Y, Z, vol), near)
        out[name] = near
    return out


@lru_cache(maxsize=16)
def _kernel_fft(nx, ny, nz, cell, far_cells):
    px = sfft.next_fast_len(2 * nx - 1, real=True) if nx > 1 else 1
    py = sfft.next_fast_len(2 * ny - 1) if ny > 1 else 1
    pz = sfft.next_fast_len(2 * nz - 1) if nz > 1 else 1
    ix = np.arange(-(nx - 1), nx)
    iy = np.arange(-(ny - 1), ny)
    iz = np.arange(-(nz - 1), nz)
    N = demag_tensor(ix, iy, iz, cell, far_cells)
    # wrap offsets into the periodic padded grid
    wx = ix % px
    wy = iy % py
    wz = iz % pz
    axes = tuple(a for a, n in zip((0, 1, 2), (nz, ny, nx)) if n > 1)
    kern = {}
    for name, arr in N.items():
        if not arr.any():
            kern[name] = None
            continue
        full = np.zeros((pz, py, px))
        full[np.ix_(wz, wy, wx)] = arr
        kern[name] = sfft.rfftn(full, axes=axes) if axes else full
    return (pz, py, px), axes, kern


class Demag:
    """FFT-convolution demag operator bound to a mesh."""

    def __init__(self, mesh: Mesh, far_cells: float = FAR_CELLS):
        self.mesh = mesh
        self.shape = mesh.shape
        self.pad, self.axes, self.kern = _kernel_fft(mesh.nx, mesh.ny, mesh.nz,
                                                     mesh.cell, far_cells)
        self.occ = mesh.occupancy

    def field(self, m: np.ndarray, Ms: float) -> np.ndarray:
        nz, ny, nx = self.shape
        axes = self.axes
        if not axes:
            # single cell: self-interaction only
            h = np.empty_like(m)
            k = self.kern
            h[0] = -(k["xx"][0, 0, 0] * m[0])
            h[1] = -(k["yy"][0, 0, 0] * m[1])
            h[2] = -(k["zz"][0, 0, 0] * m[2])
            return Ms * h * self.occ
        s = [self.pad[a] for a in axes]
        fax = tuple(a + 1 for a in axes)
        spec = sfft.rfftn(m, s=s, axes=fax)
        k = self.kern
        rows = (("xx", "xy", "xz"), ("xy", "yy", "yz"), ("xz", "yz", "zz"))
        hk = np.zeros_like(spec)
        for a, row in enumerate(rows):
            for b, name in enumerate(row):
                if k[name] is not None:
                    hk[a] += k[name] * spec[b]
        full = sfft.irfftn(hk, s=s, axes=fax)
        out = np.ascontiguousarray(full[:, :nz, :ny, :nx])
        out *= -Ms
        out *= self.occ
        return out


def direct_demag(m: np.ndarray, Ms: float, mesh: Mesh, far_cells: float = FAR_CELLS) -> np.ndarray:
    """O(N^2) pairwise summation of the same tensor; an oracle for ``Demag``."""
    nz, ny, nx = mesh.shape
    N = demag_tensor(np.arange(-(nx - 1), nx), np.arange(-(ny - 1), ny),
                     np.arange(-(nz - 1), nz), mesh.cell, far_cells)
    rows = (("xx", "xy", "xz"), ("xy", "yy", "yz"), ("xz", "yz", "zz"))
    cells = np.argwhere(mesh.occupancy)
    src = m[:, cells[:, 0], cells[:, 1], cells[:, 2]]
    out = np.zeros_like(m)
    for k, j, i in cells:
        o = (k - cells[:, 0] + nz - 1, j - cells[:, 1] + ny - 1, i - cells[:, 2] + nx - 1)
        for a in range(3):
            out[a, k, j, i] = -Ms * sum(np.sum(N[rows[a][b]][o] * src[b]) for b in range(3))
    return out


def demag_energy(m: np.ndarray, h_d: np.ndarray, Ms: float, mesh: Mesh, mu0: float) -> float:
    return float(-0.5 * mu0 * Ms * mesh.cell_volume * np.sum(m * h_d))
