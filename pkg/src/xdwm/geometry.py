"""Device geometry: specs, finite-difference mesh and region bookkeeping.

Layout conventions
------------------
Arrays are indexed ``[k, j, i]`` = ``[z, y, x]``. X nanowires (X-NWs) run
along +x and are stacked along +y (row 0 at the bottom). A Y nanowire
(Y-NW) runs along +y through domain column ``c`` of every X-NW; each
crossing is an X-Cell, the union of the X-NW domain at column ``c`` and
the Y-NW domain of that row, i.e. a cross of two overlaid rectangles.

When Y-NWs cross more than one X-NW, the row pitch equals the Y-NW domain
length so that every Y domain that meets the bundle is exactly one X-Cell.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Tuple

import numpy as np

KINDS = ("plain_wire", "notched_wire", "cross_overlay", "bundle")
DEFAULT_CELL = (2e-9, 2e-9, 1e-9)


class GeometryError(ValueError):
    pass


class NonIntegralDimension(GeometryError):
    pass


class OverlapConflict(GeometryError):
    pass


class PlacementOutOfRange(GeometryError):
    pass


@dataclass(frozen=True)
class GeometrySpec:
    """Geometry of a plain wire, a notched wire or an XDWM cross/bundle.

    ``ynw_columns`` lists the X-NW domain column of each Y-NW. ``ynw_extra``
    gives the number of Y-NW domains below and above the bundle. ``gap`` is
    the spacing between X-NWs; ``None`` picks the value that aligns rows
    with the Y-NW domains (``ynw_domain_length - wire_width``).
    """

    kind: str = "plain_wire"
    n_domains: int = 8
    domain_length: float = 80e-9
    wire_width: float = 40e-9
    thickness: float = 1e-9
    notch_depth: float = 10e-9
    notch_width: float = 24e-9
    n_xnw: int = 1
    gap: Optional[float] = None
    ynw_columns: Tuple[int, ...] = ()
    ynw_width: float = 40e-9
    ynw_domain_length: float = 80e-9
    ynw_extra: Tuple[int, int] = (1, 1)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise GeometryError(f"unknown geometry kind {self.kind!r}")
        object.__setattr__(self, "ynw_columns", tuple(int(c) for c in self.ynw_columns))
        object.__setattr__(self, "ynw_extra", tuple(int(c) for c in self.ynw_extra))
        for name in ("domain_length", "wire_width", "thickness", "ynw_width",
                     "ynw_domain_length"):
            if not getattr(self, name) > 0:
                raise GeometryError(f"{name} must be positive")
        if self.n_domains < 1 or self.n_xnw < 1:
            raise GeometryError("need at least one X-NW with one domain")
        if self.kind in ("plain_wire", "notched_wire") and (self.ynw_columns or self.n_xnw != 1):
            raise GeometryError(f"{self.kind} has a single X-NW and no Y-NW")
        if self.notched and not (0 < self.notch_depth < self.wire_width / 2):
            raise GeometryError("notch depth must lie in (0, wire_width/2)")
        if self.notched and self.notch_width <= 0:
            raise GeometryError("notch width must be positive")
        if min(self.ynw_extra) < 0 or len(self.ynw_extra) != 2:
            raise GeometryError("ynw_extra must be two non-negative counts")
        for c in self.ynw_columns:
            if not 0 <= c < self.n_domains:
                raise PlacementOutOfRange(f"Y-NW column {c} outside 0..{self.n_domains - 1}")
        if len(set(self.ynw_columns)) != len(self.ynw_columns):
            raise OverlapConflict("two Y-NWs share a column, their X-Cells would overlap")
        if self.ynw_columns and self.ynw_width > self.domain_length:
            raise GeometryError("Y-NW wider than an X-NW domain")
        if self.ynw_columns and self.ynw_domain_length < self.wire_width:
            raise GeometryError("Y-NW domain shorter than the X-NW width")
        if self.n_xnw > 1 and self.row_gap <= 0:
            raise GeometryError("X-NWs of a bundle must be separated by a positive gap")
        if self.n_xnw > 1 and self.ynw_columns and not np.isclose(
                self.row_gap + self.wire_width, self.ynw_domain_length):
            raise GeometryError("with Y-NWs the row pitch must equal the Y-NW domain length")

    @property
    def notched(self) -> bool:
        if self.kind == "plain_wire":
            return False
        return self.notch_depth > 0

    @property
    def row_gap(self) -> float:
        if self.gap is None:
            return self.ynw_domain_length - self.wire_width
        return self.gap

    @property
    def n_ynw(self) -> int:
        return len(self.ynw_columns)

    @property
    def ynw_domains(self) -> int:
        return self.ynw_extra[0] + self.n_xnw + self.ynw_extra[1]

    def with_(self, **changes) -> "GeometrySpec":
        return replace(self, **changes)

    def as_dict(self) -> dict:
        return {
            "kind": self.kind, "n_domains": self.n_domains,
            "domain_length": self.domain_length, "wire_width": self.wire_width,
            "thickness": self.thickness, "notch_depth": self.notch_depth,
            "notch_width": self.notch_width, "n_xnw": self.n_xnw, "gap": self.gap,
            "ynw_columns": list(self.ynw_columns), "ynw_width": self.ynw_width,
            "ynw_domain_length": self.ynw_domain_length, "ynw_extra": list(self.ynw_extra),
        }


@dataclass(frozen=True, eq=False)
class Wire:
    """A straight nanowire inside a mesh.

    ``band`` marks the wire's own rectangle (occupied cells only, X-Cell
    fins of a crossing wire excluded). ``domains`` are region names in order
    along ``axis``; ``start`` is the cell index of the wire's first cell
    along that axis.
    """

    name: str
    axis: str
    band: np.ndarray
    domains: Tuple[str, ...]
    start: int
    n_cells: int
    pitch_cells: int
    faces: Dict[str, np.ndarray]

    def coordinate(self, mesh: "Mesh", index: float) -> float:
        """Distance (m) from the wire start of the lower edge of cell ``index``."""
        d = mesh.dx if self.axis == "x" else mesh.dy
        return (index - self.start) * d

    @property
    def length_axis_index(self) -> int:
        return 2 if self.axis == "x" else 1


@dataclass(frozen=True, eq=False)
class Mesh:
    nx: int
    ny: int
    nz: int
    dx: float
    dy: float
    dz: float
    occupancy: np.ndarray
    regions: Dict[str, np.ndarray] = field(default_factory=dict)
    wires: Dict[str, Wire] = field(default_factory=dict)
    xcells: Dict[str, Tuple[int, int]] = field(default_factory=dict)
    spec: Optional[GeometrySpec] = None

    def __post_init__(self):
        if min(self.dx, self.dy, self.dz) <= 0:
            raise GeometryError("cell dimensions must be positive")
        if self.occupancy.shape != self.shape:
            raise GeometryError("occupancy mask shape mismatch")
        if not self.occupancy.any():
            raise GeometryError("empty occupancy mask")
        self.occupancy.setflags(write=False)
        for name, r in self.regions.items():
            if (r & ~self.occupancy).any():
                raise GeometryError(f"region {name} leaves the occupied cells")
            r.setflags(write=False)

    @property
    def shape(self) -> Tuple[int, int, int]:
        return (self.nz, self.ny, self.nx)

    @property
    def cell(self) -> Tuple[float, float, float]:
        return (self.dx, self.dy, self.dz)

    @property
    def cell_volume(self) -> float:
        return self.dx * self.dy * self.dz

    @property
    def n_cells(self) -> int:
        return int(self.occupancy.sum())

    def centers(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Cell-centre coordinates (m), each broadcastable to ``shape``."""
        x = (np.arange(self.nx) + 0.5) * self.dx
        y = (np.arange(self.ny) + 0.5) * self.dy
        z = (np.arange(self.nz) + 0.5) * self.dz
        return z[:, None, None], y[None, :, None], x[None, None, :]

    def region_label(self) -> np.ndarray:
        """Integer label per cell: index into ``sorted(regions)``, -1 if none."""
        label = np.full(self.shape, -1, dtype=int)
        for n, name in enumerate(sorted(self.regions)):
            label[self.regions[name]] = n
        return label


def box_mesh(nx: int, ny: int, nz: int, cell=DEFAULT_CELL, occupancy=None) -> Mesh:
    """Mesh without geometry bookkeeping; used for raw field tests."""
    if occupancy is None:
        occupancy = np.ones((nz, ny, nx), dtype=bool)
    return Mesh(nx, ny, nz, *cell, occupancy=np.array(occupancy, dtype=bool))


def _cells(length: float, d: float, what: str) -> int:
    n = length / d
    if abs(n - round(n)) > 1e-6 or round(n) < 1:
        raise NonIntegralDimension(f"{what} = {length:g} m is not a multiple of cell size {d:g} m")
    return int(round(n))


def build_mesh(spec: GeometrySpec, cell=DEFAULT_CELL) -> Mesh:
    """Rasterise ``spec`` onto a finite-difference grid.

    Occupancy is the union of the wire rectangles minus the notch bites.
    Notches are symmetric rectangular bites on both edges of a wire at every
    internal domain boundary; a bite never removes cells of the crossing wire.
    """
    dx, dy, dz = cell
    P = _cells(spec.domain_length, dx, "domain_length")
    W = _cells(spec.wire_width, dy, "wire_width")
    nz = _cells(spec.thickness, dz, "thickness")
    nd = spec.n_domains
    Lx = nd * P
    has_y = spec.n_ynw > 0
    if spec.notched:
        ND_x = _cells(spec.notch_depth, dy, "notch_depth")
        NW_x = _cells(spec.notch_width, dx, "notch_width")
    if has_y:
        YP = _cells(spec.ynw_domain_length, dy, "ynw_domain_length")
        WY = _cells(spec.ynw_width, dx, "ynw_width")
        below, above = spec.ynw_extra
        n_ydom = spec.ynw_domains
        row_pitch = YP
        base = below * YP + (YP - W) // 2
        ny = max(n_ydom * YP, base + (spec.n_xnw - 1) * row_pitch + W)
        if spec.notched:
            ND_y = _cells(spec.notch_depth, dx, "notch_depth")
            NW_y = _cells(spec.notch_width, dy, "notch_width")
            if not spec.notch_depth < spec.ynw_width / 2:
                raise GeometryError("notch depth must be below half the Y-NW width")
    else:
        G = _cells(spec.row_gap, dy, "gap") if spec.n_xnw > 1 else 0
        row_pitch = W + G
        base = 0
        ny = (spec.n_xnw - 1) * row_pitch + W

    shape = (nz, ny, Lx)
    xrect = []
    for r in range(spec.n_xnw):
        m = np.zeros(shape, dtype=bool)
        y0 = base + r * row_pitch
        m[:, y0:y0 + W, :] = True
        xrect.append((m, y0))
    yrect = []
    for c in spec.ynw_columns:
        m = np.zeros(shape, dtype=bool)
        x0 = c * P + (P - WY) // 2
        m[:, 0:n_ydom * YP, x0:x0 + WY] = True
        yrect.append((m, x0))

    any_x = np.zeros(shape, dtype=bool)
    for m, _ in xrect:
        any_x |= m
    any_y = np.zeros(shape, dtype=bool)
    for m, _ in yrect:
        any_y |= m
    occ = any_x | any_y

    if spec.notched:
        bite = np.zeros(shape, dtype=bool)
        for m, y0 in xrect:
            for k in range(1, nd):
                xs = slice(max(k * P - NW_x // 2, 0), min(k * P - NW_x // 2 + NW_x, Lx))
                bite[:, y0:y0 + ND_x, xs] = True
                bite[:, y0 + W - ND_x:y0 + W, xs] = True
        occ &= ~(bite & ~any_y)
        bite = np.zeros(shape, dtype=bool)
        for m, x0 in yrect:
            for k in range(1, n_ydom):
                ys = slice(max(k * YP - NW_y // 2, 0), min(k * YP - NW_y // 2 + NW_y, ny))
                bite[:, ys, x0:x0 + ND_y] = True
                bite[:, ys, x0 + WY - ND_y:x0 + WY] = True
        occ &= ~(bite & ~any_x)

    ix = np.arange(Lx)[None, None, :]
    iy = np.arange(ny)[None, :, None]
    regions: Dict[str, np.ndarray] = {}
    xcells: Dict[str, Tuple[int, int]] = {}
    wires: Dict[str, Wire] = {}
    for r, (m, y0) in enumerate(xrect):
        names = []
        for k in range(nd):
            dom = m & (ix >= k * P) & (ix < (k + 1) * P) & occ
            if k in spec.ynw_columns:
                j = spec.ynw_columns.index(k)
                ym, _ = yrect[j]
                ydom = spec.ynw_extra[0] + r
                dom = dom | (ym & (iy >= ydom * YP) & (iy < (ydom + 1) * YP) & occ)
                name = f"xcell{r}_{j}"
                xcells[name] = (r, j)
            else:
                name = f"x{r}.d{k}"
            regions[name] = dom
            names.append(name)
        band = m & occ
        faces = {"left": band & (ix == 0), "right": band & (ix == Lx - 1)}
        wires[f"x{r}"] = Wire(f"x{r}", "x", band, tuple(names), 0, Lx, P, faces)
    for j, (m, x0) in enumerate(yrect):
        names = []
        for k in range(n_ydom):
            r = k - spec.ynw_extra[0]
            if 0 <= r < spec.n_xnw:
                names.append(f"xcell{r}_{j}")
                continue
            dom = m & (iy >= k * YP) & (iy < (k + 1) * YP) & occ & ~any_x
            name = f"y{j}.d{k}"
            regions[name] = dom
            names.append(name)
        band = m & occ
        top = n_ydom * YP - 1
        faces = {"bottom": band & (iy == 0), "top": band & (iy == top)}
        wires[f"y{j}"] = Wire(f"y{j}", "y", band, tuple(names), 0, n_ydom * YP, YP, faces)

    return Mesh(Lx, ny, nz, dx, dy, dz, occupancy=occ, regions=regions, wires=wires,
                xcells=xcells, spec=spec)


def bundle(spec: GeometrySpec, n_xnw: int, n_ynw: int, placements=(), cell=DEFAULT_CELL) -> Mesh:
    """Mesh of ``n_xnw`` parallel X-NWs crossed by ``n_ynw`` Y-NWs.

    ``placements`` gives one domain column per Y-NW.
    """
    placements = tuple(placements)
    if n_xnw < 1 or n_ynw < 0:
        raise GeometryError("need n_xnw >= 1 and n_ynw >= 0")
    if len(placements) != n_ynw:
        raise PlacementOutOfRange(f"{n_ynw} Y-NWs but {len(placements)} placements")
    kind = "bundle" if (n_xnw > 1 or n_ynw > 0) else spec.kind
    if kind == "bundle" and spec.kind == "plain_wire":
        spec = spec.with_(notch_depth=0.0)
    return build_mesh(spec.with_(kind=kind, n_xnw=n_xnw, ynw_columns=placements), cell)


def cross(length: float, width: float, *, wire_width: float = 40e-9,
          ynw_width: float = 40e-9, thickness: float = 1e-9) -> GeometrySpec:
    """Isolated X-Cell: ``length`` along x by a Y bar of ``width`` along y."""
    return GeometrySpec(kind="cross_overlay", n_domains=1, domain_length=length,
                        wire_width=wire_width, thickness=thickness, notch_depth=0.0,
                        ynw_columns=(0,), ynw_width=ynw_width, ynw_domain_length=width,
                        ynw_extra=(0, 0))


def fig3_spec() -> GeometrySpec:
    """Two 4-domain X-NWs and a 2-domain Y-NW through the third column."""
    return GeometrySpec(kind="bundle", n_domains=4, n_xnw=2, ynw_columns=(2,), ynw_extra=(0, 0))


def fig4_spec(with_xcell: bool = True) -> GeometrySpec:
    """8-domain X-NW with a 3-domain Y-NW through the middle (column 4)."""
    if with_xcell:
        return GeometrySpec(kind="cross_overlay", n_domains=8, ynw_columns=(4,), ynw_extra=(1, 1))
    return GeometrySpec(kind="notched_wire", n_domains=8)


def fig5b_spec(n_xnw: int = 8, n_ynw: int = 1) -> GeometrySpec:
    """Bundle of ``n_xnw`` 8-domain X-NWs with Y-NWs; 9-domain Y-NW for 8 rows."""
    cols = (4,) if n_ynw == 1 else tuple(range(1, 1 + n_ynw))
    return GeometrySpec(kind="bundle", n_domains=8, n_xnw=n_xnw, ynw_columns=cols,
                        ynw_extra=(0, 1))


def domain_patterns(mesh: Mesh) -> Dict[str, List[str]]:
    """Region names of every wire in order; convenient for bit extraction."""
    return {name: list(w.domains) for name, w in mesh.wires.items()}
