"""Lumped resistor network of an XDWM bundle and its sneak-path leakage.

Each X-NW is a chain of domain resistors from its BL access device to its
grounded BL-bar device. An X-Cell splits its domain into two halves around
a shared node; consecutive X-Cells of one Y-NW are joined by a Y-NW domain
resistor in series with that domain's access device, which is off while
the bundle shifts in X. Each end of a Y-NW reaches ground through two off
devices in series: the end domain's access device and the SLY device.
Without gating (``y_gating=False``) the Y-NW is a bare conductor with
floating ends.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.sparse.csgraph import connected_components

from .amr import ResistanceModel, pattern_domain_resistances

GROUND = "gnd"
KINDS = ("wire_segment", "xcell_link", "access_device")


class SingularSystem(RuntimeError):
    pass


class InvalidPlacement(ValueError):
    pass


class NetworkError(ValueError):
    pass


@dataclass
class Branch:
    a: str
    b: str
    R: float                        # ohm; ignored for access devices
    kind: str = "wire_segment"
    state: Optional[str] = None     # "on" / "off" for access devices
    tag: str = ""


@dataclass
class ResistorNetwork:
    branches: List[Branch] = field(default_factory=list)
    R_on: float = 1e3
    R_off: float = 100e3
    current_sources: List[Tuple[str, float]] = field(default_factory=list)
    voltage_sources: List[Tuple[str, float]] = field(default_factory=list)  # node held at V

    def add(self, a, b, R=0.0, kind="wire_segment", state=None, tag=""):
        self.branches.append(Branch(a, b, float(R), kind, state, tag))

    @property
    def nodes(self) -> List[str]:
        seen = {}
        for br in self.branches:
            seen.setdefault(br.a, None)
            seen.setdefault(br.b, None)
        for n, _ in self.current_sources + self.voltage_sources:
            seen.setdefault(n, None)
        seen.pop(GROUND, None)
        return list(seen)

    def resistance(self, br: Branch) -> float:
        if br.kind == "access_device":
            return self.R_on if br.state == "on" else self.R_off
        return br.R

    def validate(self):
        if not (self.R_on > 0 and self.R_off > 0):
            raise NetworkError("device resistances must be positive")
        if self.R_off < self.R_on:
            raise NetworkError("R_off must not be below R_on")
        for br in self.branches:
            if br.kind not in KINDS:
                raise NetworkError(f"unknown branch kind {br.kind!r}")
            if br.kind == "access_device" and br.state not in ("on", "off"):
                raise NetworkError("access devices need state 'on' or 'off'")
            if not self.resistance(br) > 0 or not np.isfinite(self.resistance(br)):
                raise NetworkError(f"branch {br.a}-{br.b} needs a finite positive resistance")
            if br.a == br.b:
                raise NetworkError(f"branch {br.a}-{br.b} is a self loop")

    def with_devices(self, R_on: Optional[float] = None, R_off: Optional[float] = None) -> "ResistorNetwork":
        return ResistorNetwork([Branch(**vars(b)) for b in self.branches],
                               self.R_on if R_on is None else R_on,
                               self.R_off if R_off is None else R_off,
                               list(self.current_sources), list(self.voltage_sources))

    def scaled(self, factor: float) -> "ResistorNetwork":
        """Every resistance, devices included, multiplied by ``factor``."""
        net = self.with_devices(self.R_on * factor, self.R_off * factor)
        for b in net.branches:
            b.R *= factor
        return net


@dataclass
class Solution:
    nodes: List[str]
    potentials: Dict[str, float]
    branch_currents: np.ndarray     # a -> b, A
    source_currents: Dict[str, float]   # current delivered by each voltage source, A
    residual: float                 # max |KCL residual| over nodes, A
    injected: float                 # total current delivered by all sources, A

    def v(self, node: str) -> float:
        return 0.0 if node == GROUND else self.potentials[node]


def solve(net: ResistorNetwork) -> Solution:
    """Modified nodal analysis: node potentials plus voltage-source currents."""
    net.validate()
    nodes = net.nodes
    if not nodes:
        raise SingularSystem("network has no nodes")
    index = {n: i for i, n in enumerate(nodes)}
    n = len(nodes)
    nv = len(net.voltage_sources)
    Rs = np.array([net.resistance(b) for b in net.branches])
    ia = np.array([index.get(b.a, -1) for b in net.branches], dtype=np.int64)
    ib = np.array([index.get(b.b, -1) for b in net.branches], dtype=np.int64)
    g = 1.0 / Rs

    # floating check: every node must reach ground through branches or sources
    both = (ia >= 0) & (ib >= 0)
    adj = sp.coo_matrix((np.ones(both.sum()), (ia[both], ib[both])), shape=(n, n))
    ncomp, lab = connected_components(adj, directed=False)
    grounded = set(lab[ia[(ia >= 0) & (ib < 0)]]) | set(lab[ib[(ib >= 0) & (ia < 0)]])
    grounded |= {lab[index[v]] for v, _ in net.voltage_sources}
    if len(grounded) < ncomp:
        bad = [nodes[i] for i in range(n) if lab[i] not in grounded][:5]
        raise SingularSystem(f"floating subnetwork containing {bad}")

    rows, cols, vals = [], [], []

    def put(r, c, v):
        rows.append(r)
        cols.append(c)
        vals.append(v)

    diag = np.zeros(n)
    np.add.at(diag, ia[ia >= 0], g[ia >= 0])
    np.add.at(diag, ib[ib >= 0], g[ib >= 0])
    rr = np.concatenate([ia[both], ib[both], np.arange(n)])
    cc = np.concatenate([ib[both], ia[both], np.arange(n)])
    vv = np.concatenate([-g[both], -g[both], diag])
    rhs = np.zeros(n + nv)
    for node, I in net.current_sources:
        rhs[index[node]] += I
    for k, (node, V) in enumerate(net.voltage_sources):
        put(index[node], n + k, 1.0)
        put(n + k, index[node], 1.0)
        rhs[n + k] = V
    A = sp.csc_matrix((np.concatenate([vv, np.array(vals, dtype=float)]),
                       (np.concatenate([rr, np.array(rows, dtype=np.int64)]),
                        np.concatenate([cc, np.array(cols, dtype=np.int64)]))),
                      shape=(n + nv, n + nv))
    with np.errstate(all="ignore"):
        x = spla.spsolve(A, rhs)
    if not np.all(np.isfinite(x)):
        raise SingularSystem("nodal matrix is singular")
    phi = x[:n]
    va = np.where(ia >= 0, phi[np.maximum(ia, 0)], 0.0)
    vb = np.where(ib >= 0, phi[np.maximum(ib, 0)], 0.0)
    I = (va - vb) * g
    # the voltage-source unknown is the current flowing into the node from the network side
    src = {node: -float(x[n + k]) for k, (node, _) in enumerate(net.voltage_sources)}
    kcl = np.zeros(n)
    np.add.at(kcl, ia[ia >= 0], -I[ia >= 0])
    np.add.at(kcl, ib[ib >= 0], I[ib >= 0])
    for node, Iinj in net.current_sources:
        kcl[index[node]] += Iinj
    for node, Isrc in src.items():
        kcl[index[node]] += Isrc
    injected = float(sum(abs(i) for _, i in net.current_sources) + sum(abs(i) for i in src.values()))
    return Solution(nodes, dict(zip(nodes, phi.tolist())), I, src, float(np.max(np.abs(kcl))),
                    injected)


def power_balance(net: ResistorNetwork, sol: Solution) -> Tuple[float, float]:
    """(dissipated, delivered) power in W."""
    Rs = np.array([net.resistance(b) for b in net.branches])
    dissipated = float(np.sum(sol.branch_currents ** 2 * Rs))
    delivered = sum(sol.v(n) * I for n, I in net.current_sources)
    delivered += sum(V * sol.source_currents[n] for n, V in net.voltage_sources)
    return dissipated, float(delivered)


# ---------------------------------------------------------------- bundle network

def density_to_current(j: float, width: float, thickness: float) -> float:
    """Wire current I = j * w * t (A)."""
    if width <= 0 or thickness <= 0:
        raise ValueError("cross-section dimensions must be positive")
    return j * width * thickness


def worst_case_pattern(n_xnw: int, n_domains: int, high_row: int = 1) -> List[List[int]]:
    """One wire alternating (highest R), every other wire uniform (lowest R)."""
    rows = [[1] * n_domains for _ in range(n_xnw)]
    if n_xnw > 0:
        h = min(high_row, n_xnw - 1)
        rows[h] = [(k + 1) % 2 for k in range(n_domains)]
    return rows


@dataclass(frozen=True)
class ArraySpec:
    n_xnw: int = 8
    n_domains: int = 8
    y_columns: Tuple[int, ...] = (4,)
    ynw_extra: Tuple[int, int] = (0, 1)
    pitch: float = 80e-9
    width: float = 40e-9
    thickness: float = 1e-9
    ynw_pitch: float = 80e-9
    ynw_width: float = 40e-9
    R_on: float = 1e3
    R_off: float = 100e3
    y_gating: bool = True
    high_row: int = 1


def _y_domain_R(model: ResistanceModel, spec: ArraySpec) -> float:
    # uniform Y domain; the Y-NW is not part of the data pattern
    return model.rho * spec.ynw_pitch / (spec.ynw_width * spec.thickness) * (1 + model.sign * model.AMRc)


def build_array_network(spec: ArraySpec = ArraySpec(), pattern: Optional[Sequence[Sequence[int]]] = None,
                        model: ResistanceModel = ResistanceModel(),
                        segment_R: Optional[Sequence[Sequence[float]]] = None,
                        y_segment_R: Optional[float] = None) -> ResistorNetwork:
    """Resistor network of ``spec`` holding ``pattern`` (worst case by default).

    ``segment_R[r][k]`` overrides the AMR-derived resistance of domain ``k``
    of X-NW ``r``. No sources are attached; see ``leakage_analysis``.
    """
    nx, nd = spec.n_xnw, spec.n_domains
    if nx < 1 or nd < 1:
        raise InvalidPlacement("need at least one X-NW with one domain")
    cols = tuple(spec.y_columns)
    if len(set(cols)) != len(cols) or any(not 0 <= c < nd for c in cols):
        raise InvalidPlacement(f"Y-NW columns {cols} invalid for {nd} domains")
    if min(spec.ynw_extra) < 0:
        raise InvalidPlacement("negative Y-NW extent")
    pattern = worst_case_pattern(nx, nd, spec.high_row) if pattern is None else pattern
    if len(pattern) != nx or any(len(r) != nd for r in pattern):
        raise InvalidPlacement("pattern shape differs from the array")
    if segment_R is None:
        segment_R = [pattern_domain_resistances(row, pitch=spec.pitch, width=spec.width,
                                                thickness=spec.thickness, model=model)
                     for row in pattern]
    ry = _y_domain_R(model, spec) if y_segment_R is None else y_segment_R
    net = ResistorNetwork(R_on=spec.R_on, R_off=spec.R_off)
    for r in range(nx):
        net.add(f"bl{r}", f"x{r}.n0", kind="access_device", state="on", tag=f"SL{r}")
        for k in range(nd):
            a, b = f"x{r}.n{k}", f"x{r}.n{k + 1}"
            R = float(segment_R[r][k])
            if k in cols:
                c = f"xc{r}_{cols.index(k)}"
                net.add(a, c, R / 2, "xcell_link", tag=f"x{r}.d{k}")
                net.add(c, b, R / 2, "xcell_link", tag=f"x{r}.d{k}")
            else:
                net.add(a, b, R, "wire_segment", tag=f"x{r}.d{k}")
        net.add(f"x{r}.n{nd}", GROUND, kind="access_device", state="on", tag=f"SLB{r}")
    below, above = spec.ynw_extra
    for j, _ in enumerate(cols):
        chain = [f"y{j}.lo{i}" for i in range(below, 0, -1)]
        chain += [f"xc{r}_{j}" for r in range(nx)]
        chain += [f"y{j}.hi{i}" for i in range(1, above + 1)]
        # one Y domain (plus its off access device) between consecutive nodes
        for k, (a, b) in enumerate(zip(chain, chain[1:])):
            if spec.y_gating:
                mid = f"y{j}.g{k}"
                net.add(a, mid, ry, "wire_segment", tag=f"y{j}.seg{k}")
                net.add(mid, b, kind="access_device", state="off", tag=f"y{j}.ap{k}")
            else:
                net.add(a, b, ry, "wire_segment", tag=f"y{j}.seg{k}")
        if spec.y_gating:
            # each end: the end domain's access device, then the SLY device
            for end, node in (("lo", chain[0]), ("hi", chain[-1])):
                t = f"y{j}.t{end}"
                net.add(node, t, kind="access_device", state="off", tag=f"y{j}.ap{end}")
                net.add(t, GROUND, kind="access_device", state="off", tag=f"SLY{j}.{end}")
    return net


@dataclass
class LeakageReport:
    scenario: str
    y_currents: Dict[str, float]
    max_leakage: float
    injected_per_wire: float
    drive: str
    R_on: float
    R_off: float
    sneak_max: float = 0.0          # largest current in a Y domain joining two X-Cells, A

    @property
    def leakage_percent(self) -> float:
        if self.injected_per_wire == 0:
            return 0.0
        return 100.0 * self.max_leakage / self.injected_per_wire


SCENARIOS = ("shift_one", "shift_all")
NETWORKS = ("9cell", "32cell_1y", "32cell_7y")


def leakage_analysis(scenario: str, net: ResistorNetwork, n_xnw: int, *, current: float = 44e-6,
                     driven_row: int = 1, drive: str = "current",
                     voltage: Optional[float] = None) -> LeakageReport:
    """Drive the BLs of ``scenario`` and collect every Y-NW branch current.

    BLs that are not driven are held at ground. In voltage mode each driven
    BL is held at ``voltage`` (default: the level that pushes ``current``
    through an isolated wire) and the percentage is taken against the
    largest driven-wire current.
    """
    if scenario not in SCENARIOS:
        raise ValueError(f"scenario must be one of {SCENARIOS}")
    if drive not in ("current", "voltage"):
        raise ValueError("drive must be 'current' or 'voltage'")
    rows = [min(driven_row, n_xnw - 1)] if scenario == "shift_one" else list(range(n_xnw))
    net = net.with_devices()
    # undriven BL lines sit at ground
    for r in range(n_xnw):
        if r in rows:
            continue
        net.voltage_sources.append((f"bl{r}", 0.0))
    if drive == "current":
        for r in rows:
            net.current_sources.append((f"bl{r}", current))
    else:
        if voltage is None:
            voltage = current * _isolated_wire_R(net, rows[0])
        for r in rows:
            net.voltage_sources.append((f"bl{r}", voltage))
    sol = solve(net)
    ycur = {}
    ends = {}
    for br, I in zip(net.branches, sol.branch_currents):
        if br.tag.startswith("y") or br.tag.startswith("SLY"):
            ycur[br.tag] = float(I)
            ends.setdefault(br.tag.replace(".ap", ".seg"), []).append(br)
    # a gated Y domain is seg (a -> gate) then ap (gate -> b); ungated it is seg alone
    sneak = 0.0
    for tag, brs in ends.items():
        if ".seg" in tag and brs[0].a.startswith("xc") and brs[-1].b.startswith("xc"):
            sneak = max(sneak, abs(ycur[tag]))
    if drive == "current":
        inj = current
    else:
        inj = max(abs(sol.source_currents[f"bl{r}"]) for r in rows)
    mx = max((abs(v) for v in ycur.values()), default=0.0)
    return LeakageReport(scenario, ycur, mx, inj, drive, net.R_on, net.R_off, sneak)


def _isolated_wire_R(net: ResistorNetwork, row: int) -> float:
    total = 0.0
    for b in net.branches:
        if b.tag in (f"SL{row}", f"SLB{row}"):
            total += net.resistance(b)
        elif b.tag.startswith(f"x{row}.d"):
            total += b.R
    return total


def scenario_network(name: str, R_off: Optional[float] = None, **kw) -> Tuple[ArraySpec, ResistorNetwork]:
    """Named bundle studies: ``9cell``, ``32cell_1y`` and ``32cell_7y``."""
    specs = {
        "9cell": ArraySpec(n_xnw=8, y_columns=(4,), ynw_extra=(0, 1)),
        "32cell_1y": ArraySpec(n_xnw=32, y_columns=(4,), ynw_extra=(0, 1)),
        "32cell_7y": ArraySpec(n_xnw=32, y_columns=tuple(range(1, 8)), ynw_extra=(0, 1)),
    }
    if name not in specs:
        raise KeyError(f"unknown scenario {name!r}; choose from {sorted(specs)}")
    spec = specs[name]
    if R_off is not None:
        kw["R_off"] = R_off
    if kw:
        from dataclasses import replace

        spec = replace(spec, **kw)
    return spec, build_array_network(spec)


def r_off_sweep(values: Iterable[float], scenario: str = "9cell", **kw) -> List[Tuple[float, float, float]]:
    """(R_off, shift_one %, shift_all %) for each R_off."""
    out = []
    for v in values:
        spec, net = scenario_network(scenario, R_off=v)
        one = leakage_analysis("shift_one", net, spec.n_xnw, driven_row=spec.high_row, **kw)
        allr = leakage_analysis("shift_all", net, spec.n_xnw, driven_row=spec.high_row, **kw)
        out.append((float(v), one.leakage_percent, allr.leakage_percent))
    return out


# ---------------------------------------------------------------- text formats

def export_edges(net: ResistorNetwork) -> str:
    """Plain-text edge list: ``node node ohms kind state`` per line."""
    out = io.StringIO()
    out.write(f"# R_on {net.R_on!r} R_off {net.R_off!r}\n")
    for b in net.branches:
        out.write(f"{b.a} {b.b} {net.resistance(b)!r} {b.kind} {b.state or '-'} {b.tag or '-'}\n")
    return out.getvalue()


def import_edges(text: str) -> ResistorNetwork:
    net = ResistorNetwork()
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            parts = line[1:].split()
            if len(parts) == 4 and parts[0] == "R_on" and parts[2] == "R_off":
                net.R_on, net.R_off = float(parts[1]), float(parts[3])
            continue
        f = line.split()
        if len(f) not in (5, 6):
            raise NetworkError(f"bad edge line: {line!r}")
        state = None if f[4] == "-" else f[4]
        tag = f[5] if len(f) == 6 and f[5] != "-" else ""
        net.add(f[0], f[1], float(f[2]), f[3], state, tag)
    return net


def write_leakage_csv(path, reports: Sequence[Tuple[str, LeakageReport]], *, rho: float,
                      header_lines: Sequence[str] = ()):
    with open(path, "w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        if reports:
            r0 = reports[0][1]
            fh.write(f"# rho={rho!r} R_on={r0.R_on!r} R_off={r0.R_off!r} drive={r0.drive}\n")
        w = csv.writer(fh)
        w.writerow(["study", "scenario", "injected_A", "max_leakage_A", "leakage_percent",
                    "sneak_A"])
        for name, rep in reports:
            w.writerow([name, rep.scenario, repr(rep.injected_per_wire), repr(rep.max_leakage),
                        repr(rep.leakage_percent), repr(rep.sneak_max)])
