"""Domain-wall experiments: seeding, tracking, velocity, shift windows,
X-Cell stability and the X-then-Y bundle shift.

Walls are tracked through the zero crossing of the width-averaged m_z
along a wire. Shift experiments apply one current pulse of fixed length
``pulse_factor * pitch / v_analytic(pulse_j)`` at every density, let the
system ring down without current and classify the final wall displacement.
``pulse_j=None`` scales the pulse with each density instead.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy.ndimage import uniform_filter1d

from .current import (CurrentMap, current_map, uniform_current, x_shift_terminals,
                      y_shift_terminals)
from .field import normalize, uniform
from .geometry import GeometrySpec, Mesh, Wire, build_mesh, cross, fig3_spec
from .llg import LLGSolver, NotConverged, SimState, SolverConfig
from .material import CONSTANTS, MaterialParams, PhysicalConstants

log = logging.getLogger(__name__)

CLASSES = ("stuck", "partial", "shifted", "overshot")
RANK = {"backward": 0, "stuck": 0, "partial": 1, "shifted": 2, "overshot": 3, "lost": 3}


class WallCountMismatch(RuntimeError):
    def __init__(self, found: int, expected: int, wire: str = ""):
        super().__init__(f"found {found} wall(s) on {wire or 'wire'}, expected {expected}")
        self.found = found
        self.expected = expected


class WallExited(RuntimeError):
    pass


class NoWindow(RuntimeError):
    def __init__(self, points):
        self.points = list(points)
        txt = ", ".join(f"{p.j:.3g}:{p.label}" for p in self.points)
        super().__init__(f"no current density gives a clean one-pitch shift ({txt})")


@dataclass
class DWTrace:
    wire: str
    times: np.ndarray
    positions: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.positions = np.asarray(self.positions, dtype=float)
        if self.times.shape != self.positions.shape:
            raise ValueError("times and positions differ in length")
        if self.times.size > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("trace times must be strictly increasing")


@dataclass
class ShiftPoint:
    j: float
    label: str
    displacement: float            # m, along the shift direction
    pulse: float                   # s


@dataclass
class ShiftWindow:
    j_low: float
    j_high: float
    resolution: float
    points: List[ShiftPoint] = field(default_factory=list)

    @property
    def j_avg(self) -> float:
        # midpoint of the window
        return 0.5 * (self.j_low + self.j_high)

    @property
    def violations(self) -> List[Tuple[float, str, str]]:
        """Neighbouring grid points whose classes step backwards."""
        out = []
        for a, b in zip(self.points, self.points[1:]):
            if RANK[b.label] < RANK[a.label]:
                out.append((b.j, a.label, b.label))
        return out

    @property
    def monotone(self) -> bool:
        return not self.violations


# ---------------------------------------------------------------- analytic

def analytic_dw_velocity(j, p: MaterialParams = MaterialParams(),
                         c: PhysicalConstants = CONSTANTS):
    """Steady wall speed beta*gamma*hbar*P*J / (2 e alpha Ms) in m/s."""
    return p.beta * c.gamma * c.hbar * p.P * np.asarray(j, dtype=float) / (2 * c.e * p.alpha * p.Ms)


def pulse_length(j: float, pitch: float, p: MaterialParams, factor: float = 1.5,
                 c: PhysicalConstants = CONSTANTS) -> float:
    v = float(analytic_dw_velocity(abs(j), p, c))
    return 0.0 if v == 0 else factor * pitch / v


# ---------------------------------------------------------------- seeding

def pattern_state(mesh: Mesh, bits: Mapping[str, int], default: int = 1,
                  smooth_cells: int = 5) -> np.ndarray:
    """Magnetisation with each named region set to +z (bit 1) or -z (bit 0).

    Sign changes are softened along each wire axis into a Bloch-like
    rotation so that the seed is not a zero-torque stationary point.
    """
    for name in bits:
        if name not in mesh.regions:
            raise KeyError(f"unknown region {name!r}")
    sz = np.full(mesh.shape, 1.0 if default else -1.0)
    for name, r in mesh.regions.items():
        if name in bits:
            sz[r] = 1.0 if bits[name] else -1.0
    sz *= mesh.occupancy
    mz = sz.copy()
    perp = np.zeros((3,) + mesh.shape)
    x_band = np.zeros(mesh.shape, dtype=bool)
    for w in mesh.wires.values():
        if w.axis == "x":
            x_band |= w.band
    for w in mesh.wires.values():
        ax = w.length_axis_index
        sel = w.band if w.axis == "x" else (w.band & ~x_band)
        sm = uniform_filter1d(sz, smooth_cells, axis=ax, mode="nearest")
        mz[sel] = sm[sel]
        perp[1 if w.axis == "x" else 0][sel] = 1.0
    if not mesh.wires:
        perp[1][mesh.occupancy] = 1.0
    mz = np.clip(mz, -1.0, 1.0)
    mt = np.sqrt(1.0 - mz ** 2)
    m = perp * mt
    m[2] = mz
    return normalize(m * mesh.occupancy, mesh)


def region_bits(m: np.ndarray, mesh: Mesh, names: Sequence[str]) -> List[int]:
    """sign of the region-averaged m_z as 1/0."""
    return [int(m[2][mesh.regions[n]].mean() > 0) for n in names]


def wire_bits(m: np.ndarray, mesh: Mesh) -> Dict[str, List[int]]:
    return {n: region_bits(m, mesh, w.domains) for n, w in mesh.wires.items()}


def current_bits(m: np.ndarray, mesh: Mesh) -> Dict[str, int]:
    return {n: int(m[2][r].mean() > 0) for n, r in mesh.regions.items()}


def seed_wall(solver: LLGSolver, wire: str = "x0", boundary_index: int = 4, *,
              state: Optional[SimState] = None, extra: Mapping[str, int] = (),
              relax: bool = True, strict: bool = True,
              max_steps: Optional[int] = None) -> SimState:
    """Up domains before ``boundary_index`` and down domains after it.

    Other regions keep their sign from ``state`` (or +z); ``extra`` forces
    named regions. With ``strict=False`` a relaxation that runs out of
    steps returns its last state instead of raising.
    """
    mesh = solver.mesh
    w = mesh.wires[wire]
    if not 0 <= boundary_index <= len(w.domains):
        raise IndexError(f"boundary {boundary_index} outside wire {wire}")
    bits = current_bits(state.m, mesh) if state is not None else {}
    for k, name in enumerate(w.domains):
        bits[name] = 1 if k < boundary_index else 0
    bits.update(dict(extra))
    m = pattern_state(mesh, bits)
    st = SimState(0.0 if state is None else state.time, m)
    if not relax:
        return st
    try:
        return solver.relax(st, max_steps=max_steps)
    except NotConverged as exc:
        if strict:
            raise
        log.info("seed relaxation stopped early: %s", exc)
        return exc.state


# ---------------------------------------------------------------- tracking

def wire_profile(m: np.ndarray, mesh: Mesh, wire: Wire) -> Tuple[np.ndarray, np.ndarray]:
    """Width-averaged m_z along ``wire`` and the cell-centre coordinate (m)."""
    ax = wire.length_axis_index
    other = tuple(a for a in (0, 1, 2) if a != ax)
    band = wire.band
    cnt = band.sum(axis=other)
    tot = (m[2] * band).sum(axis=other)
    d = mesh.dx if wire.axis == "x" else mesh.dy
    idx = np.arange(mesh.shape[ax])
    keep = cnt > 0
    prof = tot[keep] / cnt[keep]
    pos = (idx[keep] + 0.5 - wire.start) * d
    return pos, prof


def wall_positions(m: np.ndarray, mesh: Mesh, wire) -> List[float]:
    """Every zero crossing of the averaged m_z, linearly interpolated."""
    w = mesh.wires[wire] if isinstance(wire, str) else wire
    pos, prof = wire_profile(m, mesh, w)
    s = np.sign(prof)
    out = []
    for i in np.nonzero(s[:-1] * s[1:] < 0)[0]:
        a, b = prof[i], prof[i + 1]
        out.append(pos[i] + (pos[i + 1] - pos[i]) * a / (a - b))
    # exact zeros on a cell centre
    for i in np.nonzero(s == 0)[0]:
        if 0 < i < len(s) - 1 and s[i - 1] * s[i + 1] < 0:
            out.append(pos[i])
    return sorted(out)


def track_wall(m: np.ndarray, mesh: Mesh, wire="x0") -> float:
    """Position (m from the wire start) of the single wall on ``wire``."""
    ps = wall_positions(m, mesh, wire)
    if len(ps) != 1:
        raise WallCountMismatch(len(ps), 1, wire if isinstance(wire, str) else wire.name)
    return ps[0]


# ---------------------------------------------------------------- velocity

def measure_velocity(j: float, duration: float = 1e-9, *,
                     spec: Optional[GeometrySpec] = None,
                     params: MaterialParams = MaterialParams(),
                     config: SolverConfig = SolverConfig(),
                     boundary_index: Optional[int] = None,
                     samples: int = 41, discard: float = 0.2,
                     seed_steps: int = 400) -> Tuple[float, DWTrace]:
    """Wall speed on a notch-free wire from a least-squares position fit.

    The first ``discard`` fraction of the trace is dropped as transient.
    """
    spec = spec or GeometrySpec(kind="plain_wire")
    if spec.notched or spec.ynw_columns:
        raise ValueError("velocity is measured on a plain, notch-free wire")
    mesh = build_mesh(spec)
    wire = mesh.wires["x0"]
    bidx = spec.n_domains // 4 if boundary_index is None else boundary_index
    solver = LLGSolver(mesh, params, config)
    state = seed_wall(solver, "x0", max(bidx, 1), relax=True, strict=False,
                      max_steps=seed_steps)
    state = SimState(0.0, state.m)
    solver.set_current(uniform_current(mesh, ["x0"], j))
    length = wire.n_cells * mesh.dx
    margin = 2 * np.pi * np.sqrt(params.A / params.k_eff())
    ts, xs = [], []

    def sample(st: SimState):
        try:
            x = track_wall(st.m, mesh, wire)
        except WallCountMismatch as exc:
            raise WallExited(f"wall lost at t={st.time:.3e} s") from exc
        if x < margin or x > length - margin:
            raise WallExited(f"wall reached the wire end at t={st.time:.3e} s")
        ts.append(st.time)
        xs.append(x)

    solver.run(state, duration, sample_every=duration / (samples - 1), on_sample=sample)
    trace = DWTrace("x0", np.array(ts), np.array(xs))
    keep = trace.times >= trace.times[0] + discard * (trace.times[-1] - trace.times[0])
    v = float(np.polyfit(trace.times[keep], trace.positions[keep], 1)[0])
    return v, trace


# ---------------------------------------------------------------- shift window

def classify_shift(displacement: float, pitch: float, tol: Optional[float] = None) -> str:
    tol = pitch / 4 if tol is None else tol
    if displacement < -tol:
        return "backward"
    if abs(displacement) <= tol:
        return "stuck"
    if abs(displacement - pitch) <= tol:
        return "shifted"
    if displacement > pitch + tol:
        return "overshot"
    return "partial"


def _shift_terminals(mesh: Mesh, wire: str, direction: int):
    w = mesh.wires[wire]
    if w.axis == "x":
        return x_shift_terminals(mesh, rows=[int(wire[1:])], direction=direction)
    return y_shift_terminals(mesh, int(wire[1:]), direction)


def drive_map(mesh: Mesh, wires: Sequence[str], j: float, direction: int = 1) -> CurrentMap:
    """Current map for shifting ``wires``; plain single wires use the fast mode."""
    if len(mesh.wires) == 1 and not (mesh.spec and mesh.spec.notched):
        return uniform_current(mesh, list(wires), j, direction)
    terms = []
    for w in wires:
        terms += _shift_terminals(mesh, w, direction)
    return current_map(mesh, terms, j)


def apply_pulse(solver: LLGSolver, state: SimState, current: Optional[CurrentMap],
                duration: float, settle: float, *, sample_every: Optional[float] = None,
                on_sample=None) -> SimState:
    """Current pulse of ``duration`` then ``settle`` seconds without current."""
    if duration > 0 and current is not None:
        solver.set_current(current)
        state = solver.run(state, duration, sample_every=sample_every, on_sample=on_sample)
    solver.set_current(None)
    if settle > 0:
        state = solver.run(state, settle, sample_every=sample_every, on_sample=on_sample)
    return state


def _shift_point(args) -> ShiftPoint:
    (spec, j, params, config, wire, boundary, pre, settle, factor, pulse_j, relax_steps,
     state0) = args
    mesh = build_mesh(spec)
    solver = LLGSolver(mesh, params, config)
    w = mesh.wires[wire]
    pitch = w.pitch_cells * (mesh.dx if w.axis == "x" else mesh.dy)
    if state0 is None:
        state0 = seed_wall(solver, wire, boundary, strict=False)
    x0 = track_wall(state0.m, mesh, wire)
    st = SimState(0.0, state0.m.copy())
    if pre > 0:
        st = solver.run(st, pre)
    T = pulse_length(j if pulse_j is None else pulse_j, pitch, params, factor)
    st = apply_pulse(solver, st, drive_map(mesh, [wire], j), T, settle)
    if relax_steps:
        try:
            st = solver.relax(st, max_steps=relax_steps)
        except NotConverged as exc:
            st = exc.state
    try:
        x1 = track_wall(st.m, mesh, wire)
    except WallCountMismatch:
        return ShiftPoint(j, "lost", float("nan"), T)
    d = x1 - x0
    return ShiftPoint(j, classify_shift(d, pitch), d, T)


def shift_points(spec: GeometrySpec, j_grid: Sequence[float], *,
                 params: MaterialParams = MaterialParams(),
                 config: SolverConfig = SolverConfig(), wire: str = "x0",
                 boundary_index: Optional[int] = None, pre: float = 0.5e-9,
                 settle: float = 1e-9, pulse_factor: float = 1.5,
                 pulse_j: Optional[float] = 1.1e12,
                 relax_steps: int = 2000, workers: int = 1) -> List[ShiftPoint]:
    """Run the pulse protocol at every density of ``j_grid``."""
    js = [float(j) for j in j_grid]
    if any(b <= a for a, b in zip(js, js[1:])):
        raise ValueError("j_grid must be strictly ascending")
    if boundary_index is None:
        boundary_index = spec.ynw_columns[0] if spec.ynw_columns else spec.n_domains // 2
    # one shared relaxed seed keeps every grid point on the same start state
    mesh = build_mesh(spec)
    seed = seed_wall(LLGSolver(mesh, params, config), wire, boundary_index, strict=False)
    jobs = [(spec, j, params, config, wire, boundary_index, pre, settle, pulse_factor,
             pulse_j, relax_steps, seed) for j in js]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_shift_point, jobs))
    return [_shift_point(a) for a in jobs]


def window_from_points(points: Sequence[ShiftPoint]) -> ShiftWindow:
    ok = [p.j for p in points if p.label == "shifted"]
    if not ok:
        raise NoWindow(points)
    js = [p.j for p in points]
    res = float(min(np.diff(js))) if len(js) > 1 else 0.0
    return ShiftWindow(min(ok), max(ok), res, list(points))


def find_shift_window(spec: GeometrySpec, j_grid: Sequence[float], **kw) -> ShiftWindow:
    """Smallest and largest density on ``j_grid`` that shift by exactly one pitch."""
    return window_from_points(shift_points(spec, j_grid, **kw))


def average_shift_density(window: ShiftWindow) -> float:
    return window.j_avg


# ---------------------------------------------------------------- stability

@dataclass
class StabilityPoint:
    width: float
    length: float
    stable: bool
    min_mz: float
    converged: bool


def cross_stability(length: float, width: float, *, params: MaterialParams = MaterialParams(),
                    config: SolverConfig = SolverConfig(), threshold: float = 0.9,
                    tilt: float = 0.3, seed: int = 0,
                    max_steps: Optional[int] = 3000) -> StabilityPoint:
    """Relax an isolated cross from a randomly tilted +z state."""
    mesh = build_mesh(cross(length, width))
    rng = np.random.default_rng(seed)
    m = uniform(mesh)
    m[:2] += tilt * rng.standard_normal((2,) + mesh.shape)
    m = normalize(m * mesh.occupancy, mesh)
    solver = LLGSolver(mesh, params, config)
    st = SimState(0.0, m)
    converged = True
    try:
        st = solver.relax(st, max_steps=max_steps)
    except NotConverged as exc:
        st = exc.state
        converged = False
    region = mesh.regions["xcell0_0"]
    mz = st.m[2][region]
    min_mz = float(np.min(np.abs(mz)))
    same_sign = bool(np.all(mz > 0) or np.all(mz < 0))
    stable = converged and same_sign and min_mz > threshold
    return StabilityPoint(width, length, stable, min_mz, converged)


def _stability_job(args):
    l, w, kw = args
    return cross_stability(l, w, **kw)


def stability_map(width_range: Tuple[float, float], length_range: Tuple[float, float],
                  step: float, *, workers: int = 1, **kw) -> List[StabilityPoint]:
    """Stable / unstable grid over cross widths (Y extent) and lengths (X extent)."""
    (w0, w1), (l0, l1) = width_range, length_range
    if min(w0, w1, l0, l1, step) <= 0:
        raise ValueError("ranges and step must be positive")
    n_w = int(round((w1 - w0) / step)) + 1
    n_l = int(round((l1 - l0) / step)) + 1
    widths = w0 + step * np.arange(n_w)
    lengths = l0 + step * np.arange(n_l)
    jobs = [(float(l), float(w), kw) for w in widths for l in lengths]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_stability_job, jobs))
    return [_stability_job(a) for a in jobs]


# ---------------------------------------------------------------- two-wire X then Y demo

FIG3_INITIAL = ((1, 0, 1, 1), (0, 1, 0, 0))


@dataclass
class ShiftDemo:
    """Bit matrices (top row first) after each phase plus X-Cell m_z traces."""

    phases: List[str]
    matrices: List[np.ndarray]
    times: np.ndarray
    xcell_mz: Dict[str, np.ndarray]
    transverse_max: List[float]


def bits_matrix(m: np.ndarray, mesh: Mesh) -> np.ndarray:
    """Rows of X-NW bits ordered top (largest y) to bottom."""
    names = sorted((n for n, w in mesh.wires.items() if w.axis == "x"), key=lambda s: int(s[1:]))
    rows = [region_bits(m, mesh, mesh.wires[n].domains) for n in names]
    return np.array(rows[::-1], dtype=int)


def xdwm_shift_demo(*, j: float = 1.4e12, params: MaterialParams = MaterialParams(),
                    config: SolverConfig = SolverConfig(),
                    initial: Sequence[Sequence[int]] = FIG3_INITIAL,
                    spec: Optional[GeometrySpec] = None, pulse_factor: float = 1.5,
                    pulse_j: Optional[float] = 1.1e12,
                    settle: float = 1e-9, pulse: Optional[float] = None,
                    sample_every: float = 20e-12,
                    relax_steps: Optional[int] = 2000) -> ShiftDemo:
    """Shift both X-NWs one pitch, then the Y-NW one pitch upwards.

    ``initial`` lists rows top first. Each phase is a pulse, ``settle``
    seconds without current and up to ``relax_steps`` damped steps.
    ``pulse`` overrides the pulse length of both phases (0 gives the no-op
    run).
    """
    spec = spec or fig3_spec()
    mesh = build_mesh(spec)
    solver = LLGSolver(mesh, params, config)
    xnames = sorted((n for n, w in mesh.wires.items() if w.axis == "x"), key=lambda s: int(s[1:]))
    rows = list(initial)[::-1]
    if len(rows) != len(xnames):
        raise ValueError(f"initial pattern has {len(rows)} rows, geometry has {len(xnames)}")
    bits = {}
    for name, row in zip(xnames, rows):
        doms = mesh.wires[name].domains
        if len(row) != len(doms):
            raise ValueError("row length differs from the domain count")
        bits.update(dict(zip(doms, row)))
    for y in (n for n, w in mesh.wires.items() if w.axis == "y"):
        for d in mesh.wires[y].domains:
            bits.setdefault(d, 1)
    st = SimState(0.0, pattern_state(mesh, bits))
    try:
        st = solver.relax(st, max_steps=relax_steps)
    except NotConverged as exc:
        st = exc.state
    st = SimState(0.0, st.m)
    xc_names = sorted(mesh.xcells)
    trace_t: List[float] = []
    trace_mz: Dict[str, List[float]] = {n: [] for n in xc_names}

    def sample(s: SimState):
        if trace_t and s.time <= trace_t[-1]:
            return
        trace_t.append(s.time)
        for n in xc_names:
            trace_mz[n].append(float(s.m[2][mesh.regions[n]].mean()))

    # crossing core of each X-Cell: walls pinned at its domain edges stay outside
    cores = {n: mesh.regions[n] & mesh.wires[f"x{r}"].band & mesh.wires[f"y{c}"].band
             for n, (r, c) in mesh.xcells.items()}

    def transverse(s: SimState) -> float:
        return max(float(np.abs(s.m[:2][:, cores[n]].mean(axis=1)).max()) for n in xc_names)

    def ring_down(s: SimState) -> SimState:
        # damped relaxation after the settle, as in the shift-window protocol
        if not relax_steps:
            return s
        try:
            r = solver.relax(s, max_steps=relax_steps)
        except NotConverged as exc:
            r = exc.state
        return SimState(s.time, r.m)

    pitch_x = spec.domain_length
    pitch_y = spec.ynw_domain_length
    jp = j if pulse_j is None else pulse_j
    tx = pulse_length(jp, pitch_x, params, pulse_factor) if pulse is None else pulse
    ty = pulse_length(jp, pitch_y, params, pulse_factor) if pulse is None else pulse
    phases = ["initial"]
    mats = [bits_matrix(st.m, mesh)]
    trans = [transverse(st)]
    sample(st)
    st = apply_pulse(solver, st, drive_map(mesh, xnames, j), tx, settle,
                     sample_every=sample_every, on_sample=sample)
    st = ring_down(st)
    phases.append("x_shift")
    mats.append(bits_matrix(st.m, mesh))
    trans.append(transverse(st))
    ynames = [n for n, w in mesh.wires.items() if w.axis == "y"]
    st = apply_pulse(solver, st, drive_map(mesh, ynames, j), ty, settle,
                     sample_every=sample_every, on_sample=sample)
    st = ring_down(st)
    phases.append("y_shift")
    mats.append(bits_matrix(st.m, mesh))
    trans.append(transverse(st))
    return ShiftDemo(phases, mats, np.array(trace_t),
                     {n: np.array(v) for n, v in trace_mz.items()}, trans)
