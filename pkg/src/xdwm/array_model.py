"""Bit-level model of an XDWM array.

Rows are X-NWs, stored bottom (row 0) to top; each row holds
``pad + cols + pad`` domains. A Y-NW owns a column of X-Cells over a span
of rows plus its own extra domains below and above the bundle. An X-Cell
value is stored once, in the row matrix, so both wires always see the same
value. ``VACANT`` marks a domain that holds no data.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

VACANT = -1
FILLS = ("vacant", "zero", "extend")
SYMBOL = {0: "0", 1: "1", VACANT: "."}
VALUE = {v: k for k, v in SYMBOL.items()}


class ArrayError(Exception):
    pass


class Overflow(ArrayError):
    pass


class Misaligned(ArrayError):
    pass


class SimultaneousShift(ArrayError):
    pass


@dataclass(frozen=True)
class YWire:
    column: int                     # physical column in the row matrix
    rows: Tuple[int, int]           # [lo, hi) span of X-NWs it crosses
    below: Tuple[int, ...] = ()     # extra domains, bottom first
    above: Tuple[int, ...] = ()     # extra domains, bottom first


@dataclass(frozen=True)
class ArrayState:
    bits: np.ndarray                # (rows, pad + cols + pad) int8
    pad: int = 0
    ywires: Tuple[YWire, ...] = ()
    offsets: Tuple[int, ...] = ()   # net X shift of every row

    def __post_init__(self):
        b = np.array(self.bits, dtype=np.int8)
        if b.ndim != 2:
            raise ArrayError("bits must be a 2D matrix")
        if not np.isin(b, (0, 1, VACANT)).all():
            raise ArrayError("bits must be 0, 1 or vacant")
        b.setflags(write=False)
        object.__setattr__(self, "bits", b)
        if not self.offsets:
            object.__setattr__(self, "offsets", (0,) * b.shape[0])
        for y in self.ywires:
            if not 0 <= y.column < b.shape[1]:
                raise ArrayError(f"Y-NW column {y.column} outside the array")
            lo, hi = y.rows
            if not 0 <= lo < hi <= b.shape[0]:
                raise ArrayError(f"Y-NW rows {y.rows} outside the array")

    @property
    def n_rows(self) -> int:
        return self.bits.shape[0]

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def cols(self) -> int:
        return self.width - 2 * self.pad

    def data(self) -> np.ndarray:
        return np.array(self.bits[:, self.pad:self.pad + self.cols])

    def y_vector(self, index: int) -> np.ndarray:
        """Values along Y-NW ``index`` from its bottom end to its top end."""
        y = self.ywires[index]
        lo, hi = y.rows
        return np.concatenate([np.array(y.below, dtype=np.int8),
                               self.bits[lo:hi, y.column],
                               np.array(y.above, dtype=np.int8)])

    def non_vacant(self) -> List[int]:
        """Every stored non-vacant bit (X-Cells counted once)."""
        vals = [int(v) for v in self.bits.ravel() if v != VACANT]
        for y in self.ywires:
            vals += [int(v) for v in y.below + y.above if v != VACANT]
        return vals

    def __eq__(self, other):
        if not isinstance(other, ArrayState):
            return NotImplemented
        return (self.pad == other.pad and self.ywires == other.ywires
                and np.array_equal(self.bits, other.bits))

    def __hash__(self):
        return hash((self.bits.tobytes(), self.bits.shape, self.pad, self.ywires))


def make_state(data, *, pad: int = 0, ycols: Sequence[int] = (), extra: Tuple[int, int] = (0, 0),
               extra_fill: int = VACANT) -> ArrayState:
    """State from a rows x cols matrix (row 0 = bottom) with padding domains.

    ``ycols`` are data columns of Y-NWs spanning every row; each gets
    ``extra`` domains below/above filled with ``extra_fill``.
    """
    d = np.asarray(data, dtype=np.int8)
    if d.ndim != 2:
        raise ArrayError("data must be a matrix")
    rows = d.shape[0]
    bits = np.full((rows, d.shape[1] + 2 * pad), VACANT, dtype=np.int8)
    bits[:, pad:pad + d.shape[1]] = d
    yw = tuple(YWire(pad + c, (0, rows), (extra_fill,) * extra[0], (extra_fill,) * extra[1])
               for c in ycols)
    return ArrayState(bits, pad, yw)


def _fill_value(fill: str, edge: int) -> int:
    if fill == "vacant":
        return VACANT
    if fill == "zero":
        return 0
    if fill == "extend":
        return int(edge)
    raise ArrayError(f"unknown fill {fill!r}; choose from {FILLS}")


def _shift_line(v: np.ndarray, step: int, lossy: bool, fill: str) -> np.ndarray:
    """Move ``v`` one place towards higher (+1) or lower (-1) indices."""
    out = np.empty_like(v)
    if step > 0:
        lost = v[-1]
        out[1:] = v[:-1]
        out[0] = _fill_value(fill, v[0])
    else:
        lost = v[0]
        out[:-1] = v[1:]
        out[-1] = _fill_value(fill, v[-1])
    if lost != VACANT and not lossy:
        raise Overflow("shift would push a data bit off the wire")
    return out


def _dir(direction, pos: str, neg: str) -> int:
    if direction in (1, pos):
        return 1
    if direction in (-1, neg):
        return -1
    raise ArrayError(f"direction must be {pos!r} or {neg!r}")


def shift_x(state: ArrayState, direction="right", rows: Optional[Iterable[int]] = None, *,
            lossy: bool = False, fill: str = "vacant") -> ArrayState:
    """Shift the selected X-NWs one domain; X-Cells take the incoming value."""
    step = _dir(direction, "right", "left")
    sel = range(state.n_rows) if rows is None else sorted(set(rows))
    bits = np.array(state.bits)
    offsets = list(state.offsets)
    for r in sel:
        if not 0 <= r < state.n_rows:
            raise ArrayError(f"row {r} outside the array")
        bits[r] = _shift_line(bits[r], step, lossy, fill)
        offsets[r] += step
    return replace(state, bits=bits, offsets=tuple(offsets))


def shift_y(state: ArrayState, y_index: int = 0, direction="up", *, lossy: bool = False,
            fill: str = "vacant") -> ArrayState:
    """Shift Y-NW ``y_index`` one domain; every X-Cell it owns is rewritten."""
    step = _dir(direction, "up", "down")
    y = state.ywires[y_index]
    v = _shift_line(state.y_vector(y_index), step, lossy, fill)
    nb = len(y.below)
    lo, hi = y.rows
    bits = np.array(state.bits)
    bits[lo:hi, y.column] = v[nb:nb + hi - lo]
    ny = YWire(y.column, y.rows, tuple(int(a) for a in v[:nb]),
               tuple(int(a) for a in v[nb + hi - lo:]))
    yw = list(state.ywires)
    yw[y_index] = ny
    return replace(state, bits=bits, ywires=tuple(yw))


def shift_parallel(state: ArrayState, *, x_rows: Sequence[int], x_direction="right",
                   y_index: int, y_direction="up", **kw) -> ArrayState:
    """X and Y shifts in the same cycle, only when the wires do not intersect."""
    lo, hi = state.ywires[y_index].rows
    if any(lo <= r < hi for r in x_rows):
        raise SimultaneousShift("X rows cross the shifting Y-NW; the outcome is undefined")
    s = shift_x(state, x_direction, x_rows, **kw)
    return shift_y(s, y_index, y_direction, **kw)


@dataclass(frozen=True)
class PortMap:
    rows: Tuple[Tuple[int, ...], ...]   # physical port columns per row
    ynw: Tuple[int, ...] = ()           # port position along each Y vector

    @classmethod
    def uniform(cls, state: ArrayState, columns: Sequence[int]) -> "PortMap":
        cols = tuple(state.pad + c for c in columns)
        return cls(tuple(cols for _ in range(state.n_rows)),
                   tuple(len(y.below) for y in state.ywires))

    def check(self, state: ArrayState, row: int, port: int) -> int:
        if not 0 <= row < len(self.rows):
            raise Misaligned(f"row {row} has no access port")
        if not 0 <= port < len(self.rows[row]):
            raise Misaligned(f"row {row} has no port {port}")
        return self.rows[row][port]


def read(state: ArrayState, row: int, port: int, ports: PortMap,
         index: Optional[int] = None) -> int:
    """Bit under a row's access port.

    With ``index`` (a logical domain of the row) the domain must currently
    sit under the port.
    """
    col = ports.check(state, row, port)
    if index is not None and state.pad + index + state.offsets[row] != col:
        raise Misaligned(f"domain {index} of row {row} is not at port {port}")
    v = int(state.bits[row, col])
    if v == VACANT:
        raise Misaligned(f"port {port} of row {row} faces a vacant domain")
    return v


def write(state: ArrayState, row: int, port: int, bit: int, ports: PortMap,
          index: Optional[int] = None) -> ArrayState:
    if bit not in (0, 1):
        raise ArrayError("only 0 or 1 can be written")
    col = ports.check(state, row, port)
    if index is not None and state.pad + index + state.offsets[row] != col:
        raise Misaligned(f"domain {index} of row {row} is not at port {port}")
    bits = np.array(state.bits)
    bits[row, col] = bit
    return replace(state, bits=bits)


def read_y(state: ArrayState, y_index: int, ports: PortMap) -> int:
    v = int(state.y_vector(y_index)[ports.ynw[y_index]])
    if v == VACANT:
        raise Misaligned(f"Y port {y_index} faces a vacant domain")
    return v


def write_y(state: ArrayState, y_index: int, bit: int, ports: PortMap) -> ArrayState:
    y = state.ywires[y_index]
    pos = ports.ynw[y_index]
    v = state.y_vector(y_index)
    v[pos] = bit
    nb = len(y.below)
    lo, hi = y.rows
    bits = np.array(state.bits)
    bits[lo:hi, y.column] = v[nb:nb + hi - lo]
    yw = list(state.ywires)
    yw[y_index] = YWire(y.column, y.rows, tuple(int(a) for a in v[:nb]),
                        tuple(int(a) for a in v[nb + hi - lo:]))
    return replace(state, bits=bits, ywires=tuple(yw))


def logical_shift_word(state: ArrayState, rows: Tuple[int, int], column: int, amount: int,
                       direction="down", *, fill: str = "zero", lossy: bool = False) -> ArrayState:
    """Shift the word held in ``rows`` at data ``column`` by ``amount`` rows.

    Implemented as ``amount`` Y shifts; the incoming end is zero filled and
    bits leaving the word land in the Y-NW's extra domains.
    """
    if amount < 0:
        raise ArrayError("amount must be non-negative")
    col = state.pad + column
    idx = [k for k, y in enumerate(state.ywires) if y.column == col]
    if not idx:
        raise ArrayError(f"no Y-NW at column {column}")
    k = idx[0]
    lo, hi = state.ywires[k].rows
    if not (lo <= rows[0] < rows[1] <= hi):
        raise ArrayError(f"Y-NW at column {column} does not span rows {rows}")
    for _ in range(amount):
        state = shift_y(state, k, direction, fill=fill, lossy=lossy)
        if fill == "zero":
            # vacant padding entering the word reads as zero
            seg = state.bits[rows[0]:rows[1], col]
            if (seg == VACANT).any():
                bits = np.array(state.bits)
                bits[rows[0]:rows[1], col] = np.where(seg == VACANT, 0, seg)
                state = replace(state, bits=bits)
    return state


def column_word(state: ArrayState, rows: Tuple[int, int], column: int) -> List[int]:
    """Bits of a word read top to bottom."""
    return [int(v) for v in state.bits[rows[0]:rows[1], state.pad + column][::-1]]


# ---------------------------------------------------------------- text formats

def to_text(state: ArrayState) -> str:
    """Grid text: header, Y-NW lines, a column marker line, rows top first."""
    lines = ["xdwm-grid 1", f"size {state.n_rows} {state.cols} pad {state.pad}"]
    for y in state.ywires:
        below = "".join(SYMBOL[v] for v in y.below) or "-"
        above = "".join(SYMBOL[v] for v in y.above) or "-"
        lines.append(f"ynw {y.column - state.pad} {y.rows[0]} {y.rows[1]} {below} {above}")
    marker = [" "] * state.width
    for y in state.ywires:
        marker[y.column] = "^"
    lines.append("".join(marker).rstrip() or "-")
    for r in range(state.n_rows - 1, -1, -1):
        lines.append("".join(SYMBOL[int(v)] for v in state.bits[r]))
    return "\n".join(lines) + "\n"


def from_text(text: str) -> ArrayState:
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if not lines or lines[0].split()[:2] != ["xdwm-grid", "1"]:
        raise ArrayError("not an xdwm-grid v1 file")
    f = lines[1].split()
    if len(f) != 5 or f[0] != "size" or f[3] != "pad":
        raise ArrayError("bad size line")
    n_rows, cols, pad = int(f[1]), int(f[2]), int(f[4])
    k = 2
    yw = []
    while k < len(lines) and lines[k].startswith("ynw "):
        g = lines[k].split()
        below = () if g[4] == "-" else tuple(VALUE[c] for c in g[4])
        above = () if g[5] == "-" else tuple(VALUE[c] for c in g[5])
        yw.append(YWire(pad + int(g[1]), (int(g[2]), int(g[3])), below, above))
        k += 1
    k += 1  # marker line
    rows = lines[k:k + n_rows]
    if len(rows) != n_rows:
        raise ArrayError("missing rows")
    bits = np.array([[VALUE[c] for c in r] for r in rows[::-1]], dtype=np.int8)
    if bits.shape != (n_rows, cols + 2 * pad):
        raise ArrayError("row length disagrees with size line")
    return ArrayState(bits, pad, tuple(yw))


def replay(state: ArrayState, script: str, ports: Optional[PortMap] = None
           ) -> Tuple[ArrayState, List[str]]:
    """Run a line-oriented command script; returns the state and read outputs.

    Commands::

        shift_x right|left [rows=0,1] [lossy] [fill=vacant|zero|extend]
        shift_y <y> up|down [lossy] [fill=...]
        write <row> <port> <bit>
        read <row> <port>
        lsw <row_lo> <row_hi> <column> <amount> [up|down]
    """
    out: List[str] = []
    for n, raw in enumerate(script.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        words = line.split()
        cmd, args = words[0], words[1:]
        opts = {a.split("=", 1)[0]: a.split("=", 1)[1] for a in args if "=" in a}
        flags = {a for a in args if "=" not in a}
        lossy = "lossy" in flags
        fill = opts.get("fill", "vacant")
        try:
            if cmd == "shift_x":
                rows = [int(r) for r in opts["rows"].split(",")] if "rows" in opts else None
                state = shift_x(state, args[0], rows, lossy=lossy, fill=fill)
            elif cmd == "shift_y":
                state = shift_y(state, int(args[0]), args[1], lossy=lossy, fill=fill)
            elif cmd in ("write", "read"):
                if ports is None:
                    raise ArrayError("script needs a port map")
                if cmd == "write":
                    state = write(state, int(args[0]), int(args[1]), int(args[2]), ports)
                else:
                    out.append(str(read(state, int(args[0]), int(args[1]), ports)))
            elif cmd == "lsw":
                d = args[4] if len(args) > 4 and args[4] in ("up", "down") else "down"
                state = logical_shift_word(state, (int(args[0]), int(args[1])), int(args[2]),
                                           int(args[3]), d, fill=opts.get("fill", "zero"),
                                           lossy=lossy)
            else:
                raise ArrayError(f"unknown command {cmd!r}")
        except (IndexError, ValueError, KeyError) as exc:
            raise ArrayError(f"line {n}: malformed command {raw!r}") from exc
    return state, out


# ---------------------------------------------------------------- two-wire demo prediction

def fig3_prediction(initial=((1, 0, 1, 1), (0, 1, 0, 0)), column: int = 2) -> List[np.ndarray]:
    """Bit matrices (top row first) before, after the X shift and after the Y shift.

    Both shifts move walls forward and keep the end domain at the entry
    side, which is what a current pulse does to a wire with no padding.
    """
    data = np.array(initial[::-1])
    s = make_state(data, ycols=(column,))
    seq = [s]
    s = shift_x(s, "right", lossy=True, fill="extend")
    seq.append(s)
    s = shift_y(s, 0, "up", lossy=True, fill="extend")
    seq.append(s)
    return [st.data()[::-1] for st in seq]
