"""SVG figures rendered from the experiment CSV files.

Every plotter reads the CSV written by the CLI and writes an SVG next to
it. SVG metadata dates are dropped and the id salt is fixed so reruns are
byte-identical.
"""

from __future__ import annotations

import csv
import os
from typing import Dict, List

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

matplotlib.rcParams["svg.hashsalt"] = "xdwm"
matplotlib.rcParams["svg.fonttype"] = "none"


def read_csv(path) -> Dict[str, List[str]]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(ln for ln in fh if not ln.startswith("#")))
    head, body = rows[0], rows[1:]
    return {h: [r[i] for r in body] for i, h in enumerate(head)}


def _floats(col) -> np.ndarray:
    return np.array([float(v) for v in col])


def _save(fig, csv_path, suffix="") -> str:
    out = os.path.splitext(csv_path)[0] + suffix + ".svg"
    fig.tight_layout()
    fig.savefig(out, format="svg", metadata={"Date": None})
    plt.close(fig)
    return out


def plot_velocity(path) -> str:
    d = read_csv(path)
    j = _floats(d["J"])
    fig, ax = plt.subplots(figsize=(4.5, 3.2))
    ax.plot(j, _floats(d["v_analytic"]), "k--", label="analytic")
    ax.plot(j, _floats(d["v_sim"]), "o", label="simulated")
    ax.set_xlabel("J (A/m$^2$)")
    ax.set_ylabel("DW velocity (m/s)")
    ax.legend(frameon=False)
    return _save(fig, path)


def plot_trace(path) -> str:
    d = read_csv(path)
    fig, ax = plt.subplots(figsize=(4.5, 3.2))
    for j in sorted(set(d["J"]), key=float):
        sel = [i for i, v in enumerate(d["J"]) if v == j]
        t = _floats([d["t"][i] for i in sel]) * 1e9
        x = _floats([d["x"][i] for i in sel]) * 1e9
        ax.plot(t, x, label=f"J={float(j):.2e}")
    ax.set_xlabel("t (ns)")
    ax.set_ylabel("wall position (nm)")
    ax.legend(frameon=False, fontsize=7)
    return _save(fig, path)


LABEL_Y = {"backward": -1, "stuck": 0, "partial": 1, "shifted": 2, "overshot": 3, "lost": 3}


def plot_shift_window(path) -> str:
    d = read_csv(path)
    fig, ax = plt.subplots(figsize=(4.5, 3.2))
    for g in sorted(set(d["geometry"])):
        sel = [i for i, v in enumerate(d["geometry"]) if v == g]
        j = _floats([d["J"][i] for i in sel])
        disp = _floats([d["displacement"][i] for i in sel]) * 1e9
        ax.plot(j, disp, "o-", label=g)
    pitch = _floats(d["pitch"])[0] * 1e9 if d["pitch"] else 80.0
    ax.axhspan(0.75 * pitch, 1.25 * pitch, color="0.9", zorder=0)
    ax.set_xlabel("J (A/m$^2$)")
    ax.set_ylabel("final displacement (nm)")
    ax.legend(frameon=False)
    return _save(fig, path)


def plot_stability(path) -> str:
    d = read_csv(path)
    w = _floats(d["width"]) * 1e9
    l = _floats(d["length"]) * 1e9
    s = np.array([v == "1" for v in d["stable"]])
    ws, ls = np.unique(w), np.unique(l)
    grid = np.zeros((len(ws), len(ls)))
    for wi, li, si in zip(w, l, s):
        grid[np.searchsorted(ws, wi), np.searchsorted(ls, li)] = si
    fig, ax = plt.subplots(figsize=(4.5, 3.2))
    ax.pcolormesh(ls, ws, grid, shading="nearest", cmap="Greys_r", vmin=0, vmax=1)
    ax.set_xlabel("X-Cell length (nm)")
    ax.set_ylabel("X-Cell width (nm)")
    ax.set_title("white: stable single domain", fontsize=8)
    return _save(fig, path)


def plot_fig3_trace(path) -> str:
    d = read_csv(path)
    t = _floats(d["t"]) * 1e9
    fig, ax = plt.subplots(figsize=(4.5, 3.2))
    for k in d:
        if k.startswith("mz_"):
            ax.plot(t, _floats(d[k]), label=k[3:])
    ax.set_xlabel("t (ns)")
    ax.set_ylabel("X-Cell $\\langle m_z \\rangle$")
    ax.set_ylim(-1.1, 1.1)
    ax.legend(frameon=False)
    return _save(fig, path)


def plot_leakage(path) -> str:
    d = read_csv(path)
    labels = [f"{a}\n{b}" for a, b in zip(d["study"], d["scenario"])]
    fig, ax = plt.subplots(figsize=(5.0, 3.2))
    ax.bar(range(len(labels)), _floats(d["leakage_percent"]), color="0.5")
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, fontsize=6)
    ax.set_ylabel("Y-NW leakage (%)")
    return _save(fig, path)


def plot_profile(path) -> str:
    d = read_csv(path)
    fig, ax = plt.subplots(figsize=(4.5, 3.2))
    for wname in sorted(set(d["wire"])):
        sel = [i for i, v in enumerate(d["wire"]) if v == wname]
        ax.plot(_floats([d["s"][i] for i in sel]) * 1e9, _floats([d["mz"][i] for i in sel]),
                label=wname)
    ax.set_xlabel("position along wire (nm)")
    ax.set_ylabel("$\\langle m_z \\rangle$")
    ax.legend(frameon=False, fontsize=7)
    return _save(fig, path)
