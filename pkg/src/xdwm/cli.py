"""Command-line front end: ``xdwm --config run.toml --out DIR``.

Exit codes: 0 ok, 2 config error, 3 experiment error, 4 golden mismatch.
Every CSV starts with a timestamp line and the resolved config; an SVG
rendered from each table is written next to it.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import json
import logging
import os
import sys
import traceback
from dataclasses import replace
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from . import array_model as am
from . import plots
from .circuit import leakage_analysis, scenario_network, write_leakage_csv
from .config import ConfigInvalid, RunConfig, load
from .experiments import (analytic_dw_velocity, measure_velocity, pattern_state,
                          shift_points, stability_map, window_from_points, wire_profile,
                          xdwm_shift_demo, NoWindow)
from .geometry import build_mesh, fig3_spec
from .golden import GoldenMismatch, compare_golden
from .io import write_frames
from .llg import LLGSolver, NotConverged, SimState

log = logging.getLogger("xdwm")

EXIT_OK, EXIT_CONFIG, EXIT_EXPERIMENT, EXIT_GOLDEN = 0, 2, 3, 4


class ExperimentFailed(RuntimeError):
    pass


class Output:
    """Single collector for every artifact of a run."""

    def __init__(self, out_dir: str, cfg: RunConfig, timestamp: Optional[str] = None):
        self.dir = out_dir
        self.cfg = cfg
        self.files: List[str] = []
        os.makedirs(out_dir, exist_ok=True)
        self.stamp = timestamp or _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")

    def path(self, name: str) -> str:
        return os.path.join(self.dir, name)

    def header(self) -> List[str]:
        return [f"generated: {self.stamp}"] + self.cfg.header_lines()

    def table(self, name: str, columns: Sequence[str], rows, plot: Optional[Callable] = None) -> str:
        p = self.path(name)
        with open(p, "w", newline="") as fh:
            for line in self.header():
                fh.write(f"# {line}\n")
            w = csv.writer(fh)
            w.writerow(columns)
            for r in rows:
                w.writerow([_fmt(v) for v in r])
        self.files.append(p)
        if plot is not None:
            self.files.append(plot(p))
        return p

    def text(self, name: str, body: str) -> str:
        p = self.path(name)
        with open(p, "w") as fh:
            fh.write(body)
        self.files.append(p)
        return p


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


# ---------------------------------------------------------------- experiments

def run_relax(cfg: RunConfig, out: Output):
    mesh = build_mesh(cfg.geometry)
    solver = LLGSolver(mesh, cfg.material, cfg.solver)
    pattern = cfg.params.get("pattern") or {}
    st = SimState(0.0, pattern_state(mesh, {k: int(v) for k, v in pattern.items()}))
    converged = True
    try:
        st = solver.relax(st, max_steps=cfg.params["max_steps"])
    except NotConverged as exc:
        st, converged = exc.state, False
    rows = []
    for name, w in sorted(mesh.wires.items()):
        s, mz = wire_profile(st.m, mesh, w)
        rows += [(name, a, b) for a, b in zip(s, mz)]
    out.table("relax_profile.csv", ["wire", "s", "mz"], rows, plots.plot_profile)
    regs = [(n, float(st.m[2][r].mean()), float(np.abs(st.m[2][r]).min()))
            for n, r in sorted(mesh.regions.items())]
    out.table("relax_regions.csv", ["region", "mean_mz", "min_abs_mz"], regs)
    out.table("relax_summary.csv", ["converged", "max_torque", "steps"],
              [(converged, solver.max_torque(st.m), st.steps)])
    write_frames(out.path("relax_final.xdwmf"), [(st.time, st.m)], mesh.cell)
    out.files.append(out.path("relax_final.xdwmf"))


def run_velocity(cfg: RunConfig, out: Output):
    p = cfg.params
    rows, trace = [], []
    for j in p["j"]:
        v, tr = measure_velocity(j, p["duration"], spec=cfg.geometry, params=cfg.material,
                                 config=cfg.solver, samples=p["samples"], discard=p["discard"])
        va = analytic_dw_velocity(j, cfg.material)
        rows.append((j, v, va, (v - va) / va if va else float("nan")))
        trace += [(j, t, x) for t, x in zip(tr.times, tr.positions)]
    out.table("velocity.csv", ["J", "v_sim", "v_analytic", "rel_err"], rows, plots.plot_velocity)
    out.table("velocity_trace.csv", ["J", "t", "x"], trace, plots.plot_trace)


def run_shift_window(cfg: RunConfig, out: Output):
    p = cfg.params
    specs = [("config", cfg.geometry)]
    if p["compare_plain"]:
        specs.append(("plain", cfg.geometry.with_(kind="notched_wire", ynw_columns=(), n_xnw=1)))
    rows, summary = [], []
    for label, spec in specs:
        bidx = p["boundary_index"]
        if bidx is None and label == "plain" and cfg.geometry.ynw_columns:
            bidx = cfg.geometry.ynw_columns[0]
        pts = shift_points(spec, p["j"], params=cfg.material, config=cfg.solver,
                           boundary_index=bidx, pre=p["pre"], settle=p["settle"],
                           pulse_factor=p["pulse_factor"], pulse_j=p["pulse_j"],
                           relax_steps=p["relax_steps"],
                           workers=cfg.workers)
        rows += [(label, q.j, q.label, q.displacement, q.pulse, spec.domain_length) for q in pts]
        try:
            w = window_from_points(pts)
            summary.append((label, w.j_low, w.j_high, w.j_avg, w.resolution, w.monotone))
        except NoWindow:
            summary.append((label, "", "", "", "", ""))
    out.table("shift_points.csv", ["geometry", "J", "label", "displacement", "pulse", "pitch"],
              rows, plots.plot_shift_window)
    out.table("shift_window.csv", ["geometry", "j_low", "j_high", "j_avg", "resolution",
                                   "monotone"], summary)
    if all(s[1] == "" for s in summary):
        raise ExperimentFailed("no density on the grid shifts the wall by one pitch")


def run_stability(cfg: RunConfig, out: Output):
    p = cfg.params
    pts = stability_map(tuple(p["width_range"]), tuple(p["length_range"]), p["step"],
                        workers=cfg.workers, params=cfg.material, config=cfg.solver,
                        threshold=p["threshold"], seed=cfg.seed, max_steps=p["max_steps"])
    out.table("stability_map.csv", ["width", "length", "stable", "min_abs_mz", "converged"],
              [(q.width, q.length, q.stable, q.min_mz, q.converged) for q in pts],
              plots.plot_stability)


def run_fig3(cfg: RunConfig, out: Output):
    p = cfg.params
    initial = tuple(tuple(int(c) for c in r) for r in p["initial"])
    kw = {}
    if cfg.geometry is not None:
        kw["spec"] = cfg.geometry
    demo = xdwm_shift_demo(j=p["j"], params=cfg.material, config=cfg.solver, initial=initial,
                           pulse_factor=p["pulse_factor"], pulse_j=p["pulse_j"],
                           settle=p["settle"],
                           sample_every=p["sample_every"], **kw)
    spec = kw.get("spec") or fig3_spec()
    col = spec.ynw_columns[0]
    model = am.fig3_prediction(initial, col)
    rows, ok = [], True
    for phase, mat, pred in zip(demo.phases, demo.matrices, model):
        for r, (a, b) in enumerate(zip(mat, pred)):
            sa, sb = "".join(map(str, a)), "".join(map(str, b))
            ok &= sa == sb
            rows.append((phase, r, sa, sb, sa == sb))
    out.table("fig3_bits.csv", ["phase", "row_from_top", "simulated", "model", "match"], rows)
    names = sorted(demo.xcell_mz)
    trace = [(t, *[demo.xcell_mz[n][i] for n in names]) for i, t in enumerate(demo.times)]
    out.table("fig3_trace.csv", ["t"] + [f"mz_{n}" for n in names], trace, plots.plot_fig3_trace)
    out.table("fig3_transverse.csv", ["phase", "max_transverse"],
              list(zip(demo.phases, demo.transverse_max)))
    if not ok:
        raise ExperimentFailed("simulated bit matrices differ from the behavioral model")


def run_leakage(cfg: RunConfig, out: Output):
    p = cfg.params
    r_offs = p["R_off"] or [None]
    reports = []
    for name in p["scenarios"]:
        for r_off in r_offs:
            spec, net = scenario_network(name, R_off=r_off)
            tag = name if r_off is None else f"{name}@{r_off:g}"
            for sc in ("shift_one", "shift_all"):
                rep = leakage_analysis(sc, net, spec.n_xnw, current=p["current"],
                                       driven_row=spec.high_row, drive=p["drive"])
                reports.append((tag, rep))
    path = out.path("leakage.csv")
    write_leakage_csv(path, reports, rho=cfg.material.rho, header_lines=out.header())
    out.files += [path, plots.plot_leakage(path)]


def _resolve(base: str, ref: str) -> str:
    return ref if os.path.isabs(ref) else os.path.join(base, ref)


def run_array_replay(cfg: RunConfig, out: Output, base_dir: str = "."):
    p = cfg.params
    with open(_resolve(base_dir, p["grid"])) as fh:
        state = am.from_text(fh.read())
    with open(_resolve(base_dir, p["script"])) as fh:
        script = fh.read()
    ports = am.PortMap.uniform(state, p["ports"]) if p["ports"] else None
    final, reads = am.replay(state, script, ports)
    out.text("array_final.txt", am.to_text(final))
    out.table("array_reads.csv", ["index", "bit"], list(enumerate(reads)))
    grid = [(r, "".join(am.SYMBOL[int(v)] for v in final.bits[r]))
            for r in range(final.n_rows - 1, -1, -1)]
    out.table("array_grid.csv", ["row", "bits"], grid)


RUNNERS: Dict[str, Callable] = {
    "relax": run_relax,
    "velocity": run_velocity,
    "shift-window": run_shift_window,
    "stability-map": run_stability,
    "fig3-demo": run_fig3,
    "leakage": run_leakage,
    "array-replay": run_array_replay,
}


def run(cfg: RunConfig, out_dir: str, *, base_dir: str = ".", timestamp: Optional[str] = None
        ) -> Output:
    out = Output(out_dir, cfg, timestamp)
    fn = RUNNERS[cfg.experiment]
    if cfg.experiment == "array-replay":
        fn(cfg, out, base_dir)
    else:
        fn(cfg, out)
    return out


def _error_record(out_dir: str, kind: str, exc: BaseException, extra: Optional[dict] = None):
    os.makedirs(out_dir, exist_ok=True)
    rec = {"error": kind, "type": type(exc).__name__, "message": str(exc)}
    rec.update(extra or {})
    with open(os.path.join(out_dir, "error.json"), "w") as fh:
        json.dump(rec, fh, indent=2, sort_keys=True)


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = argparse.ArgumentParser(prog="xdwm", description="XDWM micromagnetic and circuit runs")
    ap.add_argument("--config", required=True, help="TOML run configuration")
    ap.add_argument("--out", default="out", help="output directory")
    ap.add_argument("--serial", action="store_true", help="run sweep points in-process")
    ap.add_argument("--workers", type=int, default=None, help="worker processes for sweeps")
    ap.add_argument("--seed", type=int, default=None, help="seed for randomized inputs")
    ap.add_argument("--golden", default=None, help="compare CSV outputs with this directory")
    ap.add_argument("-v", "--verbose", action="store_true")
    a = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = load(a.config)
        if a.seed is not None:
            cfg = replace(cfg, seed=a.seed)
        if a.workers is not None:
            if a.workers < 1:
                raise ConfigInvalid(["--workers: must be a positive integer"])
            cfg = replace(cfg, workers=a.workers)
        if a.serial:
            cfg = replace(cfg, workers=1)
    except ConfigInvalid as exc:
        _error_record(a.out, "config", exc, {"fields": exc.errors})
        for e in exc.errors:
            print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        _error_record(a.out, "config", exc)
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        out = run(cfg, a.out, base_dir=os.path.dirname(os.path.abspath(a.config)))
    except Exception as exc:  # any failure inside an experiment maps to one exit code
        _error_record(a.out, "experiment", exc, {"traceback": traceback.format_exc()})
        print(f"experiment failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_EXPERIMENT
    for f in out.files:
        log.info("wrote %s", f)
    if a.golden:
        try:
            rep = compare_golden(a.out, a.golden)
        except GoldenMismatch as exc:
            _error_record(a.out, "golden", exc, {"problems": exc.problems})
            print(str(exc), file=sys.stderr)
            return EXIT_GOLDEN
        except FileNotFoundError as exc:
            _error_record(a.out, "golden", exc)
            print(f"golden error: {exc}", file=sys.stderr)
            return EXIT_GOLDEN
        log.info("golden check passed: %d files, %d cells", len(rep.files), rep.cells)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
