"""Acceptance criteria 1-10.

Each test carries a ``criterion`` marker; the terminal summary prints one
PASS/FAIL line per criterion. The micromagnetic criteria (1, 4, 5, 6) take
minutes to tens of minutes on one core.
"""

from collections import deque

import numpy as np
import pytest

from oracles import ListArray, dense_potentials, energy_gradient_field, random_network
from xdwm.amr import (ResistanceModel, pattern_domain_resistances, solve_resistance,
                      wire_resistance)
from xdwm.array_model import Overflow, fig3_prediction, make_state, shift_x, shift_y
from xdwm.circuit import (density_to_current, leakage_analysis, power_balance, scenario_network,
                          solve)
from xdwm.current import uniform_current
from xdwm.demag import Demag, direct_demag
from xdwm.experiments import (analytic_dw_velocity, cross_stability, find_shift_window,
                              measure_velocity, pattern_state, seed_wall, stability_map,
                              xdwm_shift_demo)
from xdwm.field import (anisotropy_energy, anisotropy_field, exchange_energy, exchange_field,
                        norm_error, normalize, uniform)
from xdwm.geometry import GeometrySpec, box_mesh, build_mesh
from xdwm.llg import LLGSolver, SimState
from xdwm.material import MaterialParams

P = MaterialParams()


def _random_m(mesh, rng):
    return normalize(rng.standard_normal((3,) + mesh.shape) * mesh.occupancy, mesh)


def crit(n, title):
    return pytest.mark.criterion(n, title)


def detail(request, text):
    request.node.user_properties.append(("detail", text))
    print(f"criterion {n_of(request)}: {text}")


def n_of(request):
    return request.node.get_closest_marker("criterion").args[0]


# ---------------------------------------------------------------- 1

@crit(1, "velocity reproduction")
def test_c1_analytic_velocity(request):
    va = analytic_dw_velocity(1.1e12)
    detail(request, f"v_analytic={va:.2f} m/s")
    # the stated value is approximate: it must round to 153..155 m/s
    assert 153 <= round(va) <= 155


@pytest.mark.slow
@crit(1, "velocity reproduction")
def test_c1_simulated_velocity(request):
    va = analytic_dw_velocity(1.1e12)
    v, trace = measure_velocity(1.1e12, 1e-9, spec=GeometrySpec(kind="plain_wire", n_domains=8))
    rel = (v - va) / va
    detail(request, f"v_sim={v:.2f} m/s rel_err={rel:+.3f}")
    assert abs(rel) <= 0.10


# ---------------------------------------------------------------- 2

@crit(2, "field-term correctness")
def test_c2a_exchange_anisotropy_gradients(request, rng):
    mesh = build_mesh(GeometrySpec(kind="notched_wire", n_domains=2, domain_length=20e-9,
                                   wire_width=12e-9, notch_depth=2e-9, notch_width=4e-9))
    m = _random_m(mesh, rng)
    fields = [(exchange_field(m, P, mesh), lambda q: exchange_energy(q, P, mesh)),
              (anisotropy_field(m, P, mesh), lambda q: anisotropy_energy(q, P, mesh))]
    cells = np.argwhere(mesh.occupancy)
    worst = 0.0
    for _ in range(50):
        c = tuple(cells[rng.integers(len(cells))])
        comp = int(rng.integers(3))
        for h, en in fields:
            ref = h[(comp,) + c]
            num = energy_gradient_field(en, m, mesh, c, comp)
            worst = max(worst, abs(num - ref) / max(abs(ref), 1e-3 * np.abs(h).max()))
    detail(request, f"gradient rel_err={worst:.1e}")
    assert worst <= 1e-5


@crit(2, "field-term correctness")
def test_c2b_cube_factor(request):
    mesh = box_mesh(16, 16, 16, cell=(1e-9, 1e-9, 1e-9))
    N = -Demag(mesh).field(uniform(mesh), P.Ms)[2].mean() / P.Ms
    detail(request, f"cube N_zz={N:.5f}")
    assert abs(N - 1 / 3) <= 0.02 / 3


@crit(2, "field-term correctness")
def test_c2c_fft_vs_direct(request, rng):
    mesh = box_mesh(8, 8, 1)
    m = _random_m(mesh, rng)
    a = Demag(mesh).field(m, P.Ms)
    b = direct_demag(m, P.Ms, mesh)
    err = np.abs(a - b).max() / np.abs(b).max()
    detail(request, f"fft/direct rel={err:.1e}")
    assert err <= 1e-9


# ---------------------------------------------------------------- 3

@crit(3, "normalization and equilibrium")
def test_c3_norm_over_1ns(request):
    mesh = build_mesh(GeometrySpec(kind="plain_wire", n_domains=4))
    solver = LLGSolver(mesh, P)
    st = seed_wall(solver, "x0", 1, strict=False, max_steps=300)
    solver.set_current(uniform_current(mesh, ["x0"], 5e11))
    errs = []
    solver.run(SimState(0.0, st.m), 1e-9, sample_every=5e-12,
               on_sample=lambda s: errs.append(norm_error(s.m, mesh)))
    detail(request, f"max norm err={max(errs):.1e} over {len(errs)} samples")
    assert max(errs) <= 1e-6


@crit(3, "normalization and equilibrium")
def test_c3_uniform_drift(request):
    mesh = build_mesh(GeometrySpec(kind="plain_wire", n_domains=4))
    m0 = uniform(mesh)
    st = LLGSolver(mesh, P).run(SimState(0.0, m0.copy()), 1e-9)
    drift = float(np.abs(st.m - m0).max())
    detail(request, f"uniform drift={drift:.1e}")
    assert drift <= 1e-8


# ---------------------------------------------------------------- 4

@pytest.mark.slow
@crit(4, "X-Cell stability point")
def test_c4_chosen_point(request):
    a = cross_stability(80e-9, 40e-9, seed=3)
    b = cross_stability(80e-9, 40e-9, seed=3)
    detail(request, f"80x40 min|mz|={a.min_mz:.4f}")
    assert a.stable and a.min_mz > 0.9
    assert a == b


@pytest.mark.slow
@crit(4, "X-Cell stability point")
def test_c4_full_map_contains_point(request):
    pts = stability_map((40e-9, 110e-9), (50e-9, 300e-9), 10e-9, seed=3)
    assert len(pts) == 8 * 26
    hit = [q for q in pts if abs(q.length - 80e-9) < 1e-12 and abs(q.width - 40e-9) < 1e-12]
    n_stable = sum(q.stable for q in pts)
    detail(request, f"{n_stable}/{len(pts)} stable")
    assert len(hit) == 1 and hit[0].stable


# ---------------------------------------------------------------- 5

# fixed pulse length at every density, the one v_analytic(1.1e12) needs for 1.5 pitch
J_GRID = [8e11, 1.1e12, 1.4e12, 1.7e12, 2.0e12, 2.3e12]


@pytest.mark.slow
@crit(5, "shift window properties")
def test_c5_xcell_raises_average_density(request):
    plain = find_shift_window(GeometrySpec(kind="notched_wire", n_domains=8), J_GRID,
                              boundary_index=4)
    xcell = find_shift_window(GeometrySpec(kind="cross_overlay", n_domains=8, ynw_columns=(4,),
                                           ynw_extra=(0, 0)), J_GRID, boundary_index=4)
    pct = 100 * (xcell.j_avg / plain.j_avg - 1)
    labels = lambda w: ",".join(p.label for p in w.points)
    detail(request, f"plain [{labels(plain)}] x-cell [{labels(xcell)}] j_avg +{pct:.1f}%")
    assert plain.j_low <= plain.j_high
    assert xcell.j_avg > plain.j_avg
    assert plain.monotone and xcell.monotone


# ---------------------------------------------------------------- 6

@pytest.fixture(scope="module")
def demo():
    return xdwm_shift_demo()


@pytest.mark.slow
@crit(6, "two-wire X then Y shift demo")
def test_c6_shift_demo(request, demo):
    sim = [m.tolist() for m in demo.matrices]
    model = [m.tolist() for m in fig3_prediction()]
    top = max(demo.xcell_mz, key=lambda n: int(n[len("xcell"):].split("_")[0]))
    mz = demo.xcell_mz[top]
    t = demo.times
    t_x = t[np.argmin(mz)]
    signs = [np.sign(mz[0]), np.sign(mz.min()), np.sign(mz[-1])]
    detail(request, f"matrices {sim}; top X-Cell mz {mz[0]:+.2f}->{mz.min():+.2f}->{mz[-1]:+.2f}")
    assert sim == model
    assert signs == [1, -1, 1] and 0 < t_x < t[-1]


@pytest.mark.slow
def test_demo_xcells_single_domain_after_pulses(demo):
    # in-plane X-Cell components decay below 0.1 once each pulse has rung down
    assert max(demo.transverse_max[1:]) < 0.1


# ---------------------------------------------------------------- 7

@crit(7, "circuit solver oracle")
def test_c7_random_networks(request):
    rng = np.random.default_rng(2024)
    worst = [0.0, 0.0, 0.0]
    for _ in range(100):
        net = random_network(rng, int(rng.integers(2, 51)))
        sol = solve(net)
        ref = dense_potentials(net)
        scale = max(abs(v) for v in ref.values())
        worst[0] = max(worst[0], max(abs(sol.potentials[k] - v) / scale for k, v in ref.items()))
        worst[1] = max(worst[1], sol.residual / sol.injected)
        d, p = power_balance(net, sol)
        worst[2] = max(worst[2], abs(d - p) / abs(p))
    detail(request, "oracle {:.1e} kcl {:.1e} energy {:.1e}".format(*worst))
    assert worst[0] <= 1e-9 and worst[1] <= 1e-12 and worst[2] <= 1e-9


# ---------------------------------------------------------------- 8

@crit(8, "leakage bands")
def test_c8_leakage(request):
    out = {}
    for name in ("9cell", "32cell_1y", "32cell_7y"):
        spec, net = scenario_network(name)
        for sc in ("shift_one", "shift_all"):
            rep = leakage_analysis(sc, net, spec.n_xnw, driven_row=spec.high_row)
            out[name, sc] = rep.leakage_percent
    detail(request, " ".join(f"{a}/{b}={v:.2f}%" for (a, b), v in out.items()))
    assert 1.5 <= out["9cell", "shift_one"] <= 3.5
    assert out["9cell", "shift_all"] < out["9cell", "shift_one"]
    assert all(out[n, s] <= 3.5 for n in ("32cell_1y", "32cell_7y")
               for s in ("shift_one", "shift_all"))
    assert density_to_current(1.1e12, 40e-9, 1e-9) == pytest.approx(44e-6, rel=1e-15, abs=0)


# ---------------------------------------------------------------- 9

@crit(9, "resistance model")
def test_c9_series_parallel_and_pattern(request, rng):
    cell = (2e-9, 2e-9, 1e-9)
    model = ResistanceModel()
    worst = 0.0
    for shape in [(1, 20, 320), (1, 7, 13), (2, 4, 9)]:
        occ = np.ones(shape, bool)
        m = rng.standard_normal((3,) + shape)
        m /= np.linalg.norm(m, axis=0)
        a = wire_resistance(m, occ, cell, model)
        b = solve_resistance(m, occ, cell, model, transverse=False)
        worst = max(worst, abs(a - b) / a)
    mesh = build_mesh(GeometrySpec(kind="plain_wire", n_domains=8))
    doms = mesh.wires["x0"].domains
    region = mesh.wires["x0"].band
    R = {}
    for name, bits in (("alt", [1, 0] * 4), ("uni", [1] * 8)):
        m = pattern_state(mesh, dict(zip(doms, bits)))
        R[name] = solve_resistance(m, region, cell, model)
        # width-uniform patterns: full nodal solve equals the series-parallel sum
        worst = max(worst, abs(R[name] - wire_resistance(m, region, cell, model)) / R[name])
    lumped = (pattern_domain_resistances([1, 0] * 4).sum(), pattern_domain_resistances([1] * 8).sum())
    detail(request, f"sp/nodal rel={worst:.1e} R_alt-R_uni={R['alt'] - R['uni']:.4f} ohm")
    assert worst <= 1e-9
    assert R["alt"] > R["uni"] and lumped[0] > lumped[1]


# ---------------------------------------------------------------- 10

@crit(10, "behavioral model properties")
def test_c10_random_sequences(request):
    rng = np.random.default_rng(10)
    n_ops = 0
    for _ in range(10_000):
        rows, cols, pad = int(rng.integers(1, 7)), int(rng.integers(1, 10)), int(rng.integers(0, 3))
        k = int(rng.integers(0, min(2, cols) + 1))
        ycols = sorted(rng.choice(cols, k, replace=False).tolist())
        extra = (int(rng.integers(0, 2)), int(rng.integers(0, 2)))
        s = make_state(rng.integers(0, 2, (rows, cols)), pad=pad, ycols=ycols, extra=extra)
        o = ListArray(s.bits.tolist(), [y.column for y in s.ywires],
                      [y.below for y in s.ywires], [y.above for y in s.ywires])
        before = sorted(o.bits())
        for _ in range(int(rng.integers(1, 9))):
            step = int(rng.choice([-1, 1]))
            if s.ywires and rng.random() < 0.4:
                w = int(rng.integers(0, len(s.ywires)))
                ok = o.shift_y(w, step)
                try:
                    s = shift_y(s, w, step)
                    assert ok
                except Overflow:
                    assert not ok
            else:
                sel = sorted(set(rng.integers(0, rows, int(rng.integers(1, rows + 1))).tolist()))
                ok = o.shift_x(step, sel)
                try:
                    s = shift_x(s, step, sel)
                    assert ok
                except Overflow:
                    assert not ok
            n_ops += 1
            assert s.bits.tolist() == o.rows
            assert [list(y.below) for y in s.ywires] == o.below
            assert [list(y.above) for y in s.ywires] == o.above
            assert sorted(s.non_vacant()) == before
    # plain rotation without Y-NWs
    data = rng.integers(0, 2, (8, 16))
    s = make_state(data, pad=5)
    for _ in range(5):
        s = shift_x(s, "left")
    for r, row in zip(s.bits.tolist(), data):
        d = deque([-1] * 5 + list(row) + [-1] * 5)
        d.rotate(-5)
        assert r == list(d)
    detail(request, f"10000 sequences, {n_ops} shifts")
