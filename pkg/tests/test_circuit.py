import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import dense_potentials, random_network
from xdwm.circuit import (GROUND, ArraySpec, InvalidPlacement, NetworkError, ResistorNetwork,
                          SingularSystem, build_array_network, density_to_current, export_edges,
                          import_edges, leakage_analysis, power_balance, r_off_sweep,
                          scenario_network, solve, write_leakage_csv)


def test_series_pair():
    net = ResistorNetwork()
    net.add("a", "b", 100.0)
    net.add("b", GROUND, 300.0)
    net.voltage_sources.append(("a", 1.0))
    sol = solve(net)
    assert sol.branch_currents[0] == 1.0 / 400.0
    assert sol.v("b") == pytest.approx(0.75, rel=1e-15)


def test_balanced_wheatstone_bridge():
    net = ResistorNetwork()
    net.add("top", "l", 100.0)
    net.add("top", "r", 200.0)
    net.add("l", GROUND, 300.0)
    net.add("r", GROUND, 600.0)
    net.add("l", "r", 50.0)
    net.voltage_sources.append(("top", 5.0))
    sol = solve(net)
    assert abs(sol.branch_currents[4]) <= 1e-12 * sol.injected


@given(st.integers(0, 2**31 - 1), st.integers(2, 50))
@settings(max_examples=100)
def test_random_networks_matchdense_potentials(seed, n):
    net = random_network(np.random.default_rng(seed), n)
    sol = solve(net)
    ref = dense_potentials(net)
    scale = max(abs(v) for v in ref.values())
    for k, v in ref.items():
        assert sol.potentials[k] == pytest.approx(v, rel=1e-9, abs=1e-9 * scale)
    assert sol.residual <= 1e-12 * sol.injected
    dissipated, delivered = power_balance(net, sol)
    assert dissipated == pytest.approx(delivered, rel=1e-9)


def test_floating_subnetwork_is_singular():
    net = ResistorNetwork()
    net.add("a", GROUND, 10.0)
    net.add("b", "c", 10.0)
    net.current_sources.append(("a", 1e-3))
    with pytest.raises(SingularSystem):
        solve(net)


def test_validation():
    net = ResistorNetwork(R_on=1e3, R_off=10.0)
    net.add("a", GROUND, 1.0)
    with pytest.raises(NetworkError):
        solve(net)
    net = ResistorNetwork(R_on=0.0, R_off=0.0)
    net.add("a", GROUND, kind="access_device", state="off")
    with pytest.raises(NetworkError):
        solve(net)
    bad = ResistorNetwork()
    bad.add("a", GROUND, -5.0)
    with pytest.raises(NetworkError):
        solve(bad)


def test_density_to_current():
    assert density_to_current(1.1e12, 40e-9, 1e-9) == pytest.approx(44e-6, rel=1e-12)
    assert density_to_current(0.0, 40e-9, 1e-9) == 0.0
    assert density_to_current(5e11, 80e-9, 1e-9) == pytest.approx(2 * density_to_current(5e11, 40e-9, 1e-9))
    with pytest.raises(ValueError):
        density_to_current(1e12, 0.0, 1e-9)


def test_eight_wire_topology_has_eight_shared_nodes():
    net = build_array_network(ArraySpec(n_xnw=8, y_columns=(4,), ynw_extra=(0, 1)))
    shared = {b.a for b in net.branches} | {b.b for b in net.branches}
    xcells = sorted(n for n in shared if n.startswith("xc"))
    assert xcells == [f"xc{r}_0" for r in range(8)]
    y_domains = [b for b in net.branches if b.tag.startswith("y0.seg")]
    assert len(y_domains) == 8      # 7 between X-Cells plus one extra above
    x_links = [b for b in net.branches if b.tag.startswith("x") and "xc" in (b.a[:2], b.b[:2])]
    assert len(x_links) == 16 and all(b.kind == "xcell_link" for b in x_links)


def test_invalid_placement():
    with pytest.raises(InvalidPlacement):
        build_array_network(ArraySpec(n_xnw=0))
    with pytest.raises(InvalidPlacement):
        build_array_network(ArraySpec(y_columns=(9,)))
    with pytest.raises(InvalidPlacement):
        build_array_network(ArraySpec(y_columns=(2, 2)))
    with pytest.raises(InvalidPlacement):
        build_array_network(ArraySpec(), pattern=[[1, 0]])


def test_single_wire_has_no_leakage():
    spec = ArraySpec(n_xnw=1, high_row=0)
    rep = leakage_analysis("shift_one", build_array_network(spec), 1)
    # nothing joins two X-NWs; the Y-NW end still returns current to SLY ground
    assert rep.sneak_max == 0.0
    spec8, net8 = scenario_network("9cell")
    rep8 = leakage_analysis("shift_one", net8, 8, driven_row=1)
    assert rep8.sneak_max > 0


def _pct(name, scenario, **kw):
    spec, net = scenario_network(name, **kw)
    return leakage_analysis(scenario, net, spec.n_xnw, driven_row=spec.high_row).leakage_percent


@pytest.mark.parametrize("name", ["9cell", "32cell_1y", "32cell_7y"])
def test_bands_and_ordering(name):
    one, allp = _pct(name, "shift_one"), _pct(name, "shift_all")
    assert 1.5 <= one <= 3.5
    assert 0 <= allp < one


def test_more_y_wires_leak_more():
    assert _pct("32cell_7y", "shift_one") > _pct("32cell_1y", "shift_one")
    assert _pct("32cell_7y", "shift_one") <= 3.5


@pytest.mark.parametrize("factor", [1e-3, 0.5, 7.0, 1e4])
def test_percent_is_scale_invariant(factor):
    spec, net = scenario_network("9cell")
    a = leakage_analysis("shift_one", net, spec.n_xnw, driven_row=spec.high_row)
    b = leakage_analysis("shift_one", net.scaled(factor), spec.n_xnw, driven_row=spec.high_row)
    assert abs(a.leakage_percent - b.leakage_percent) <= 1e-12 * max(1.0, a.leakage_percent)


def test_r_off_monotone():
    values = [1e4, 3e4, 1e5, 3e5, 1e6, 1e7, 1e9]
    sweep = r_off_sweep(values)
    one = [s[1] for s in sweep]
    assert all(b <= a for a, b in zip(one, one[1:]))


def test_ungated_y_wire_still_leaks():
    spec, net = scenario_network("9cell", y_gating=False)
    rep = leakage_analysis("shift_one", net, spec.n_xnw, driven_row=spec.high_row)
    assert rep.max_leakage > 0
    assert rep.leakage_percent > _pct("9cell", "shift_one")


def test_report_current_and_voltage_drive():
    spec, net = scenario_network("9cell")
    rep = leakage_analysis("shift_one", net, spec.n_xnw, driven_row=spec.high_row)
    assert rep.injected_per_wire == 44e-6
    assert 0 <= rep.leakage_percent <= 100
    v = leakage_analysis("shift_one", net, spec.n_xnw, driven_row=spec.high_row, drive="voltage")
    assert 0 < v.leakage_percent < 100
    with pytest.raises(ValueError):
        leakage_analysis("shift_some", net, spec.n_xnw)


def test_edge_list_round_trip():
    _, net = scenario_network("9cell")
    back = import_edges(export_edges(net))
    assert (back.R_on, back.R_off) == (net.R_on, net.R_off)
    assert [(b.a, b.b, back.resistance(b), b.kind, b.state) for b in back.branches] == \
        [(b.a, b.b, net.resistance(b), b.kind, b.state) for b in net.branches]
    with pytest.raises(NetworkError):
        import_edges("a b 1.0\n")


def test_leakage_csv(tmp_path):
    spec, net = scenario_network("9cell")
    rep = leakage_analysis("shift_one", net, spec.n_xnw, driven_row=spec.high_row)
    p = tmp_path / "leak.csv"
    write_leakage_csv(p, [("9cell", rep)], rho=2e-7, header_lines=["config: {}"])
    lines = p.read_text().splitlines()
    assert lines[0] == "# config: {}"
    assert lines[1] == "# rho=2e-07 R_on=1000.0 R_off=100000.0 drive=current"
    assert lines[2] == "study,scenario,injected_A,max_leakage_A,leakage_percent,sneak_A"
    assert lines[3].startswith("9cell,shift_one,4.4e-05,")
