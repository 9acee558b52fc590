import numpy as np
import pytest
from hypothesis import given, strategies as st

from xdwm.amr import (DisconnectedTerminals, NonRectangularRegion, ResistanceModel,
                      link_resistance, mesh_wire_resistance,
                      pattern_domain_resistances, solve_resistance, wire_resistance,
                      write_resistance_csv)
from xdwm.field import uniform
from xdwm.geometry import GeometrySpec, build_mesh, cross
from xdwm.material import MaterialParams

CELL = (2e-9, 2e-9, 1e-9)
LITERAL = ResistanceModel(sign=+1)
DEFAULT = ResistanceModel()
Z = (0, 0, 1)


def test_link_resistance_literal_form():
    assert link_resistance(Z, Z, CELL, LITERAL) == pytest.approx(202.8, rel=1e-12)
    assert link_resistance(Z, (1, 0, 0), CELL, LITERAL) == pytest.approx(200.0, rel=1e-12)
    assert link_resistance(Z, (0, 0, -1), CELL, LITERAL) / 200.0 == pytest.approx(0.986, rel=1e-12)
    assert link_resistance(Z, Z, (2e-9, 4e-9, 1e-9), LITERAL, axis="y") == pytest.approx(
        2e-7 * 4e-9 / (2e-9 * 1e-9) * 1.014)


def test_default_sign_makes_walls_resistive():
    assert link_resistance(Z, (0, 0, -1), CELL) > link_resistance(Z, Z, CELL)


def test_model_from_params():
    assert ResistanceModel.from_params(MaterialParams()) == DEFAULT
    with pytest.raises(ValueError):
        ResistanceModel(sign=0)


@pytest.mark.parametrize("model", [LITERAL, DEFAULT])
def test_uniform_wire_closed_form(model):
    mesh = build_mesh(GeometrySpec(kind="plain_wire", n_domains=8))
    r_link = link_resistance(Z, Z, CELL, model)
    R = wire_resistance(uniform(mesh), mesh.occupancy, CELL, model)
    assert R == pytest.approx(320 * r_link / 20, rel=1e-12)
    if model is LITERAL:
        assert R == pytest.approx(3244.8, rel=1e-12)


def test_single_cell():
    m = np.zeros((3, 1, 1, 1))
    m[2] = 1
    occ = np.ones((1, 1, 1), bool)
    assert wire_resistance(m, occ, CELL, LITERAL) == pytest.approx(202.8)


def _random_m(shape, rng):
    m = rng.standard_normal((3,) + shape)
    return m / np.linalg.norm(m, axis=0)


@pytest.mark.parametrize("shape", [(1, 20, 64), (1, 5, 7), (2, 3, 9)])
@pytest.mark.parametrize("model", [LITERAL, DEFAULT])
def test_series_parallel_equals_nodal(shape, model, rng):
    m = _random_m(shape, rng)
    occ = np.ones(shape, bool)
    a = wire_resistance(m, occ, CELL, model)
    b = solve_resistance(m, occ, CELL, model, transverse=False)
    assert b == pytest.approx(a, rel=1e-9)
    # with uniform m the transverse links carry no current
    u = np.zeros((3,) + shape)
    u[2] = 1
    assert solve_resistance(u, occ, CELL, model) == pytest.approx(
        wire_resistance(u, occ, CELL, model), rel=1e-9)


def test_alternating_beats_uniform():
    alt = pattern_domain_resistances([1, 0] * 4).sum()
    uni = pattern_domain_resistances([1] * 8).sum()
    assert alt > uni


def test_two_parallel_wires_halve_resistance():
    m = np.zeros((3, 1, 9, 12))
    m[2] = 1
    one = np.zeros((1, 9, 12), bool)
    one[:, 0:3, :] = True
    two = one.copy()
    two[:, 6:9, :] = True
    faces = [np.zeros_like(two), np.zeros_like(two)]
    faces[0][:, :, 0] = True
    faces[1][:, :, -1] = True
    r1 = solve_resistance(m, one, CELL, DEFAULT, terminals=faces)
    r2 = solve_resistance(m, two, CELL, DEFAULT, terminals=faces)
    assert r2 == pytest.approx(r1 / 2, rel=1e-9)


def test_cross_fins_lower_resistance():
    mesh = build_mesh(cross(80e-9, 120e-9))
    m = uniform(mesh)
    x = mesh.wires["x0"]
    fins = solve_resistance(m, mesh.occupancy, CELL, DEFAULT, terminals=(x.faces["left"],
                                                                         x.faces["right"]))
    bare = solve_resistance(m, x.band, CELL, DEFAULT, terminals=(x.faces["left"],
                                                                 x.faces["right"]))
    assert fins < bare
    with pytest.raises(NonRectangularRegion):
        wire_resistance(m, mesh.occupancy, CELL, DEFAULT)
    assert mesh_wire_resistance(m, mesh, "x0") == pytest.approx(bare, rel=1e-9)


def test_disconnected_terminals():
    m = np.zeros((3, 1, 3, 6))
    m[2] = 1
    occ = np.ones((1, 3, 6), bool)
    occ[:, :, 3] = False
    with pytest.raises(DisconnectedTerminals):
        solve_resistance(m, occ, CELL, DEFAULT)


@given(st.integers(0, 2**31 - 1))
def test_reversal_and_reciprocity(seed):
    rng = np.random.default_rng(seed)
    shape = (1, 4, 8)
    m = _random_m(shape, rng)
    occ = rng.random(shape) < 0.85
    occ[:, :, 0] = occ[:, :, -1] = True
    occ[:, 1, :] = True
    a = solve_resistance(m, occ, CELL, DEFAULT)
    assert solve_resistance(-m, occ, CELL, DEFAULT) == pytest.approx(a, rel=1e-12)
    lo = np.zeros(shape, bool)
    hi = np.zeros(shape, bool)
    lo[:, :, 0] = True
    hi[:, :, -1] = True
    b = solve_resistance(m, occ, CELL, DEFAULT, terminals=(hi, lo))
    assert b == pytest.approx(a, rel=1e-12)


@given(st.floats(-1, 1), st.floats(-1, 1))
def test_link_resistance_monotone_in_alignment(c1, c2):
    # literal sign: r grows with m1.m2; default sign reverses it
    def r(c, model):
        return link_resistance(Z, (np.sqrt(1 - c * c), 0, c), CELL, model)
    if c1 < c2:
        assert r(c1, LITERAL) <= r(c2, LITERAL)
        assert r(c1, DEFAULT) >= r(c2, DEFAULT)


def test_resistance_csv(tmp_path):
    p = tmp_path / "r.csv"
    write_resistance_csv(p, [("alt", "x0", 1.5), ("uni", "x0", 1.25)], DEFAULT, ["run"])
    lines = p.read_text().splitlines()
    assert lines[0] == "# run"
    assert lines[1] == "pattern_id,wire_id,R_ohms,rho,AMRc"
    assert lines[2].startswith("alt,x0,1.5,2e-07,0.014")
