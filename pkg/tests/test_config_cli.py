import json
import os
import shutil

import pytest

from xdwm.cli import main, run
from xdwm.config import ConfigInvalid, load, loads, parse_quantity
from xdwm.golden import GoldenMismatch, compare_csv, compare_golden

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
CONFIGS = os.path.join(ROOT, "configs")
GOLDEN = os.path.join(ROOT, "tests", "golden", "v1")


def test_empty_config_lists_fields():
    with pytest.raises(ConfigInvalid) as exc:
        loads("")
    assert any(e.startswith("experiment:") for e in exc.value.errors)


def test_field_level_messages():
    with pytest.raises(ConfigInvalid) as exc:
        loads('experiment = "shift-window"\nseed = -1\n[material]\nMs = -5\nfoo = 1\n')
    errs = exc.value.errors
    assert "seed: must be a non-negative integer" in errs
    assert "geometry: required for this experiment" in errs
    assert "shift-window.j: required field missing" in errs
    assert "material.foo: unknown field" in errs
    assert any(e.startswith("material:") for e in errs)


def test_pulse_reference_density():
    base = 'experiment = "fig3-demo"\n[fig3-demo]\n'
    assert loads(base).params["pulse_j"] == 1.1e12
    assert loads(base + 'pulse_j = "scaled"\n').params["pulse_j"] is None
    with pytest.raises(ConfigInvalid) as exc:
        loads(base + "pulse_j = -1\n")
    assert exc.value.errors == ['fig3-demo.pulse_j: positive current density or "scaled"']


def test_bad_syntax_and_unknown_experiment():
    with pytest.raises(ConfigInvalid):
        loads("experiment = ")
    with pytest.raises(ConfigInvalid):
        loads('experiment = "teleport"')
    with pytest.raises(ConfigInvalid):
        loads('experiment = "leakage"\n[leakage]\nscenarios = ["4cell"]\n')


@pytest.mark.parametrize("text,value", [("24nm", 24e-9), ("1.5ns", 1.5e-9), ("44uA", 44e-6),
                                        ("100kohm", 1e5), ("2e-3 m", 2e-3), ("-3ps", -3e-12)])
def test_quantities(text, value):
    assert parse_quantity(text) == pytest.approx(value, rel=1e-15)


def test_quantity_passthrough():
    assert parse_quantity("9cell") == "9cell"
    assert parse_quantity(["40nm", 3]) == [pytest.approx(40e-9), 3]


@pytest.mark.parametrize("name", sorted(f for f in os.listdir(CONFIGS) if f.endswith(".toml")))
def test_shipped_configs_validate(name):
    cfg = load(os.path.join(CONFIGS, name))
    assert json.loads(cfg.header_lines()[0][len("config: "):])["experiment"] == cfg.experiment


def test_geometry_units_resolved():
    cfg = load(os.path.join(CONFIGS, "relax.toml"))
    assert cfg.geometry.domain_length == pytest.approx(80e-9)


def _cli(tmp_path, name, *extra):
    out = tmp_path / "out"
    return main(["--config", os.path.join(CONFIGS, name), "--out", str(out), *extra]), out


@pytest.mark.parametrize("name,golden", [("leakage.toml", "leakage"),
                                         ("array_replay.toml", "array_replay")])
def test_cli_matches_golden(tmp_path, name, golden):
    code, out = _cli(tmp_path, name, "--golden", os.path.join(GOLDEN, golden))
    assert code == 0
    assert not (out / "error.json").exists()
    for f in os.listdir(os.path.join(GOLDEN, golden)):
        if f.endswith(".txt"):
            assert (out / f).read_text() == open(os.path.join(GOLDEN, golden, f)).read()


def test_leakage_writes_plot(tmp_path):
    code, out = _cli(tmp_path, "leakage.toml")
    assert code == 0
    assert (out / "leakage.svg").read_text().lstrip().startswith("<?xml")


def test_config_error_exit_code(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text("")
    out = tmp_path / "o"
    assert main(["--config", str(bad), "--out", str(out)]) == 2
    rec = json.loads((out / "error.json").read_text())
    assert rec["error"] == "config" and rec["fields"]
    assert main(["--config", str(tmp_path / "missing.toml"), "--out", str(out)]) == 2


def test_experiment_error_exit_code(tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text('experiment = "array-replay"\n[array-replay]\ngrid = "nope.grid"\nscript = "x"\n')
    out = tmp_path / "o"
    assert main(["--config", str(cfg), "--out", str(out)]) == 3
    rec = json.loads((out / "error.json").read_text())
    assert rec["error"] == "experiment" and "traceback" in rec


def test_golden_mismatch_exit_code(tmp_path):
    gold = tmp_path / "gold"
    shutil.copytree(os.path.join(GOLDEN, "leakage"), gold)
    p = gold / "leakage.csv"
    lines = p.read_text().splitlines()
    cells = lines[-1].split(",")
    cells[4] = repr(float(cells[4]) * (1 + 2e-9))     # twice the default tolerance
    lines[-1] = ",".join(cells)
    p.write_text("\n".join(lines) + "\n")
    code, out = _cli(tmp_path, "leakage.toml", "--golden", str(gold))
    assert code == 4
    rec = json.loads((out / "error.json").read_text())
    assert any("leakage_percent" in q for q in rec["problems"])


def test_compare_within_tolerance(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    a.write_text("# generated: x\n# k\nc,d\n1.0,t\n")
    b.write_text("# generated: y\n# k\nc,d\n1.0000000001,t\n")
    assert compare_csv(a, b).ok
    b.write_text("# generated: y\n# k\nc,d\n1.1,t\n")
    assert not compare_csv(a, b).ok
    assert compare_csv(a, b, {"c": (0.2, 0.0)}).ok
    b.write_text("# generated: y\n# k\nc,d\n1.0,u\n")
    assert compare_csv(a, b).problems == ["b.csv:1:d: 't' != 'u'"]
    # every golden CSV must exist in the run directory
    with pytest.raises(GoldenMismatch, match="missing from run output"):
        compare_golden(str(tmp_path / "no_run"), str(tmp_path))


def test_reruns_are_byte_identical(tmp_path):
    cfg = load(os.path.join(CONFIGS, "leakage.toml"))
    a = run(cfg, str(tmp_path / "a"), base_dir=CONFIGS, timestamp="T")
    run(cfg, str(tmp_path / "b"), base_dir=CONFIGS, timestamp="T")
    names = sorted(os.path.basename(f) for f in a.files)
    assert names == ["leakage.csv", "leakage.svg"]
    for n in names:
        assert (tmp_path / "a" / n).read_bytes() == (tmp_path / "b" / n).read_bytes()
    run(cfg, str(tmp_path / "c"), base_dir=CONFIGS)
    diff = [x for x, y in zip((tmp_path / "a" / "leakage.csv").read_text().splitlines(),
                              (tmp_path / "c" / "leakage.csv").read_text().splitlines()) if x != y]
    assert len(diff) == 1 and diff[0].startswith("# generated:")
