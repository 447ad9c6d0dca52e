import json
import math
import shutil
import subprocess
import textwrap
from importlib import resources

import numpy as np
import pytest
import yaml

from vibron_ratchet.cli import CSV_HEADER, main
from vibron_ratchet.config import ConfigError, load_config, parse_text, validate
from vibron_ratchet.model import wavenumber_to_omega

MINIMAL = """
model:
  h_q0: {value: 115, unit: cm-1}
  h_v1: {value: 87.44, unit: cm-1}
  coupling_J: {value: 37.6, unit: cm-1}
  omega1: {value: 142.7, unit: cm-1}
"""


def write(tmp_path, text, name="cfg.yaml"):
    p = tmp_path / name
    p.write_text(textwrap.dedent(text))
    return p


def reference_path():
    return resources.files("vibron_ratchet").joinpath("data", "reference.yaml")


def test_minimal_config_defaults(tmp_path):
    cfg = load_config(write(tmp_path, MINIMAL))
    assert cfg.experiment["threshold"] == 0.5
    assert cfg.experiment["horizon_periods"] == 3
    assert cfg.resolved["integrator"]["rel_tol"] == 1e-11


def test_wavenumber_converted(tmp_path):
    m = load_config(write(tmp_path, MINIMAL)).model()
    assert m.h_projection()["h_q0"] == wavenumber_to_omega(115)


def test_rad_per_fs_accepted_and_strings_coerced():
    cfg = validate(parse_text(MINIMAL.replace("{value: 115, unit: cm-1}", '{value: "2.1e-2", unit: rad_per_fs}')))
    assert cfg.model().h_projection()["h_q0"] == 0.021


def test_unknown_key_named():
    with pytest.raises(ConfigError, match="'trheshold'"):
        validate(parse_text(MINIMAL + "experiment:\n  trheshold: 0.4\n"))


def test_missing_unit_rejected():
    with pytest.raises(ConfigError, match="model.h_q0"):
        validate(parse_text(MINIMAL.replace("{value: 115, unit: cm-1}", "115")))


def test_bad_unit_rejected():
    with pytest.raises(ConfigError, match="unit"):
        validate(parse_text(MINIMAL.replace("unit: cm-1}", "unit: eV}", 1)))


def test_missing_required_field():
    with pytest.raises(ConfigError, match="coupling_J"):
        validate(parse_text("model:\n  omega1: {value: 1, unit: cm-1}\n"))


def test_parse_error_has_line():
    with pytest.raises(ConfigError, match=r":3:"):
        parse_text("model:\n  a: 1\n  b: c: 2\n", "x.yaml")


def test_vector_form(tmp_path):
    cfg = validate(parse_text("""
model:
  coupling_J: {value: 10, unit: cm-1}
  omega1: {value: 100, unit: cm-1}
  vectors:
    unit: cm-1
    h1: [1, 0]
    h2: [0, 1]
    q0: [115, 300]
    v1: [80, 5]
"""))
    m = cfg.model()
    assert m.dim == 2 and not m.symmetric_h
    assert m.h_projection("h2")["h_q0"] == pytest.approx(wavenumber_to_omega(300))


def test_vector_form_dimension_mismatch():
    with pytest.raises(ConfigError, match="dimension"):
        validate(parse_text("""
model:
  coupling_J: {value: 10, unit: cm-1}
  omega1: {value: 100, unit: cm-1}
  vectors: {unit: cm-1, h1: [1, 0], h2: [0, 1], q0: [1], v1: [1, 0]}
"""))


def test_exit_code_config_error(tmp_path, capsys):
    p = write(tmp_path, MINIMAL + "bogus: 1\n")
    assert main(["simulate", "--config", str(p), "--out-dir", str(tmp_path)]) == 2
    assert "bogus" in capsys.readouterr().err


def test_exit_code_missing_file(tmp_path):
    assert main(["simulate", "--config", str(tmp_path / "none.yaml")]) == 4


def test_exit_code_unwritable_output(tmp_path):
    p = write(tmp_path, MINIMAL.replace("37.6", "0") + "experiment: {horizon_periods: 1}\n")
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["simulate", "--config", str(p), "--out-dir", str(blocker / "sub")]) == 4


def test_simulate_zero_coupling(tmp_path, capsys):
    p = write(tmp_path, MINIMAL.replace("37.6", "0") + "experiment: {horizon_periods: 1}\n")
    assert main(["simulate", "--config", str(p), "--out-dir", str(tmp_path)]) == 0
    lines = (tmp_path / "trajectory.csv").read_text().splitlines()
    assert lines[0] == CSV_HEADER
    data = np.loadtxt(tmp_path / "trajectory.csv", delimiter=",", skiprows=1)
    np.testing.assert_allclose(data[:, 5], 1.0, rtol=0, atol=1e-12)
    out = capsys.readouterr().out.strip().splitlines()[-1]
    assert out.startswith("rho11=1 rho22=0")


def test_csv_precision(tmp_path):
    p = write(tmp_path, MINIMAL + "experiment: {horizon_periods: 1}\n")
    assert main(["simulate", "--config", str(p), "--out-dir", str(tmp_path)]) == 0
    row = (tmp_path / "trajectory.csv").read_text().splitlines()[5].split(",")
    assert len(row) == 10
    digits = [len(x.lstrip("-").replace(".", "").split("e")[0].lstrip("0")) for x in row if x not in ("0", "-0", "1")]
    assert max(digits) >= 12


def test_lz_validate_table(tmp_path):
    p = write(tmp_path, MINIMAL + "experiment: {gammas: [1.0, 2.0]}\n")
    assert main(["lz-validate", "--config", str(p), "--out-dir", str(tmp_path)]) == 0
    lines = (tmp_path / "table.csv").read_text().splitlines()
    assert lines[0] == "gamma,p_numeric,p_analytic,rel_error"
    rows = np.loadtxt(tmp_path / "table.csv", delimiter=",", skiprows=1)
    np.testing.assert_allclose(rows[:, 2], 1 - np.exp(-2 * math.pi * rows[:, 0]))
    assert np.all(rows[:, 3] <= 0.01)


def test_crossing_command(tmp_path):
    assert main(["crossing", "--config", str(reference_path()), "--out-dir", str(tmp_path)]) == 0
    res = json.loads((tmp_path / "summary.json").read_text())["results"]
    assert res["direct"]["solvable"] and not res["reverse"]["solvable"]


def test_ratchet_command_on_reference(tmp_path, capsys):
    assert main(["ratchet", "--config", str(reference_path()), "--out-dir", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "summary.json").read_text())
    assert set(doc) == {"config", "results", "versions"}
    assert doc["versions"]["fixture"] == "reference-v1"
    assert doc["results"]["p_direct"] >= 0.9 and doc["results"]["p_reverse"] <= 0.05
    last = capsys.readouterr().out.strip().splitlines()[-1]
    assert last.startswith("p_direct=") and "p_reverse=" in last and "t2=" in last


def test_sweep_command(tmp_path):
    doc = yaml.safe_load(reference_path().read_text())
    doc["experiment"]["horizon_periods"] = 1
    doc["experiment"]["sweep"] = {"axes": {"h_v1": {"values": [80.0, 87.44], "unit": "cm-1"}}}
    p = write(tmp_path, yaml.safe_dump(doc))
    assert main(["sweep", "--config", str(p), "--out-dir", str(tmp_path), "--jobs", "1"]) == 0
    lines = (tmp_path / "table.csv").read_text().splitlines()
    assert lines[0] == "h_v1,p_direct,p_reverse,irreversibility,t2" and len(lines) == 3


def test_sweep_requires_axes(tmp_path):
    p = write(tmp_path, MINIMAL)
    assert main(["sweep", "--config", str(p), "--out-dir", str(tmp_path)]) == 2


def test_mutate_command(tmp_path, capsys):
    assert main(["mutate", "--config", str(reference_path()), "--out-dir", str(tmp_path)]) == 0
    res = json.loads((tmp_path / "summary.json").read_text())["results"]
    assert res["p_direct_perturbed"] <= 0.05


def test_round_trip_from_summary(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    p = write(tmp_path, MINIMAL + "experiment: {horizon_periods: 1}\n")
    assert main(["simulate", "--config", str(p), "--out-dir", str(a)]) == 0
    assert main(["simulate", "--config", str(a / "summary.json"), "--out-dir", str(b)]) == 0
    assert (a / "summary.json").read_bytes() == (b / "summary.json").read_bytes()
    assert (a / "trajectory.csv").read_bytes() == (b / "trajectory.csv").read_bytes()


@pytest.mark.skipif(shutil.which("vibron-ratchet") is None, reason="console script not installed")
def test_console_script(tmp_path):
    p = write(tmp_path, MINIMAL.replace("37.6", "0") + "experiment: {horizon_periods: 1}\n")
    out = subprocess.run(
        ["vibron-ratchet", "simulate", "--config", str(p), "--out-dir", str(tmp_path)],
        capture_output=True, text=True, check=False,
    )
    assert out.returncode == 0 and out.stdout.startswith("rho11=")
