import json
import subprocess
import sys

import pytest

from nashlab.cli import main
from nashlab.config import ConfigError, defaults, parse_config


def write(tmp_path, text, name="run.ini"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_unknown_key_named(tmp_path, capsys):
    cfg = write(tmp_path, "[run]\nchecks = spectrum\n[model]\nmodle = BM2\n")
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert "modle" in capsys.readouterr().err


def test_n_below_three(tmp_path):
    cfg = write(tmp_path, "[run]\nchecks = spectrum\n[grid]\nn = 2\n")
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2


@pytest.mark.parametrize("text", [
    "[bogus]\nx = 1\n",
    "[run]\nchecks = nope\n",
    "[model]\nname = XYZ\n",
    "[model]\ndrift = import(x)\n",
    "[montecarlo]\ndt_time = -1\n",
    "[grid]\ninterval = 1, 0\n",
])
def test_validation_errors(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_equality_bm2_constant(tmp_path):
    cfg = write(tmp_path, "[run]\nchecks = verify-equality\n[grid]\nn = 2000\n"
                          "[rate]\nvariant = constant\nexpected = 0.08333333333333333\n")
    out = tmp_path / "o"
    assert main(["run", "--config", str(cfg), "--out", str(out)]) == 0
    rep = json.loads((out / "report-verify-equality.json").read_text())
    vals = {q["name"]: q["value"] for q in rep["quantities"]}
    for key in ("pairing", "spectral_sum", "time_integral"):
        assert vals[key] == pytest.approx(1 / 12, rel=1e-6)
    assert (out / "curves-verify-equality.csv").read_text().startswith("k,xi,weight,laplace")


def test_assertion_failure_status(tmp_path):
    cfg = write(tmp_path, "[run]\nchecks = verify-equality\n[grid]\nn = 50\n[rate]\nexpected = 1.0\n")
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 1


def test_numeric_failure_status(tmp_path):
    cfg = write(tmp_path, "[run]\nchecks = verify-decay\n[decay]\ntruncations_length = 5\n")
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 3


def test_subcommand_overrides(tmp_path):
    out = tmp_path / "o"
    assert main(["spectrum", "--model", "OU", "--n", "200", "--interval", "-2", "2", "--out", str(out)]) == 0
    rep = json.loads((out / "report-spectrum.json").read_text())
    assert rep["inputs"]["n"] == 200 and rep["inputs"]["models"] == ["OU"]


def test_recorded_config_reproduces(tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    main(["verify-nash-killed", "--n", "80", "--seed", "5", "--out", str(out1)])
    assert main(["run", "--config", str(out1 / "config-used.ini"), "--out", str(out2)]) == 0
    assert (out1 / "report-verify-nash-killed.json").read_bytes() == (out2 / "report-verify-nash-killed.json").read_bytes()


def test_seed_changes_random_functions(tmp_path):
    main(["verify-nash-killed", "--n", "80", "--seed", "5", "--out", str(tmp_path / "a")])
    main(["verify-nash-killed", "--n", "80", "--seed", "6", "--out", str(tmp_path / "b")])
    assert (tmp_path / "a" / "report-verify-nash-killed.json").read_bytes() != \
        (tmp_path / "b" / "report-verify-nash-killed.json").read_bytes()


def test_list_models_json(capsys):
    assert main(["list-models", "--json"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["schema_version"] == 1
    assert {"BM2", "OU", "HT(4)"} <= {m["name"] for m in data["models"]}
    assert main(["list-models", "--tag", "heavy-tail", "--json"]) == 0
    names = [m["name"] for m in json.loads(capsys.readouterr().out)["models"]]
    assert names and all(n.startswith("HT(") for n in names)


def test_config_roundtrip():
    cfg = defaults()
    again = parse_config(cfg.to_ini())
    assert again.values == cfg.values


def test_console_script(tmp_path):
    res = subprocess.run([sys.executable, "-m", "nashlab.cli", "list-models"], capture_output=True, text=True)
    assert res.returncode == 0 and "HT(4)" in res.stdout
