import json
from pathlib import Path

import jsonschema
import pytest

from quasilab.cli import main
from quasilab.config import MAX_SWEEP_RUNS, ConfigError, RunConfig, expand_sweep, load_config

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"
SCHEMAS = ROOT / "docs"


def _write(tmp_path, text, name="run.ini"):
    p = tmp_path / name
    p.write_text(text)
    return p


def _validate(out: Path):
    report = json.loads((out / "report.json").read_text())
    manifest = json.loads((out / "MANIFEST.json").read_text())
    jsonschema.validate(report, json.loads((SCHEMAS / "report_schema.json").read_text()))
    jsonschema.validate(manifest, json.loads((SCHEMAS / "manifest_schema.json").read_text()))
    return report, manifest


def test_audit_example_family(tmp_path):
    cfg = _write(tmp_path, "[family]\nmu = 0.5\ngamma = 2\n")
    assert main(["audit", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    report, manifest = _validate(tmp_path / "o")
    assert report["audit"]["passed"] is True
    assert manifest["status"] == "ok"


def test_audit_gamma_below_one_in_theorem_mode(tmp_path):
    out = tmp_path / "o"
    assert main(["audit", "--config", str(CONFIGS / "invalid_gamma09.ini"), "--out", str(out)]) == 1
    report, manifest = _validate(out)
    assert manifest["failed_stage"] == "audit"


@pytest.mark.parametrize(
    "text",
    ["[family\nmu = 0\n", "[family]\nmu = zero\n", "[family]\nmu = 0\nbogus = 1\n", "[nosuch]\nx = 1\n",
     "[geometry]\nkind = torus\n"],
)
def test_parse_failures_exit_2(tmp_path, text, capsys):
    cfg = _write(tmp_path, text)
    assert main(["audit", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert "run.ini" in capsys.readouterr().err


def test_unknown_key_diagnostic_has_line(tmp_path):
    cfg = _write(tmp_path, "[family]\nmu = 0\n\n[mesh]\nn = 64\nqq = 2\n")
    with pytest.raises(ConfigError) as exc:
        load_config(cfg)
    assert "run.ini:6" in str(exc.value) and "qq" in str(exc.value)


def test_missing_config_and_bad_command(tmp_path):
    assert main(["audit", "--config", str(tmp_path / "absent.ini")]) == 2
    assert main(["frobnicate", "--config", "x"]) == 2
    assert main(["audit"]) == 2


def test_sweep_axes_need_sweep_command(tmp_path):
    cfg = _write(tmp_path, "[family]\ngamma = 2, 3\n")
    assert main(["audit", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2


def test_sweep_cap(tmp_path):
    vals = ", ".join(str(1.5 + 0.01 * k) for k in range(17))
    cfg = _write(tmp_path, f"[family]\ngamma = {vals}\nmu = {vals.replace('1.', '0.')}\n")
    with pytest.raises(ConfigError, match="cap"):
        load_config(cfg)
    assert 17 * 17 > MAX_SWEEP_RUNS
    assert main(["sweep", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2


def test_ini_roundtrip(tmp_path):
    cfg, _ = load_config(CONFIGS / "power_tail.ini")
    again, axes = load_config(_write(tmp_path, cfg.to_ini()))
    assert again == cfg and axes == {}
    assert RunConfig().replace("mesh.n", 64).mesh.n == 64


def test_expand_sweep_order():
    runs = expand_sweep(RunConfig(), {"family.gamma": [2.0, 3.0], "mesh.n": [64, 128]})
    assert [p for p, _ in runs] == [
        {"family.gamma": 2.0, "mesh.n": 64},
        {"family.gamma": 2.0, "mesh.n": 128},
        {"family.gamma": 3.0, "mesh.n": 64},
        {"family.gamma": 3.0, "mesh.n": 128},
    ]
    assert runs[3][1].family.gamma == 3.0 and runs[3][1].mesh.n == 128


def test_pipeline_exact_case(tmp_path):
    out = tmp_path / "o"
    assert main(["pipeline", "--config", str(CONFIGS / "exact_gamma3.ini"), "--out", str(out)]) == 0
    report, manifest = _validate(out)
    assert report["analysis"]["u_rate"]["exponent"] == pytest.approx(0.5, abs=0.02)
    table = report["phi"]["constant_table"]
    assert table["paper"] == pytest.approx(1.189207, abs=1e-6)
    assert table["oracle"] == pytest.approx(1.414214, abs=1e-6)
    assert table["oracle_over_paper"] == pytest.approx(1.189207, abs=1e-6)
    assert set(manifest["files"]) == {"config.ini", "report.json", "transform.csv", "phi.csv", "solution.csv"}
    headers = {name: (out / name).read_text().splitlines()[0] for name in ("transform.csv", "phi.csv", "solution.csv")}
    assert headers == {
        "transform.csv": "s,g,g_prime,h",
        "phi.csv": "s,phi,phi_prime,residual",
        "solution.csv": "x_or_r,d,v,u,Dv,Du,res_semilinear,res_quasilinear",
    }
    # determinism: a rerun reproduces the manifest byte for byte
    first = (out / "MANIFEST.json").read_bytes()
    assert main(["pipeline", "--config", str(CONFIGS / "exact_gamma3.ini"), "--out", str(out), "--seedless"]) == 0
    assert (out / "MANIFEST.json").read_bytes() == first


@pytest.mark.parametrize("name", ["example_mu05_gamma2.ini", "ball_mu025_gamma15.ini", "power_tail.ini", "gamma_lt_1.ini"])
def test_example_configs_pipeline(tmp_path, name):
    out = tmp_path / "o"
    assert main(["pipeline", "--config", str(CONFIGS / name), "--out", str(out)]) == 0
    report, _ = _validate(out)
    fit, expected = report["analysis"]["u_rate"]["exponent"], report["analysis"]["expected"]["u_exponent"]
    assert fit == pytest.approx(expected, rel=0.05)


def test_phi_command_needs_theorem_case(tmp_path):
    out = tmp_path / "o"
    assert main(["phi", "--config", str(CONFIGS / "gamma_lt_1.ini"), "--out", str(out)]) == 1
    _, manifest = _validate(out)
    assert manifest["failed_stage"] == "phi"


@pytest.mark.parametrize("command", ["transform", "phi", "solve"])
def test_partial_commands(tmp_path, command):
    out = tmp_path / "o"
    cfg = _write(tmp_path, "[family]\nmu = 0.5\ngamma = 2\n[mesh]\nn = 64\n[output]\nformats = json\n")
    assert main([command, "--config", str(cfg), "--out", str(out)]) == 0
    report, manifest = _validate(out)
    assert not any(f.endswith(".csv") for f in manifest["files"])
    assert ("analysis" in report) is False


def test_gamma_sweep(tmp_path):
    out = tmp_path / "sweep"
    assert main(["sweep", "--config", str(CONFIGS / "sweep_gamma.ini"), "--out", str(out), "--jobs", "2"]) == 0
    index = json.loads((out / "index.json").read_text())
    assert len(index["runs"]) == 4
    for run in index["runs"]:
        report, _ = _validate(out / run["run"])
        gamma = run["params"]["family.gamma"]
        assert report["analysis"]["u_rate"]["exponent"] == pytest.approx(2 / (1 + gamma), rel=0.02)
