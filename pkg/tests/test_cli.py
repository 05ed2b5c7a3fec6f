import json
from pathlib import Path

import pytest

from ellipticlab import cli

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def run(tmp_path, *argv):
    return cli.run([*argv, "--out", str(tmp_path)])


def test_hp_exit_codes(tmp_path):
    cfg = str(CONFIGS / "exp_weight.cfg")
    assert run(tmp_path, "hp-check", "--variant", "hp3", "--config", cfg) == 0
    assert run(tmp_path, "hp-check", "--variant", "hp1", "--config", cfg) == 1
    assert run(tmp_path, "hp-check", "--variant", "hp1", "--config", cfg, "--expect", "fail") == 0
    env = json.loads((tmp_path / "hp_report.json").read_text())
    assert env["verdict"] == "FAIL" and env["expect"] == "FAIL" and env["ok"]
    assert env["config"]["problem"]["V"].startswith("[d<=1.0]")


def test_counterexample(tmp_path):
    assert run(tmp_path, "counterexample", "--config", str(CONFIGS / "counterexample.cfg")) == 0
    data = json.loads((tmp_path / "counterexample.json").read_text())
    for key in ("delta", "r0", "rho", "theta", "xi", "gamma", "lambda_rho"):
        assert key in data
    assert data["verification"]["passed"]
    assert (tmp_path / "u_profile.csv").exists() and (tmp_path / "eigen_scan.csv").exists()


def test_ball_geom_and_eigen(tmp_path):
    cfg = str(CONFIGS / "ball.cfg")
    assert run(tmp_path, "geom", "--config", cfg) == 0
    assert run(tmp_path, "eigen", "--config", cfg) == 0
    assert run(tmp_path, "report", "--config", cfg) == 0
    assert (tmp_path / "summary.csv").read_text().count("\n") == 3


def test_byte_identical_reports(tmp_path):
    cfg = str(CONFIGS / "log_bound.cfg")
    assert run(tmp_path, "hp-check", "--config", cfg) == 0
    first = (tmp_path / "hp_report.json").read_bytes()
    assert run(tmp_path, "hp-check", "--config", cfg) == 0
    assert (tmp_path / "hp_report.json").read_bytes() == first


def test_float_format():
    text = cli.dumps({"x": 0.1, "y": float("nan"), "z": [1.0, float("inf")]})
    assert "0.10000000000000001" in text
    assert '"nan"' in text and '"inf"' in text


@pytest.mark.parametrize("name", ["exp_weight.cfg", "counterexample.cfg", "log_bound.cfg",
                                  "ball.cfg"])
def test_round_trip(name):
    cfg = cli.RunConfig.from_file(str(CONFIGS / name))
    again = cli.RunConfig.from_text(cfg.to_text())
    assert again == cfg
    assert cli.RunConfig.from_text(again.to_text()).to_text() == cfg.to_text()


def test_unknown_key_has_position():
    text = "[problem]\nV = 1\nbogus = 3\n"
    with pytest.raises(cli.ConfigError, match=r":3:1"):
        cli.RunConfig.from_text(text)
    with pytest.raises(cli.ConfigError, match=r":1:1"):
        cli.RunConfig.from_text("[nonsense]\nx = 1\n[problem]\nV = 1\n")
    with pytest.raises(cli.ConfigError):
        cli.RunConfig.from_text("V = 1\n")
    with pytest.raises(cli.ConfigError, match="V"):
        cli.RunConfig.from_text("[problem]\nm = 2\n")


def test_bad_config_exit_code(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("[problem]\nV = [d<=0.5] 1.0*d^\n")
    assert cli.run(["geom", "--config", str(bad), "--out", str(tmp_path)]) == 2
    assert cli.run(["nonsense"]) == 2
    assert cli.run(["geom", "--config", str(tmp_path / "missing.cfg")]) == 2


def test_build_spec_from_config():
    cfg = cli.RunConfig.from_file(str(CONFIGS / "counterexample.cfg"))
    spec = cli.build_spec(cfg)
    assert spec.sigma == 3.0 and spec.manifold.m == 2
    assert spec.V.leading.q == -4.0 and spec.V.leading.s == -1.5
