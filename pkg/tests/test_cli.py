import json
import logging

import pandas as pd
import pytest
import yaml

from indii.cli.main import main

SV_THETA = "--theta=-0.736,0.90,0.363"


@pytest.fixture(autouse=True)
def workspace(tmp_path, monkeypatch):
    """每个用例在空目录中运行（不读取仓库的config.yml），结束后恢复根日志器"""
    monkeypatch.chdir(tmp_path)
    root = logging.getLogger()
    handlers, level = list(root.handlers), root.level
    yield tmp_path
    root.handlers[:] = handlers
    root.setLevel(level)


def simulate_to(directory, *extra):
    path = directory / "simulated.csv"
    assert main(["simulate", SV_THETA, "--T", "300", "--seed", "1", "--out", str(path), *extra]) == 0
    return path


def test_simulate_to_stdout(capsys):
    assert main(["simulate", SV_THETA, "--T", "500", "--seed", "1"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "y"
    assert len(lines) == 501


def test_simulate_is_reproducible(capsys):
    main(["simulate", SV_THETA, "--T", "50", "--seed", "4"])
    first = capsys.readouterr().out
    main(["simulate", SV_THETA, "--T", "50", "--seed", "4"])
    assert capsys.readouterr().out == first


def test_simulate_writes_outputs(workspace):
    path = simulate_to(workspace / "sim", "--latent")
    frame = pd.read_csv(path)
    assert list(frame.columns) == ["y", "log_h"]
    assert len(frame) == 300
    echoed = yaml.safe_load((workspace / "sim" / "config_resolved.yml").read_text(encoding="utf-8"))
    assert echoed["command"]["seed"] == 1


def test_simulate_probit(workspace):
    out = workspace / "probit"
    assert main(["simulate", "--model", "probit", "--theta", "0,1,0.5", "--T", "200", "--seed", "2",
                 "--out", str(out / "simulated.csv")]) == 0
    frame = pd.read_csv(out / "simulated.csv")
    assert list(frame.columns) == ["y", "x_0", "x_1"]
    assert set(frame["y"].unique()) <= {0.0, 1.0}


def test_simulate_writes_one_column_per_path(workspace):
    single = simulate_to(workspace / "single")
    path = workspace / "paths.csv"
    assert main(["simulate", "--model", "sv", SV_THETA, "--T", "300", "--H", "3", "--seed", "1",
                 "--out", str(path), "--latent"]) == 0
    frame = pd.read_csv(path)
    assert list(frame.columns) == ["y_0", "y_1", "y_2", "log_h_0", "log_h_1", "log_h_2"]
    assert len(frame) == 300
    # 第一条路径与 H = 1 的输出相同，其余路径不同
    pd.testing.assert_series_equal(frame["y_0"], pd.read_csv(single)["y"], check_names=False)
    assert not frame["y_0"].equals(frame["y_1"])
    assert (workspace / "config_resolved.yml").exists()

    probit = workspace / "probit.csv"
    assert main(["simulate", "--model", "probit", "--theta", "0,1,0.5", "--T", "100", "--H", "2", "--seed", "2",
                 "--out", str(probit)]) == 0
    assert list(pd.read_csv(probit).columns) == ["y_0", "y_1", "x_0", "x_1"]


def test_simulate_accepts_plain_negative_theta(capsys):
    assert main(["simulate", "--theta", "-0.736,0.90,0.363", "--T", "20", "--seed", "1"]) == 0
    plain = capsys.readouterr().out
    main(["simulate", SV_THETA, "--T", "20", "--seed", "1"])
    assert capsys.readouterr().out == plain


def test_defaults_come_from_config(workspace, capsys):
    (workspace / "config.yml").write_text(
        "simulation:\n  model: probit\n  T: 40\n  H: 2\nauxiliary:\n  criterion: probit0\n", encoding="utf-8")
    assert main(["simulate", "--theta", "0,1,0", "--seed", "1"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "y_0,y_1,x_0,x_1"
    assert len(lines) == 41

    path = workspace / "probit.csv"
    assert main(["simulate", "--theta", "0,1,0", "--T", "400", "--H", "1", "--seed", "3", "--out", str(path)]) == 0
    capsys.readouterr()
    assert main(["score-test", "--data", str(path)]) == 0
    assert json.loads(capsys.readouterr().out)["df"] == 1


def test_usage_errors(workspace):
    assert main(["montecarlo", "--design", "jpr1", "--out", str(workspace / "mc")]) == 1
    assert main(["bootstrap"]) == 1
    assert main(["simulate", SV_THETA, "--seed", "1", "--bogus"]) == 1
    assert main(["simulate", SV_THETA]) == 1
    assert main(["fit-aux", "--data", "missing.csv"]) == 1
    assert main(["--config", "missing.yml", "simulate", SV_THETA, "--seed", "1"]) == 1


def test_version(capsys):
    assert main(["--version"]) == 0
    assert "indii" in capsys.readouterr().out


def test_inadmissible_parameters_are_numerical_failures():
    assert main(["simulate", "--theta", "0,1.5,0.2", "--seed", "1"]) == 2


def test_fit_aux_and_func(workspace, capsys):
    path = simulate_to(workspace / "sim")
    capsys.readouterr()

    assert main(["fit-aux", "--data", str(path)]) == 0
    document = json.loads(capsys.readouterr().out)
    assert document["schema_version"] == "1.0"
    fit = document["fit"]
    assert fit["param_names"] == ["psi", "phi", "pi"]
    assert set(fit["multipliers"]) == {"phi_floor", "psi_nonneg", "pi_nonneg", "stationarity"}
    assert all(value >= 0 for value in fit["multipliers"].values())

    assert main(["func", "--data", str(path), "--out", str(workspace / "func")]) == 0
    written = json.loads((workspace / "func" / "func.json").read_text(encoding="utf-8"))
    assert set(written["beta_hat"]) == {"psi", "phi", "pi"}
    assert (workspace / "func" / "config_resolved.yml").exists()


def test_score_test_on_probit_data(workspace, capsys):
    out = workspace / "probit"
    main(["simulate", "--model", "probit", "--theta", "0,1,0", "--T", "400", "--seed", "3",
          "--out", str(out / "simulated.csv")])
    capsys.readouterr()
    assert main(["score-test", "--data", str(out / "simulated.csv"), "--criterion", "probit0"]) == 0
    document = json.loads(capsys.readouterr().out)
    assert document["df"] == 1
    assert 0.0 <= document["p_value"] <= 1.0
    assert document["reject"] == (document["p_value"] < 0.05)


def test_score_test_without_equalities_fails(workspace):
    path = simulate_to(workspace / "sim")
    assert main(["score-test", "--data", str(path)]) == 2


def test_overid_asymptotic_report(workspace, capsys):
    assert main(["overid", "--instance", "conflict", "--reps", "0", "--seed", "1"]) == 0
    document = json.loads(capsys.readouterr().out)
    selections = document["selections"]
    assert selections["naive"]["avar_theta"] is None
    assert selections["optimal"]["avar_theta"] == [[1.0]]
    assert "monte_carlo" not in document

    out = workspace / "overid"
    assert main(["overid", "--instance", "linear", "--reps", "20", "--T", "200", "--threads", "1", "--seed", "1",
                 "--out", str(out)]) == 0
    variance = pd.read_csv(out / "overid_variance.csv")
    assert set(variance["selection"]) == {"naive", "optimal"}
    assert (out / "overid_avar.csv").exists()


def test_density(workspace):
    source = workspace / "values.csv"
    pd.DataFrame({"v": [0.01 * i for i in range(200)], "ok": [True] * 200}).to_csv(source, index=False)
    assert main(["density", "--input", str(source), "--column", "v", "--out", str(workspace / "kde")]) == 0
    table = pd.read_csv(workspace / "kde" / "density_v.csv")
    assert len(table) == 512
    assert (table["density"] >= 0).all()
    assert main(["density", "--input", str(source), "--column", "w"]) == 1


def test_montecarlo_writes_tables(workspace):
    out = workspace / "mc"
    assert main(["montecarlo", "--design", "jpr1", "--T", "200", "--reps", "3", "--no-estimate", "--threads", "1",
                 "--seed", "5", "--out", str(out)]) == 0
    summary = json.loads((out / "summary.json").read_text(encoding="utf-8"))
    assert summary["replications"] == 3
    assert len(pd.read_csv(out / "raw.csv")) == 3
    assert list(pd.read_csv(out / "bindings.csv")["constraint"]) == ["phi_floor", "psi_nonneg", "pi_nonneg",
                                                                      "stationarity"]


@pytest.mark.slow
def test_estimate_end_to_end(workspace, capsys):
    path = simulate_to(workspace / "sim")
    capsys.readouterr()
    assert main(["estimate", "--data", str(path), "--H", "2", "--grid-points", "5", "--seed", "3"]) == 0
    document = json.loads(capsys.readouterr().out)
    assert set(document["estimate"]["theta_hat"]) == {"alpha", "delta", "sigma_v"}
