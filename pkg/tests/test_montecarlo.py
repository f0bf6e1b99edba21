import numpy as np
import pandas as pd
import pytest
from numpy.testing import assert_allclose
from pydantic import ValidationError
from scipy.stats import norm

from indii.core.errors import DegenerateSample, UsageError
from indii.core.montecarlo import (
    binding_table,
    bootstrap_median_ci,
    create_design,
    density_frames,
    kernel_density,
    parameter_statistics,
    replication_seeds,
    run_design,
    run_replication,
    run_replications,
    silverman_bandwidth,
    summarize,
)


def fake_records(n, failures, seed=0):
    rng = np.random.default_rng(seed)
    ok = np.arange(n) >= failures
    return pd.DataFrame({
        "index": np.arange(n),
        "ok": ok,
        "theta_hat_a": np.where(ok, 1.0 + 0.1 * rng.standard_normal(n), np.nan),
        "binding_floor": np.arange(n) % 4 == 0,
        "violated_floor": np.arange(n) % 10 == 0,
        "p_value": np.where(ok, rng.uniform(size=n), np.nan),
    })


def test_parameter_statistics_decomposition():
    values = np.random.default_rng(1).normal(0.3, 0.2, 500)
    stats = parameter_statistics(values, 0.25)
    assert stats.std**2 + stats.bias**2 == pytest.approx(stats.rmse**2, rel=1e-12)
    assert stats.bias == pytest.approx(np.mean(values) - 0.25)
    assert stats.median == pytest.approx(np.median(values))


def test_summary_validity_threshold():
    assert summarize(fake_records(100, 1), [1.0], ["a"], ["floor"]).valid
    invalid = summarize(fake_records(100, 3), [1.0], ["a"], ["floor"])
    assert not invalid.valid
    assert invalid.failures == 3


def test_summary_contents():
    records = fake_records(100, 0)
    summary = summarize(records, [1.0], ["a"], ["floor"], design="toy", test_level=0.1)
    assert summary.params["a"].true == 1.0
    assert summary.bindings["floor"].binding_pct == pytest.approx(25.0)
    assert summary.bindings["floor"].violation_pct == pytest.approx(10.0)
    assert summary.rejection_rate == pytest.approx(float((records["p_value"] < 0.1).mean()))

    table = binding_table(summary)
    assert list(table.columns) == ["constraint", "binding_pct", "violation_pct"]
    assert table.loc[0, "constraint"] == "floor"
    document = summary.to_dict()
    assert document["design"] == "toy"
    assert document["params"]["a"]["rmse"] == summary.params["a"].rmse


def test_kernel_density_recovers_normal():
    samples = np.random.default_rng(2).standard_normal(100_000)
    grid, density = kernel_density(samples, trim_lower=0.0)
    inner = np.abs(grid) < 3.0
    assert_allclose(density[inner], norm.pdf(grid[inner]), atol=0.02)
    assert np.sum(density) * (grid[1] - grid[0]) == pytest.approx(1.0, abs=0.01)


def test_kernel_density_trim_and_bandwidth():
    samples = np.arange(100, dtype=float)
    grid, _ = kernel_density(samples, bandwidth=1.0, trim_lower=0.05, grid_points=64)
    assert grid.size == 64
    assert grid[0] == pytest.approx(5.0 - 3.0)
    assert grid[-1] == pytest.approx(99.0 + 3.0)
    assert silverman_bandwidth(samples) == pytest.approx(1.06 * np.std(samples, ddof=1) * 100 ** -0.2)


@pytest.mark.parametrize("samples", [np.arange(5.0), np.ones(50)])
def test_kernel_density_degenerate(samples):
    with pytest.raises(DegenerateSample):
        kernel_density(samples)


def test_density_frames_skip_degenerate_columns():
    records = pd.DataFrame({
        "ok": [True] * 40,
        "theta_hat_a": np.linspace(0.0, 1.0, 40),
        "theta_hat_b": np.zeros(40),
    })
    frames = density_frames(records, ["a", "b"], trim_lower=0.0)
    assert list(frames) == ["a"]
    assert list(frames["a"].columns) == ["grid", "density"]


def test_bootstrap_median_ci_brackets_median():
    values = np.random.default_rng(3).standard_normal(200)
    lower, upper = bootstrap_median_ci(values, seed=4, reps=300)
    assert lower <= np.median(values) <= upper


def test_create_design():
    design = create_design("jpr2", {"seed": 1, "T": 2000, "variant": "wald-c", "H": None})
    assert design.theta0 == [-0.141, 0.98, 0.0614]
    assert design.T == 2000
    assert design.H == 10
    assert design.variant == "wald_c"
    assert design.param_names == ["alpha", "delta", "sigma_v"]

    probit = create_design("probit-null", {"seed": 1})
    assert probit.auxiliary["d_beta1"] == 2
    assert probit.score_test and not probit.estimate

    gmm = create_design("overid", {"seed": 1, "system": "gmm"})
    assert gmm.theta0 == [1.0]


def test_create_design_errors():
    with pytest.raises(UsageError):
        create_design("jpr3", {"seed": 1})
    with pytest.raises(ValidationError):
        create_design("jpr1")
    with pytest.raises(ValidationError):
        create_design("overid", {"seed": 1, "compare": ["random"]})
    with pytest.raises(ValidationError):
        create_design("jpr1", {"seed": 1, "theta0": [0.1, 0.5]})


def test_replication_seeds_are_distinct_and_stable():
    seeds = replication_seeds(11, 4)
    assert seeds == replication_seeds(11, 4)
    assert len(set(seeds.values())) == 3
    assert seeds != replication_seeds(11, 5)


def test_sv_replication_without_estimation():
    design = create_design("jpr1", {"seed": 5, "T": 300, "estimate": False})
    record = run_replication(design, 0)
    assert record["ok"], record["error"]
    for name in ("phi_floor", "psi_nonneg", "pi_nonneg", "stationarity"):
        assert f"binding_{name}" in record and f"violated_{name}" in record
    for name in ("psi", "phi", "pi"):
        assert np.isfinite(record[f"beta_r_{name}"]) and np.isfinite(record[f"beta_hat_{name}"])
    assert record["beta_r_phi"] >= 0.1 * 300**-0.49 - 1e-8
    assert record == {**run_replication(design, 0), "elapsed": record["elapsed"], "rss_mb": record["rss_mb"]}


def test_probit_null_design_runs():
    design = create_design("probit-null", {"seed": 7, "T": 300, "replications": 20})
    result = run_design(design, workers=1, progress=False)
    assert result.summary.failures <= 1
    assert 0.0 <= result.summary.rejection_rate <= 1.0
    assert "beta2_zero" in result.summary.bindings
    assert result.summary.bindings["beta2_zero"].violation_pct == 0.0
    assert result.densities == {}
    assert result.summary.extra["resources"]["workers"] == 1


@pytest.mark.slow
def test_process_pool_matches_sequential():
    design = create_design("jpr1", {"seed": 9, "T": 200, "replications": 6, "estimate": False})
    sequential = run_replications(design, workers=1, progress=False)
    pooled = run_replications(design, workers=2, progress=False)
    columns = [c for c in sequential.columns if c.startswith("beta_")]
    pd.testing.assert_frame_equal(sequential[columns], pooled[columns])


@pytest.mark.slow
def test_score_test_size_under_null():
    design = create_design("probit-null", {"seed": 21, "replications": 300})
    summary = run_design(design, workers=None, progress=False).summary
    assert summary.valid
    assert 0.01 <= summary.rejection_rate <= 0.12


@pytest.mark.slow
def test_jpr1_design_reduced():
    overrides = {"seed": 8, "replications": 20, "H": 2,
                 "estimation": {"grid": {"points": 5, "sweeps": 2, "refinements": 1}}}
    result = run_design(create_design("jpr1", overrides), progress=False)
    assert result.summary.failures <= 2
    assert set(result.summary.params) == {"alpha", "delta", "sigma_v"}
    assert 0.0 <= result.summary.bindings["phi_floor"].binding_pct <= 100.0
