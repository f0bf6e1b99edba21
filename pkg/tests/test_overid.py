import numpy as np
import pytest
from numpy.testing import assert_allclose

from indii.core.errors import InadmissibleC, NonIdentification, SingularAGamma, UsageError
from indii.core.montecarlo import create_design, run_design
from indii.core.overid import (
    PowerMomentGmmSystem,
    avar_beta,
    binding_slope,
    conflict_instance,
    create_moment_system,
    default_C,
    ii_avar_theta,
    naive_optimal_A,
    optimal_A_for_theta,
    random_selection,
    selection_report,
    solve_selected,
    standard_selections,
    wald_ii_overid,
)
from indii.utils.linalg import psd_leq


@pytest.fixture
def linear_system():
    return create_moment_system("linear")


def efficiency_bound(system):
    return np.linalg.inv(system.Gamma_theta.T @ np.linalg.solve(system.V, system.Gamma_theta))


def test_linear_system_is_consistent(linear_system):
    assert (linear_system.q, linear_system.d_beta, linear_system.d_theta) == (3, 2, 1)
    assert_allclose(linear_system.g(linear_system.beta0, linear_system.sigma(linear_system.theta0)), 0.0)


def test_optimal_selection_attains_bound(linear_system):
    s = linear_system
    selections = standard_selections(s)
    optimal = ii_avar_theta(selections["optimal"], s.Gamma_theta, s.V)
    assert_allclose(optimal, efficiency_bound(s), rtol=1e-10)

    naive = ii_avar_theta(selections["naive"], s.Gamma_theta, s.V)
    assert psd_leq(optimal, naive)
    assert naive[0, 0] > optimal[0, 0]

    rng = np.random.default_rng(0)
    for _ in range(20):
        A = random_selection(s.d_beta, s.q, rng)
        try:
            other = ii_avar_theta(A, s.Gamma_theta, s.V)
        except NonIdentification:
            continue
        assert psd_leq(optimal, other)


def test_projection_form_matches_direct_form(linear_system):
    s = linear_system
    rng = np.random.default_rng(1)
    for A in [naive_optimal_A(s.Gamma, s.V), random_selection(2, 3, rng), random_selection(2, 3, rng)]:
        assert_allclose(ii_avar_theta(A, s.Gamma_theta, s.V, form="projection"),
                        ii_avar_theta(A, s.Gamma_theta, s.V, form="direct"), rtol=1e-8)


def test_naive_selection_minimizes_beta_variance(linear_system):
    s = linear_system
    naive = naive_optimal_A(s.Gamma, s.V)
    expected = np.linalg.inv(s.Gamma.T @ np.linalg.solve(s.V, s.Gamma))
    assert_allclose(avar_beta(naive, s.Gamma, s.V), expected, rtol=1e-10)


def test_binding_slope_is_exact_for_linear_system(linear_system):
    s = linear_system
    A = naive_optimal_A(s.Gamma, s.V)
    slope = binding_slope(A, s.Gamma, s.Gamma_theta)
    shifted = solve_selected(A, s, s.sigma(s.theta0 + 0.3))
    assert_allclose(shifted - s.beta0, 0.3 * slope[:, 0], atol=1e-10)


def test_conflict_instance():
    s = conflict_instance()
    selections = standard_selections(s)
    report = selection_report(s, selections)

    # 朴素选择矩阵与 Γ_θ 正交
    assert report["naive"]["avar_theta"] is None
    assert report["naive"]["avar_beta"] is not None
    assert_allclose(report["optimal"]["avar_theta"], [[1.0]])
    assert report["optimal"]["avar_beta"] is None

    with pytest.raises(NonIdentification):
        ii_avar_theta(selections["naive"], s.Gamma_theta, s.V)
    with pytest.raises(SingularAGamma):
        solve_selected(selections["optimal"], s, s.sigma(s.theta0) + np.array([0.1, 0.2, 0.3]))


def test_inadmissible_C(linear_system):
    s = linear_system
    with pytest.raises(InadmissibleC):
        optimal_A_for_theta(s.Gamma_theta, s.V, C=np.linalg.solve(s.V, s.Gamma_theta))
    C = default_C(s.Gamma_theta, s.V, s.Gamma)
    assert C.shape == (3, 1)


def test_closed_form_and_grid_agree(linear_system):
    s = linear_system
    sigma_hat = s.simulate_sigma(s.theta0, 500, np.random.default_rng(2))
    for A in standard_selections(s).values():
        closed = wald_ii_overid(A, s, sigma_hat, method="closed_form")
        grid = wald_ii_overid(A, s, sigma_hat, method="grid")
        assert_allclose(grid.theta_hat, closed.theta_hat, atol=1e-6)
        assert closed.objective >= 0.0


def test_gmm_system():
    s = create_moment_system("gmm", {"theta0": 1.0})
    assert isinstance(s, PowerMomentGmmSystem)
    assert s.kind == "GMM"
    assert_allclose(s.sigma(s.theta0), [1.0, 2.0, 4.0 + 2.0 * np.sqrt(2.0)])
    A = naive_optimal_A(s.Gamma, s.V)
    beta = solve_selected(A, s, s.sigma(s.theta0), start=np.array([1.05, 1.1]))
    assert_allclose(beta, s.beta0, atol=1e-8)
    assert np.all(np.linalg.eigvalsh(s.V) > 0)


def test_unknown_system():
    with pytest.raises(UsageError):
        create_moment_system("cubic")


def test_monte_carlo_variance_matches_asymptotic(linear_system):
    design = create_design("overid", {"replications": 400, "T": 500, "seed": 3})
    result = run_design(design, workers=1, progress=False)
    assert result.summary.failures == 0
    table = result.extra_tables["overid_variance"].set_index("selection")
    for name in ("naive", "optimal"):
        assert table.loc[name, "mc_variance"] == pytest.approx(table.loc[name, "avar"], rel=0.35)
    assert table.loc["optimal", "avar"] == pytest.approx(efficiency_bound(linear_system)[0, 0])
