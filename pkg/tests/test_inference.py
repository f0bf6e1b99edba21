import numpy as np
import pytest
from numpy.testing import assert_allclose
from pydantic import ValidationError

from indii.core.auxiliary import ConstraintSpec, GaussianGarchCriterion, GaussianLocationCriterion
from indii.core.auxiliary import LinearGaussianModel, QuadraticCriterion, QuadraticData
from indii.core.constrained import maximize_constrained
from indii.core.errors import NoConvergence, ParameterError, RankDeficiency
from indii.core.inference import (
    VARIANTS,
    GridSpec,
    IIConfig,
    IndirectInference,
    SimulatedCriterion,
    asymptotic_variance,
    dL_dtheta,
    estimate_info_matrices,
    estimate_score_ii,
    estimate_wald_c,
    exponential_family_rank_check,
    gauss_seidel_grid,
    m_bar,
    m_cfs,
    moment_identity_residual,
    newey_west_bandwidth,
    normalize_variant,
    optimal_weighting,
)
from indii.core.simulation import SvModel, draw_innovation_bank
from indii.utils.linalg import psd_leq

LOADING = np.array([[1.0, 0.0], [0.5, 1.0]])
CURVATURE = np.array([[2.0, 0.3], [0.3, 1.0]])
OBSERVED = np.array([0.4, -0.2])


def random_pd(rng, d):
    a = rng.standard_normal((d, d))
    return a @ a.T + d * np.eye(d)


@pytest.fixture
def linear_problem(free_spec):
    """线性高斯结构模型 + 无约束二次准则：所有估计量都有相同的精确解"""
    model = LinearGaussianModel(LOADING, scale=0.5, T=100)
    criterion = QuadraticCriterion(free_spec, CURVATURE)
    data = QuadraticData(center=OBSERVED, T=100)
    return model, criterion, data


def exact_solution(config):
    bank = draw_innovation_bank(config.H, 100, 2, config.seed)
    noise = bank.paths[:, 1:, :].mean(axis=1).mean(axis=0)
    return np.linalg.solve(LOADING, OBSERVED - 0.5 * noise)


@pytest.mark.parametrize("variant", VARIANTS)
def test_linear_model_recovers_exact_root(linear_problem, variant):
    model, criterion, data = linear_problem
    config = IIConfig(H=4, seed=11, variant=variant, report_variance=False,
                      grid=GridSpec(points=11, sweeps=4, refinements=12))
    estimate = IndirectInference(model, criterion, config).estimate(data)
    assert estimate.variant == variant
    assert_allclose(estimate.theta_hat, exact_solution(config), atol=1e-3)
    assert estimate.objective < 1e-5
    assert not estimate.on_boundary


def test_moment_identity_and_cfs_equivalence(linear_problem):
    model, criterion, data = linear_problem
    engine = IndirectInference(model, criterion, IIConfig(H=3, seed=2))
    fit, func = engine.prepare(data)
    sim = engine.simulator(100)
    for theta in ([0.1, 0.2], [-1.0, 0.7], [2.0, -1.5]):
        assert moment_identity_residual(theta, fit, func, sim) < 1e-12
        # 无约束时 β̂ = β̂ᵣ 且观测得分为0，两种得分矩相同
        assert_allclose(m_bar(theta, fit, func, sim), m_cfs(theta, fit, sim), atol=1e-12)


def test_dL_dtheta_is_exact_for_linear_model(linear_problem):
    model, criterion, _ = linear_problem
    sim = SimulatedCriterion(model, criterion, draw_innovation_bank(2, 100, 2, 0))
    D = dL_dtheta([0.3, -0.4], sim, OBSERVED)
    assert_allclose(D, CURVATURE @ LOADING, rtol=1e-8)


def test_simulated_criterion_rejects_bank_shape(linear_problem):
    model, criterion, _ = linear_problem
    with pytest.raises(ParameterError):
        SimulatedCriterion(model, criterion, draw_innovation_bank(2, 100, 3, 0))


def test_optimal_weighting_attains_efficiency_bound():
    rng = np.random.default_rng(4)
    I0, J0 = random_pd(rng, 4), random_pd(rng, 4)
    D = rng.standard_normal((4, 2))
    W_star = optimal_weighting(I0, J0)
    assert_allclose(W_star, J0 @ np.linalg.solve(I0, J0), rtol=1e-10)

    optimal = asymptotic_variance(D, I0, J0, W_star, H=10)
    assert optimal.factor == pytest.approx(1.1)
    assert_allclose(optimal.omega, optimal.omega_star, rtol=1e-8, atol=1e-12)
    assert_allclose(optimal.omega_star, 1.1 * np.linalg.inv(D.T @ np.linalg.solve(I0, D)), rtol=1e-10)

    for _ in range(5):
        other = asymptotic_variance(D, I0, J0, random_pd(rng, 4), H=10)
        assert psd_leq(other.omega_star, other.omega)


def test_infinite_H_has_unit_factor():
    rng = np.random.default_rng(5)
    I0 = random_pd(rng, 3)
    result = asymptotic_variance(rng.standard_normal((3, 2)), I0, I0, np.eye(3), H=np.inf)
    assert result.factor == 1.0


def test_rank_deficient_binding_derivative():
    D = np.array([[1.0, 2.0], [0.5, 1.0], [2.0, 4.0]])
    with pytest.raises(RankDeficiency) as info:
        asymptotic_variance(D, np.eye(3), np.eye(3), np.eye(3), H=10)
    assert info.value.columns == [1]


def test_newey_west_bandwidth():
    assert newey_west_bandwidth(100) == 4
    assert newey_west_bandwidth(500) == 5


def test_info_matrices_for_location_criterion():
    rng = np.random.default_rng(6)
    y = 1.0 + rng.standard_normal(300)
    criterion = GaussianLocationCriterion(ConstraintSpec(name="free", param_names=("mu",)))
    fit = maximize_constrained(criterion, y)
    assert fit.beta_r[0] == pytest.approx(np.mean(y), abs=1e-10)
    info = estimate_info_matrices(y, fit, criterion, bandwidth=0)
    assert info.I_hat[0, 0] == pytest.approx(np.var(y), rel=1e-8)
    assert info.J_hat[0, 0] == pytest.approx(1.0)
    assert info.bandwidth == 0


def test_info_matrices_for_garch(sv_series):
    criterion = GaussianGarchCriterion()
    fit = maximize_constrained(criterion, sv_series)
    info = estimate_info_matrices(sv_series, fit, criterion)
    assert info.bandwidth == 5
    assert np.all(np.linalg.eigvalsh(info.I_hat) > 0)
    assert_allclose(info.I_hat, info.I_hat.T)


def test_exponential_family_rank_check():
    assert exponential_family_rank_check(np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])).full_rank
    assert not exponential_family_rank_check(np.array([[1.0, 2.0], [2.0, 4.0]])).full_rank


def test_grid_search_on_separable_quadratic():
    target = np.array([0.37, -1.21])

    def objective(theta):
        return float(np.sum((theta - target) ** 2))

    result = gauss_seidel_grid(objective, [[-2, 2], [-2, 2]], GridSpec(points=9, sweeps=2, refinements=15))
    assert_allclose(result.theta, target, atol=1e-4)
    assert not result.on_boundary
    assert result.evaluations > 0


def test_grid_search_reports_boundary_and_failure():
    result = gauss_seidel_grid(lambda t: float((t[0] - 5.0) ** 2), [[0.0, 1.0]], GridSpec(points=5))
    assert result.on_boundary
    assert result.theta[0] == pytest.approx(1.0)
    with pytest.raises(NoConvergence):
        gauss_seidel_grid(lambda t: np.inf, [[0.0, 1.0]], GridSpec(points=5))


def test_grid_points_are_made_odd():
    assert GridSpec(points=10).points == 11


def test_ii_config_validation():
    assert normalize_variant("wald-c") == "wald_c"
    assert IIConfig(variant="score-cfs").variant == "score_cfs"
    with pytest.raises(ValidationError):
        IIConfig(variant="wald_x")
    with pytest.raises(ValidationError):
        IIConfig(W=[[1.0, 2.0], [2.0, 1.0]])
    config = IIConfig(bounds={"alpha": (-1.0, 0.0)})
    assert_allclose(config.bounds_for(["alpha", "delta", "theta1_0"]), [[-1.0, 0.0], [0.0, 0.995], [-3.0, 3.0]])


@pytest.mark.slow
def test_sv_estimation_runs_end_to_end(sv_series):
    config = IIConfig(H=2, seed=3, grid=GridSpec(points=5, sweeps=1, refinements=1))
    estimate = IndirectInference(SvModel(), GaussianGarchCriterion(), config).estimate(sv_series)
    bounds = config.bounds_for(["alpha", "delta", "sigma_v"])
    assert np.all(estimate.theta_hat >= bounds[:, 0]) and np.all(estimate.theta_hat <= bounds[:, 1])
    assert np.isfinite(estimate.objective)
    assert estimate.to_dict()["theta_hat"].keys() == {"alpha", "delta", "sigma_v"}


def test_scan_objective_and_wrappers(linear_problem):
    model, criterion, data = linear_problem
    config = IIConfig(H=3, seed=5, report_variance=False, grid=GridSpec(points=11, sweeps=4, refinements=12))
    engine = IndirectInference(model, criterion, config)
    root = exact_solution(config)
    values = engine.scan_objective(data, [root, root + 0.5, root - 0.5])
    assert values[0] < 1e-12
    assert values[1] > 0 and values[2] > 0

    estimate = estimate_wald_c(config, data, criterion, model)
    assert estimate.variant == "wald_c"
    assert_allclose(estimate.theta_hat, root, atol=1e-3)
    assert estimate_score_ii(config.model_copy(update={"variant": "wald_cfs"}), data, criterion,
                             model).variant == "score_ours"
