import numpy as np
import pytest
from numpy.testing import assert_allclose

from indii.core.auxiliary import GaussianGarchCriterion, QuadraticCriterion, QuadraticData, load_constraint_spec
from indii.core.constrained import (
    ConstrainedMaximizer,
    OptimizerOptions,
    func_estimator,
    maximize_constrained,
    negative_definite,
    projection_decomposition,
    recover_multipliers,
    regularized_hessian,
    score_test,
    solve_qp,
)
from indii.core.errors import ParameterError, SingularHessian


def quadratic_problem(document, center, T=100, curvature=None):
    spec = load_constraint_spec(document, ["b0", "b1"])
    criterion = QuadraticCriterion(spec, curvature)
    return criterion, QuadraticData(center=np.asarray(center, dtype=float), T=T)


def inequality(name, coefficients, c=0.0, kappa=0.0, offset=0.0):
    return {"name": name, "coefficients": coefficients, "offset": offset, "bound": {"c": c, "kappa": kappa}}


def test_qp_inequality_oracle():
    # min ½|p|² - 2p₁ - 2p₂  s.t.  p₁ + p₂ ≤ 1
    result = solve_qp(np.eye(2), np.array([-2.0, -2.0]), np.array([[-1.0, -1.0]]), np.array([-1.0]),
                      np.array([False]))
    assert_allclose(result.p, [0.5, 0.5], atol=1e-12)
    assert_allclose(result.multipliers, [1.5], atol=1e-12)


def test_qp_equality_and_inactive_constraint():
    G = np.array([[1.0, 0.0], [0.0, 1.0]])
    result = solve_qp(np.eye(2), np.zeros(2), G, np.array([1.0, -5.0]), np.array([True, False]))
    assert_allclose(result.p, [1.0, 0.0], atol=1e-12)
    assert_allclose(result.multipliers, [1.0, 0.0], atol=1e-12)


def test_binding_inequality_is_exact():
    criterion, data = quadratic_problem({"constraints": [inequality("floor", {"b0": 1.0})]}, [-1.0, 2.0])
    fit = maximize_constrained(criterion, data)
    assert_allclose(fit.beta_r, [0.0, 2.0], atol=1e-10)
    assert_allclose(fit.lam, [1.0], atol=1e-8)
    assert fit.binding_names == ["floor"]
    assert fit.converged

    func = func_estimator(fit)
    assert_allclose(func.beta_hat, [-1.0, 2.0], atol=1e-10)
    assert func.ridge == 0.0
    assert_allclose(func.hessian @ (func.beta_hat - fit.beta_r) + fit.eval.score, 0.0, atol=1e-12)


def test_drifting_bound_binds_at_its_level():
    document = {"constraints": [inequality("floor", {"b0": 1.0}, c=0.1, kappa=0.49)]}
    criterion, data = quadratic_problem(document, [-1.0, 2.0], T=400)
    fit = maximize_constrained(criterion, data)
    assert fit.beta_r[0] == pytest.approx(0.1 * 400 ** -0.49, abs=1e-10)
    assert fit.lam[0] > 0


def test_slack_constraint_has_zero_multiplier():
    criterion, data = quadratic_problem({"constraints": [inequality("floor", {"b0": 1.0})]}, [1.0, 2.0])
    fit = maximize_constrained(criterion, data)
    assert_allclose(fit.beta_r, [1.0, 2.0], atol=1e-10)
    assert fit.binding == ()
    assert_allclose(fit.lam, [0.0])


def test_equality_multiplier_can_be_negative():
    document = {"constraints": [{"name": "zero", "kind": "equality", "coefficients": {"b0": 1.0}}]}
    criterion, data = quadratic_problem(document, [1.0, 2.0])
    fit = maximize_constrained(criterion, data)
    assert_allclose(fit.beta_r, [0.0, 2.0], atol=1e-10)
    assert fit.lam[0] == pytest.approx(-1.0, abs=1e-8)

    result = score_test(fit, func_estimator(fit))
    assert result.df == 1
    assert result.xi == pytest.approx(100.0, rel=1e-8)
    assert result.reject(0.05)


def test_infeasible_start_uses_phase_one():
    criterion, data = quadratic_problem({"constraints": [inequality("floor", {"b0": 1.0}, offset=-1.0)]}, [-1.0, 2.0])
    fit = maximize_constrained(criterion, data)
    assert_allclose(fit.beta_r, [1.0, 2.0], atol=1e-9)
    assert fit.lam[0] == pytest.approx(2.0, abs=1e-8)


def test_score_test_requires_equalities():
    criterion, data = quadratic_problem({"constraints": [inequality("floor", {"b0": 1.0})]}, [-1.0, 2.0])
    fit = maximize_constrained(criterion, data)
    with pytest.raises(ParameterError):
        score_test(fit, func_estimator(fit))


def test_projection_decomposition_is_exact_for_quadratic():
    curvature = np.array([[2.0, 0.5], [0.5, 1.0]])
    document = {"constraints": [inequality("floor", {"b0": 1.0, "b1": 1.0}, c=0.2, kappa=0.25)]}
    criterion, data = quadratic_problem(document, [-1.0, -0.5], T=256, curvature=curvature)
    fit = maximize_constrained(criterion, data)
    assert fit.binding_names == ["floor"]
    diagnostic = projection_decomposition(fit, func_estimator(fit), np.array([0.3, -0.1]))
    assert diagnostic.residual_norm < 1e-8
    assert diagnostic.projected_residual < 1e-8
    assert_allclose(diagnostic.P_X + diagnostic.M_X, np.eye(2), atol=1e-12)
    assert not diagnostic.j_non_psd


def test_regularized_hessian():
    hessian, ridge = regularized_hessian(np.diag([-1.0, -1e-14]))
    assert ridge == pytest.approx(1e-8)
    assert np.linalg.cond(hessian) < 1e12
    unchanged, ridge = regularized_hessian(-np.eye(2))
    assert ridge == 0.0
    assert_allclose(unchanged, -np.eye(2))
    with pytest.raises(SingularHessian):
        regularized_hessian(np.diag([-1e10, 0.0]))


def test_negative_definite_truncation():
    matrix = negative_definite(np.array([[1.0, 0.0], [0.0, -2.0]]))
    assert np.all(np.linalg.eigvalsh(matrix) < 0)
    assert_allclose(np.linalg.eigvalsh(matrix)[0], -2.0)


def test_recover_multipliers_drops_wrong_sign():
    # 两个积极约束，第二个的乘子为负，应被移出积极集
    G = np.array([[1.0, 0.0], [0.0, 1.0]])
    lam, binding = recover_multipliers(np.array([-1.0, 1.0]), np.zeros(2), G, np.array([False, False]))
    assert binding == (0,)
    assert_allclose(lam, [1.0, 0.0])


def test_garch_fit_on_sv_data(sv_series):
    criterion = GaussianGarchCriterion()
    fit = ConstrainedMaximizer(OptimizerOptions()).maximize(criterion, sv_series)
    spec = criterion.spec
    assert fit.stationarity < 1e-5
    assert spec.is_feasible(fit.beta_r, fit.T, tol=1e-9)
    inequality_lam = fit.lam[~spec.equality_mask]
    assert np.all(inequality_lam >= 0)
    non_binding = [j for j in range(spec.q) if j not in fit.binding]
    assert_allclose(fit.lam[non_binding], 0.0)
    assert fit.q_value >= fit.start_value

    func = func_estimator(fit)
    assert_allclose(func.beta_hat, fit.beta_r - np.linalg.solve(func.hessian, fit.eval.score), rtol=1e-10)
