import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal
from pydantic import ValidationError

from indii.core.errors import ParameterError
from indii.core.simulation import (
    ProbitModel,
    ProbitParams,
    SvModel,
    SvParams,
    coefficient_of_variation,
    create_structural_model,
    default_covariates,
    derive_seed,
    draw_innovation_bank,
    draw_path,
    simulate_probit,
    simulate_sv,
)
from tests.conftest import JPR1, JPR2


@pytest.mark.parametrize("values", [(-0.7, 1.0, 0.3), (-0.7, -1.2, 0.3), (-0.7, 0.9, 0.0), (-0.7, 0.9, -0.1)])
def test_sv_params_reject_inadmissible(values):
    with pytest.raises(ValidationError):
        SvParams.from_array(values)


def test_probit_params_reject_unit_root():
    with pytest.raises(ValidationError):
        ProbitParams(theta1=[0.0, 1.0], theta2=1.0)


def test_sv_recursion_matches_loop():
    params = SvParams.from_array(JPR1)
    path = draw_path(200, 2, 3, 0)
    y, log_h = simulate_sv(params, path, return_latent=True)

    alpha, delta, sigma_v = JPR1
    expected = np.empty(200)
    previous = alpha / (1 - delta) + sigma_v / np.sqrt(1 - delta**2) * path[0, 1]
    for t in range(200):
        previous = alpha + delta * previous + sigma_v * path[t + 1, 1]
        expected[t] = previous
    assert_allclose(log_h, expected, rtol=1e-12, atol=1e-12)
    assert_allclose(y, np.exp(0.5 * expected) * path[1:, 0], rtol=1e-12)


def test_sv_wrong_shape():
    with pytest.raises(ParameterError):
        simulate_sv(SvParams.from_array(JPR1), np.zeros((10, 3)))


def test_sv_common_random_numbers():
    path = draw_path(100, 2, 9, 0)
    first = simulate_sv(SvParams.from_array(JPR2), path)
    second = simulate_sv(SvParams.from_array(JPR2), path)
    assert_array_equal(first, second)


def test_probit_latent_recursion():
    x = default_covariates(300, 1)
    path = draw_path(300, 1, 2, 0)
    params = ProbitParams(theta1=[0.2, 1.0], theta2=0.5)
    y, latent = simulate_probit(params, x, path, return_latent=True)

    u = path[0, 0] / np.sqrt(1 - 0.25)
    expected = np.empty(300)
    for t in range(300):
        u = 0.5 * u + path[t + 1, 0]
        expected[t] = x[t] @ np.array([0.2, 1.0]) + u
    assert_allclose(latent, expected, rtol=1e-12, atol=1e-12)
    assert set(np.unique(y)) <= {0.0, 1.0}
    assert_array_equal(y, (expected > 0).astype(float))


def test_probit_dimension_mismatch():
    x = default_covariates(50, 1)
    with pytest.raises(ParameterError):
        simulate_probit(ProbitParams(theta1=[0.0, 1.0, 2.0], theta2=0.0), x, draw_path(50, 1, 2, 0))
    with pytest.raises(ParameterError):
        simulate_probit(ProbitParams(theta1=[0.0, 1.0], theta2=0.0), x, draw_path(60, 1, 2, 0))


def test_innovation_bank_is_read_only_and_prefix_stable():
    small = draw_innovation_bank(3, 50, 2, 123)
    large = draw_innovation_bank(5, 50, 2, 123)
    assert small.paths.shape == (3, 51, 2)
    assert_array_equal(small.path(1), large.path(1))
    assert_array_equal(large.head(3).paths, small.paths)
    with pytest.raises(ValueError):
        small.paths[0, 0, 0] = 1.0
    with pytest.raises(ParameterError):
        small.head(4)


def test_innovation_bank_rejects_bad_sizes():
    with pytest.raises(ParameterError):
        draw_innovation_bank(0, 10, 1, 1)


def test_derive_seed_depends_on_keys_only():
    assert derive_seed(7, 1, 0) == derive_seed(7, 1, 0)
    assert derive_seed(7, 1, 0) != derive_seed(7, 1, 1)
    assert derive_seed(7, 1, 0) != derive_seed(8, 1, 0)


def test_coefficient_of_variation_jpr1():
    # jpr1 的参数使 κ² 约为1
    assert coefficient_of_variation(SvParams.from_array(JPR1)) == pytest.approx(1.0, abs=0.01)
    assert coefficient_of_variation((0.0, 0.5, 0.0)) == 0.0
    with pytest.raises(ParameterError):
        coefficient_of_variation((0.0, 1.0, 0.3))


def test_structural_models():
    sv = create_structural_model("sv")
    assert isinstance(sv, SvModel)
    assert sv.param_names() == ["alpha", "delta", "sigma_v"]
    with pytest.raises(ParameterError):
        sv.make_params([0.0, 1.5, 0.2])

    probit = create_structural_model("probit", T=40, covariate_seed=3)
    assert isinstance(probit, ProbitModel)
    assert probit.param_names() == ["theta1_0", "theta1_1", "theta2"]
    data = probit.simulate([0.0, 1.0, 0.3], draw_path(40, 1, 4, 0))
    assert data.y.shape == (40,)
    assert_array_equal(data.x, default_covariates(40, 3))

    with pytest.raises(ParameterError):
        create_structural_model("probit")
    with pytest.raises(ParameterError):
        create_structural_model("arma")
