"""
测试公共夹具

SV数据固定种子生成；有限差分辅助函数用于检验解析得分与Hessian。
"""
import numpy as np
import pytest

from indii.core.auxiliary.constraints import ConstraintSpec
from indii.core.simulation import (
    ProbitData,
    ProbitParams,
    SvParams,
    default_covariates,
    draw_path,
    simulate_probit,
    simulate_sv,
)

JPR1 = (-0.736, 0.90, 0.363)
JPR2 = (-0.141, 0.98, 0.0614)


def numerical_gradient(func, x, step=1e-6):
    """中心差分梯度，步长 step·max(1, |x_i|)"""
    x = np.asarray(x, dtype=float)
    columns = []
    for i in range(x.size):
        h = step * max(1.0, abs(x[i]))
        up, down = x.copy(), x.copy()
        up[i] += h
        down[i] -= h
        columns.append((np.asarray(func(up)) - np.asarray(func(down))) / (2.0 * h))
    return np.stack(columns, axis=-1)


@pytest.fixture(scope="session")
def sv_series():
    """jpr1 参数下 T=500 的SV序列"""
    return simulate_sv(SvParams.from_array(JPR1), draw_path(500, 2, 11, 0))


@pytest.fixture(scope="session")
def scaled_series(sv_series):
    """单位方差的SV序列，用于数值导数检验"""
    return sv_series / np.std(sv_series)


@pytest.fixture(scope="session")
def probit_sample():
    """θ = (0, 1, 0) 下 T=500 的动态probit数据"""
    x = default_covariates(500, 5)
    y = simulate_probit(ProbitParams(theta1=[0.0, 1.0], theta2=0.0), x, draw_path(500, 1, 5, 0))
    return ProbitData(y=y, x=x)


@pytest.fixture
def free_spec():
    """无约束的二维规格"""
    return ConstraintSpec(name="free", param_names=("b0", "b1"))
