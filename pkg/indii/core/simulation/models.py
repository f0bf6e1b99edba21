"""
结构模型模拟

对数正态随机波动率（SV）模型与动态probit模型。给定冻结的新息路径，
模拟结果是参数的纯函数（共同随机数），对θ连续。
线性递推统一用 scipy.signal.lfilter 计算。
"""
import logging
from abc import ABC, abstractmethod
from typing import List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import ValidationError
from scipy.signal import lfilter

from indii.core.errors import ParameterError, SimulationError
from indii.core.simulation.innovations import default_covariates
from indii.core.simulation.params import ProbitParams, SvParams

# 配置日志
logger = logging.getLogger(__name__)


class ProbitData(NamedTuple):
    """二元序列y（0/1）及其协变量x（T × d）"""

    y: np.ndarray
    x: np.ndarray


def _ar1(innovations: np.ndarray, rho: float, intercept: float, start: float) -> np.ndarray:
    """x_t = intercept + ρ x_{t-1} + innovations_t，x_0 = start"""
    return lfilter([1.0], [1.0, -rho], intercept + innovations, zi=[rho * start])[0]


def simulate_sv(
    params: SvParams, bank_path: np.ndarray, return_latent: bool = False
) -> Union[np.ndarray, Tuple[np.ndarray, np.ndarray]]:
    """
    模拟SV模型 y_t = exp(ln h_t / 2)·e_t

    Args:
        params: SV参数
        bank_path: 新息路径 (T+1, 2)，列为 (e_t, v_t)；第0行的v用于从平稳分布抽取 ln h_0
        return_latent: 为True时同时返回 ln h_t 路径

    Returns:
        y（长度T），或 (y, ln h)
    """
    path = np.asarray(bank_path, dtype=float)
    if path.ndim != 2 or path.shape[1] != 2 or path.shape[0] < 2:
        raise ParameterError(f"SV新息路径形状必须为 (T+1, 2)，当前为 {path.shape}")

    alpha, delta, sigma_v = params.alpha, params.delta, params.sigma_v
    log_h0 = alpha / (1.0 - delta) + sigma_v / np.sqrt(1.0 - delta**2) * path[0, 1]
    with np.errstate(over="ignore", invalid="ignore"):
        log_h = _ar1(sigma_v * path[1:, 1], delta, alpha, log_h0)
        y = np.exp(0.5 * log_h) * path[1:, 0]

    if not (np.all(np.isfinite(y)) and np.all(np.isfinite(log_h))):
        raise SimulationError("SV模拟产生非有限值", context={"theta": params.as_array()})
    if return_latent:
        return y, log_h
    return y


def simulate_probit(
    params: ProbitParams, covariates: np.ndarray, bank_path: np.ndarray, return_latent: bool = False
) -> Union[np.ndarray, Tuple[np.ndarray, np.ndarray]]:
    """
    模拟动态probit y_t = 1[x_t'θ₁ + u_t > 0]，u_t = θ₂u_{t-1} + ν_t

    u_0 取自平稳分布 N(0, 1/(1-θ₂²))，使用新息路径第0行。

    Returns:
        0/1序列，或 (y, 潜变量 y*)
    """
    x = np.atleast_2d(np.asarray(covariates, dtype=float))
    path = np.asarray(bank_path, dtype=float).reshape(len(bank_path), -1)
    theta1 = np.asarray(params.theta1, dtype=float)
    if x.shape[1] != theta1.size:
        raise ParameterError(f"协变量列数 {x.shape[1]} 与 θ₁ 维数 {theta1.size} 不一致")
    if path.shape[0] != x.shape[0] + 1:
        raise ParameterError(f"新息路径长度 {path.shape[0]} 应为协变量行数+1 ({x.shape[0] + 1})")

    rho = params.theta2
    u0 = path[0, 0] / np.sqrt(1.0 - rho**2)
    u = _ar1(path[1:, 0], rho, 0.0, u0)
    latent = x @ theta1 + u
    y = (latent > 0.0).astype(float)
    if return_latent:
        return y, latent
    return y


def coefficient_of_variation(params: Union[SvParams, Sequence[float]]) -> float:
    """
    波动率的无条件变异系数平方 κ² = exp(σ_v²/(1-δ²)) - 1

    也接受原始序列 (α, δ, σ_v)，允许 σ_v = 0。
    """
    if isinstance(params, SvParams):
        delta, sigma_v = params.delta, params.sigma_v
    else:
        _, delta, sigma_v = (float(v) for v in params)
        if not abs(delta) < 1.0:
            raise ParameterError(f"|delta| 必须小于1，当前为 {delta}")
    return float(np.expm1(sigma_v**2 / (1.0 - delta**2)))


class StructuralModel(ABC):
    """
    结构模型抽象基类

    把参数向量θ与一条新息路径映射为模拟数据，供间接推断使用。
    """

    name: str = ""
    innovation_columns: int = 1

    @abstractmethod
    def param_names(self) -> List[str]:
        pass

    @abstractmethod
    def make_params(self, theta: Sequence[float]):
        """构造并校验参数对象，不可容许时抛出ParameterError"""
        pass

    @abstractmethod
    def simulate(self, theta: Sequence[float], bank_path: np.ndarray):
        pass

    @property
    def d_theta(self) -> int:
        return len(self.param_names())

    def _validated(self, factory, theta: Sequence[float]):
        try:
            return factory(theta)
        except ValidationError as e:
            raise ParameterError(f"结构参数不可容许: {e.errors()[0].get('msg')}", context={"theta": np.asarray(theta)}) from e


class SvModel(StructuralModel):
    """对数正态SV模型"""

    name = "sv"
    innovation_columns = 2

    def param_names(self) -> List[str]:
        return SvParams.names()

    def make_params(self, theta: Sequence[float]) -> SvParams:
        return self._validated(SvParams.from_array, theta)

    def simulate(self, theta: Sequence[float], bank_path: np.ndarray) -> np.ndarray:
        return simulate_sv(self.make_params(theta), bank_path)


class ProbitModel(StructuralModel):
    """动态probit模型，协变量固定"""

    name = "probit"
    innovation_columns = 1

    def __init__(self, covariates: np.ndarray):
        self.covariates = np.atleast_2d(np.asarray(covariates, dtype=float))

    def param_names(self) -> List[str]:
        return [f"theta1_{i}" for i in range(self.covariates.shape[1])] + ["theta2"]

    def make_params(self, theta: Sequence[float]) -> ProbitParams:
        theta = np.asarray(theta, dtype=float)
        if theta.size != self.covariates.shape[1] + 1:
            raise ParameterError(f"probit参数维数应为 {self.covariates.shape[1] + 1}，当前为 {theta.size}")
        return self._validated(ProbitParams.from_array, theta)

    def simulate(self, theta: Sequence[float], bank_path: np.ndarray) -> ProbitData:
        y = simulate_probit(self.make_params(theta), self.covariates, bank_path)
        return ProbitData(y=y, x=self.covariates)


def create_structural_model(name: str, T: Optional[int] = None, covariates: Optional[np.ndarray] = None,
                            covariate_seed: Optional[int] = None) -> StructuralModel:
    """
    根据名称创建结构模型

    Args:
        name: "sv" 或 "probit"
        T: probit默认协变量的长度
        covariates: probit协变量；缺省时用 default_covariates(T, covariate_seed)
        covariate_seed: 默认协变量的种子
    """
    if name == "sv":
        return SvModel()
    if name == "probit":
        if covariates is None:
            if T is None or covariate_seed is None:
                raise ParameterError("probit模型需要协变量，或者同时给出 T 与 covariate_seed")
            covariates = default_covariates(T, covariate_seed)
        return ProbitModel(covariates)
    raise ParameterError(f"未知的结构模型: {name}")
