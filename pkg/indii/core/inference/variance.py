"""
渐近方差与最优加权

  W* = J⁰(I⁰)⁻¹J⁰
  Ω  = A⁻¹BA⁻¹，A = D'J⁻¹WJ⁻¹D，B = D'J⁻¹WJ⁻¹ I J⁻¹WJ⁻¹D
  Ω* = (D'I⁻¹D)⁻¹
两者都乘以 (1 + 1/H)。D = ∂L/∂θ' 由模拟得分对θ的中心差分估计。
Î 为逐观测得分的Newey–West长期方差，Ĵ = -H(β̂ᵣ)。
"""
import logging
from dataclasses import dataclass
from typing import Any, Optional, Sequence

import numpy as np
from statsmodels.stats.sandwich_covariance import S_hac_simple

from indii.core.auxiliary.base import Criterion
from indii.core.constrained.optimizer import ConstrainedFit
from indii.core.errors import ParameterError
from indii.core.inference.simulated import SimulatedCriterion
from indii.utils.linalg import check_full_column_rank, require_positive_definite, symmetrize

# 配置日志
logger = logging.getLogger(__name__)

EIGEN_FLOOR = 1e-10
FD_STEP = 1e-3


@dataclass
class InfoMatrices:
    I_hat: np.ndarray
    J_hat: np.ndarray
    bandwidth: int
    clipped: bool = False


@dataclass
class AsymptoticVariance:
    omega: np.ndarray
    omega_star: np.ndarray
    factor: float


@dataclass
class RankCheck:
    full_rank: bool
    singular_values: np.ndarray


def newey_west_bandwidth(T: int) -> int:
    """⌊4(T/100)^{2/9}⌋"""
    return int(np.floor(4.0 * (T / 100.0) ** (2.0 / 9.0)))


def optimal_weighting(I0: np.ndarray, J0: np.ndarray) -> np.ndarray:
    """
    最优加权矩阵 W* = J⁰(I⁰)⁻¹J⁰

    Raises:
        ParameterError: 输入不是对称正定矩阵
    """
    I0 = require_positive_definite(I0, "I⁰")
    J0 = require_positive_definite(J0, "J⁰")
    return symmetrize(J0 @ np.linalg.solve(I0, J0))


def asymptotic_variance(dL_dtheta: np.ndarray, I0: np.ndarray, J0: np.ndarray, W: np.ndarray, H: float) -> AsymptoticVariance:
    """
    间接推断估计的渐近方差

    Args:
        dL_dtheta: ∂L/∂θ'，形状 (d_β, d_θ)
        I0, J0: 信息矩阵
        W: 加权矩阵
        H: 模拟路径数（可取 np.inf）

    Returns:
        AsymptoticVariance，omega 与 omega_star 都已乘以 (1 + 1/H)

    Raises:
        RankDeficiency: ∂L/∂θ' 列秩不足，异常中指出秩亏的列
    """
    D = np.atleast_2d(np.asarray(dL_dtheta, dtype=float))
    check_full_column_rank(D, "∂L/∂θ'")
    I0 = require_positive_definite(I0, "I⁰")
    J0 = symmetrize(J0)
    W = require_positive_definite(W, "W")
    if H <= 0:
        raise ParameterError(f"H 必须为正，当前为 {H}")
    factor = 1.0 + 1.0 / H

    J_inv_D = np.linalg.solve(J0, D)
    A = J_inv_D.T @ W @ J_inv_D
    B = J_inv_D.T @ W @ np.linalg.solve(J0, I0) @ np.linalg.solve(J0, W) @ J_inv_D
    A_inv = np.linalg.inv(A)
    omega = symmetrize(A_inv @ B @ A_inv)
    omega_star = symmetrize(np.linalg.inv(D.T @ np.linalg.solve(I0, D)))
    return AsymptoticVariance(omega=factor * omega, omega_star=factor * omega_star, factor=factor)


def estimate_info_matrices(data: Any, fit: ConstrainedFit, criterion: Criterion, bandwidth: Optional[int] = None) -> InfoMatrices:
    """
    估计 Î（Newey–West长期方差，未中心化）与 Ĵ = -H(β̂ᵣ)

    Args:
        data: 观测数据
        fit: 约束估计
        criterion: 产生逐观测得分的准则
        bandwidth: 滞后阶数，缺省为 ⌊4(T/100)^{2/9}⌋；为0时退化为得分外积
    """
    scores = np.asarray(criterion.contributions(fit.beta_r, data), dtype=float)
    T = scores.shape[0]
    bandwidth = newey_west_bandwidth(T) if bandwidth is None else int(bandwidth)
    I_hat = symmetrize(S_hac_simple(scores, nlags=bandwidth) / T)
    J_hat = symmetrize(-fit.eval.hessian)

    values, vectors = np.linalg.eigh(I_hat)
    clipped = bool(values.min() < EIGEN_FLOOR)
    if clipped:
        logger.warning(f"Î 的最小特征值 {values.min():.3e} 低于 {EIGEN_FLOOR:.0e}，已截断")
        I_hat = symmetrize((vectors * np.maximum(values, EIGEN_FLOOR)) @ vectors.T)
    return InfoMatrices(I_hat=I_hat, J_hat=J_hat, bandwidth=bandwidth, clipped=clipped)


def dL_dtheta(theta: Sequence[float], sim: SimulatedCriterion, beta: np.ndarray, step: float = FD_STEP) -> np.ndarray:
    """
    模拟得分均值对θ的中心差分，步长 step·(1 + |θ_i|)

    Returns:
        形状 (d_β, d_θ) 的矩阵
    """
    theta = np.asarray(theta, dtype=float)
    columns = []
    for i in range(theta.size):
        h = step * (1.0 + abs(theta[i]))
        up, down = theta.copy(), theta.copy()
        up[i] += h
        down[i] -= h
        columns.append((sim.evaluate(up, beta).score - sim.evaluate(down, beta).score) / (2.0 * h))
    return np.column_stack(columns)


def exponential_family_rank_check(dA_dtheta: np.ndarray, rel_tol: float = 1e-10) -> RankCheck:
    """
    检查指数族自然参数映射的导数 ∂A/∂θ' 是否列满秩

    奇异值判据：所有奇异值 > rel_tol·σ_max，且个数等于列数。
    """
    matrix = np.atleast_2d(np.asarray(dA_dtheta, dtype=float))
    singular = np.linalg.svd(matrix, compute_uv=False)
    full = bool(singular.size == matrix.shape[1] and singular.size > 0 and singular[0] > 0
                and singular[-1] > rel_tol * singular[0])
    return RankCheck(full_rank=full, singular_values=singular)
