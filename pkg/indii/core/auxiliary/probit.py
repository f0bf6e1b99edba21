"""
β₂ = 0 约束下的动态probit似然

在 β₂ = 0 处，完整的动态probit似然退化为静态probit；得分与Hessian由广义残差
ũ_t = φ(m_t)/[Φ(m_t)(1-Φ(m_t))]·(y_t - Φ(m_t))，m_t = x_t'β₁ 给出。
Φ在对数域中计算，|m_t| 截断在37。
"""
import logging
from typing import Tuple

import numpy as np
from scipy.special import log_ndtr

from indii.core.auxiliary.base import Criterion, CriterionEval
from indii.core.auxiliary.constraints import ConstraintSpec, probit_constraints
from indii.core.errors import DomainError, ParameterError
from indii.core.simulation.models import ProbitData

# 配置日志
logger = logging.getLogger(__name__)

INDEX_CAP = 37.0
BETA2_TOL = 1e-8
LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)

HESSIAN_RULES = ("exact", "displayed")


def _split(beta: np.ndarray, x: np.ndarray) -> np.ndarray:
    beta = np.asarray(beta, dtype=float).reshape(-1)
    if beta.size != x.shape[1] + 1:
        raise ParameterError(f"probit参数维数应为 {x.shape[1] + 1}，当前为 {beta.size}")
    if abs(beta[-1]) > BETA2_TOL:
        raise DomainError("约束probit似然只能在 β₂ = 0 处求值", context={"beta2": beta[-1]})
    return beta[:-1]


def generalized_residuals(m: np.ndarray, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    广义残差及对数似然项

    Returns:
        (ũ, dũ/dm, 逐期对数似然)
    """
    m = np.clip(m, -INDEX_CAP, INDEX_CAP)
    log_cdf = log_ndtr(m)
    log_sf = log_ndtr(-m)
    log_pdf = -0.5 * m * m - LOG_SQRT_2PI
    u = np.where(y > 0.5, np.exp(log_pdf - log_cdf), -np.exp(log_pdf - log_sf))
    du = -u * (m + u)
    loglik = np.where(y > 0.5, log_cdf, log_sf)
    return u, du, loglik


def _prepare(y: np.ndarray, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    y = np.asarray(y, dtype=float).reshape(-1)
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[0] != y.size:
        raise ParameterError(f"协变量行数 {x.shape[0]} 与观测数 {y.size} 不一致")
    if y.size < 3:
        raise ParameterError("动态probit准则至少需要3个观测")
    return y, x


def probit_constrained_eval(beta: np.ndarray, y: np.ndarray, x: np.ndarray, hessian_rule: str = "exact") -> CriterionEval:
    """
    在 β₂ = 0 处计算完整参数 β = (β₁', β₂)' 的准则值、得分与Hessian

    Args:
        beta: (β₁', β₂)'，β₂ 必须为0（容差1e-8）
        y: 0/1序列
        x: 协变量 (T × d)
        hessian_rule: "exact" 为动态probit似然在 β₂ = 0 处的精确二阶导；
            "displayed" 使用 -Σũ²_{t-1}/T

    Returns:
        CriterionEval
    """
    y, x = _prepare(y, x)
    beta1 = _split(beta, x)
    if hessian_rule not in HESSIAN_RULES:
        raise ParameterError(f"未知的hessian_rule: {hessian_rule}")
    T, d = x.shape
    m = x @ beta1
    u, du, loglik = generalized_residuals(m, y)

    score = np.empty(d + 1)
    score[:d] = x.T @ u / T
    score[d] = np.dot(u[:-1], u[1:]) / T

    hessian = np.zeros((d + 1, d + 1))
    hessian[:d, :d] = (x * du[:, None]).T @ x / T
    cross = (x[:-1] * (du[:-1] * u[1:])[:, None]).sum(axis=0) + (x[1:] * (u[:-1] * du[1:])[:, None]).sum(axis=0)
    hessian[:d, d] = hessian[d, :d] = cross / T

    if hessian_rule == "exact":
        curvature = -np.clip(m, -INDEX_CAP, INDEX_CAP) * u
        u2 = u * u
        total = np.sum(curvature[:-1] * curvature[1:] - u2[:-1] * u2[1:])
        total += 2.0 * np.sum(u[:-2] * u[2:] * (1.0 + curvature[1:-1] - u2[1:-1]))
        total += np.sum(curvature)
        hessian[d, d] = total / T
    else:
        hessian[d, d] = -np.sum(u[:-1] ** 2) / T

    return CriterionEval(value=float(np.mean(loglik)), score=score, hessian=hessian)


def probit_contributions(beta: np.ndarray, y: np.ndarray, x: np.ndarray) -> np.ndarray:
    y, x = _prepare(y, x)
    beta1 = _split(beta, x)
    u, _, _ = generalized_residuals(x @ beta1, y)
    lagged = np.concatenate([[0.0], u[:-1] * u[1:]])
    return np.column_stack([x * u[:, None], lagged])


class ProbitZeroCriterion(Criterion):
    """动态probit在等式约束 β₂ = 0 下的准则，数据为ProbitData"""

    name = "probit0"

    def __init__(self, d_beta1: int = 2, spec: ConstraintSpec = None, hessian_rule: str = "exact"):
        if hessian_rule not in HESSIAN_RULES:
            raise ParameterError(f"未知的hessian_rule: {hessian_rule}")
        super().__init__(spec or probit_constraints(d_beta1))
        self.hessian_rule = hessian_rule

    def evaluate(self, beta: np.ndarray, data: ProbitData) -> CriterionEval:
        return probit_constrained_eval(self.check_beta(beta), data.y, data.x, self.hessian_rule)

    def contributions(self, beta: np.ndarray, data: ProbitData) -> np.ndarray:
        return probit_contributions(self.check_beta(beta), data.y, data.x)

    def sample_size(self, data: ProbitData) -> int:
        return int(np.size(data.y))

    def default_start(self, data: ProbitData) -> np.ndarray:
        return np.zeros(self.d_beta)
