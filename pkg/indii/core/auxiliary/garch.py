"""
GARCH(1,1) 伪对数似然准则

h_1 = mean(y²)，h_t = ψ + φ y²_{t-1} + π h_{t-1}（t ≥ 2）。
条件方差及其一阶、二阶导数都是系数为π的一阶线性递推，用 scipy.signal.lfilter 计算：
  ∂h_t/∂β = (1, y²_{t-1}, h_{t-1})' + π ∂h_{t-1}/∂β，∂h_1/∂β = 0
  ∂²h_t/∂π∂β_j = ∂h_{t-1}/∂β_j + π ∂²h_{t-1}/∂π∂β_j（π自身的输入为 2∂h_{t-1}/∂π）
其余二阶导数恒为0。
"""
import logging
from typing import Tuple

import numpy as np
from scipy.signal import lfilter
from scipy.special import digamma, gammaln, polygamma

from indii.core.auxiliary.base import Criterion, CriterionEval
from indii.core.auxiliary.constraints import ConstraintSpec, garch_constraints
from indii.core.errors import DomainError, NonPositiveVariance, ParameterError

# 配置日志
logger = logging.getLogger(__name__)

VARIANCE_FLOOR = 1e-300
GAUSSIAN_ETA = 1e-8
ETA_MAX = 0.5
ETA_ROUNDING = 1e-12
LOG_2PI = np.log(2.0 * np.pi)

PSI, PHI, PI = 0, 1, 2


def _as_series(y: np.ndarray) -> np.ndarray:
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.size < 2:
        raise ParameterError(f"GARCH准则至少需要2个观测，当前为 {y.size}")
    if not np.all(np.isfinite(y)):
        raise ParameterError("观测序列必须有限")
    return y


def garch_filter(beta: np.ndarray, y: np.ndarray) -> np.ndarray:
    """
    GARCH(1,1)条件方差滤波

    Args:
        beta: (ψ, φ, π, ...)，只使用前三个分量
        y: 观测序列

    Returns:
        条件方差 h_t，长度T

    Raises:
        NonPositiveVariance: 任一 h_t ≤ 1e-300 或非有限
    """
    y = _as_series(y)
    psi, phi, pi = (float(b) for b in np.asarray(beta, dtype=float)[:3])
    y2 = y * y
    h1 = float(np.mean(y2))
    with np.errstate(over="ignore", invalid="ignore"):
        rest = lfilter([1.0], [1.0, -pi], psi + phi * y2[:-1], zi=[pi * h1])[0]
    h = np.concatenate([[h1], rest])
    if not np.all(np.isfinite(h)) or np.any(h <= VARIANCE_FLOOR):
        raise NonPositiveVariance("GARCH条件方差不为正", context={"beta": np.array([psi, phi, pi])})
    return h


def garch_derivatives(beta: np.ndarray, y: np.ndarray, h: np.ndarray, second: bool = True) -> Tuple[np.ndarray, np.ndarray]:
    """
    条件方差对 (ψ, φ, π) 的一阶与二阶导数

    Returns:
        (dh, d2h)，形状 (T, 3) 与 (T, 3, 3)；second=False 时 d2h 为 None
    """
    pi = float(beta[PI])
    T = h.size
    y2 = y * y
    inputs = np.column_stack([np.ones(T - 1), y2[:-1], h[:-1]])
    dh = np.zeros((T, 3))
    dh[1:] = lfilter([1.0], [1.0, -pi], inputs, axis=0)
    if not second:
        return dh, None

    d2h = np.zeros((T, 3, 3))
    cross = np.column_stack([dh[:-1, PSI], dh[:-1, PHI], 2.0 * dh[:-1, PI]])
    d2_pi = lfilter([1.0], [1.0, -pi], cross, axis=0)
    d2h[1:, PI, :] = d2_pi
    d2h[1:, :, PI] = d2_pi
    return dh, d2h


def _gaussian_terms(y2: np.ndarray, h: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    loglik = -0.5 * (LOG_2PI + np.log(h) + y2 / h)
    dl_dh = 0.5 * (y2 - h) / h**2
    d2l_dh2 = (h - 2.0 * y2) / (2.0 * h**3)
    return loglik, dl_dh, d2l_dh2


def _chain(dl_dh: np.ndarray, d2l_dh2: np.ndarray, dh: np.ndarray, d2h: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    score = np.mean(dl_dh[:, None] * dh, axis=0)
    hessian = np.einsum("t,ti,tj->ij", d2l_dh2, dh, dh) / dh.shape[0]
    hessian += np.einsum("t,tij->ij", dl_dh, d2h) / dh.shape[0]
    return score, hessian


def garch_gaussian_eval(beta: np.ndarray, y: np.ndarray) -> CriterionEval:
    """
    高斯GARCH(1,1)伪对数似然（样本均值缩放）及解析得分、Hessian
    """
    y = _as_series(y)
    beta = np.asarray(beta, dtype=float)
    h = garch_filter(beta, y)
    dh, d2h = garch_derivatives(beta, y, h)
    loglik, dl_dh, d2l_dh2 = _gaussian_terms(y * y, h)
    score, hessian = _chain(dl_dh, d2l_dh2, dh, d2h)
    return CriterionEval(value=float(np.mean(loglik)), score=score, hessian=hessian)


def garch_gaussian_contributions(beta: np.ndarray, y: np.ndarray) -> np.ndarray:
    y = _as_series(y)
    h = garch_filter(beta, y)
    dh, _ = garch_derivatives(np.asarray(beta, dtype=float), y, h, second=False)
    _, dl_dh, _ = _gaussian_terms(y * y, h)
    return dl_dh[:, None] * dh


def _student_terms(eta: float, y2: np.ndarray, h: np.ndarray):
    """
    方差标准化Student-t（自由度1/η）的逐期对数密度及其导数

    Returns:
        (l, dl/dh, d²l/dh², dl/dη, d²l/dη², d²l/dη∂h)
    """
    z = y2 / h
    if eta < GAUSSIAN_ETA:
        loglik, dl_dh, d2l_dh2 = _gaussian_terms(y2, h)
        dl_deta = (z**2 - 6.0 * z + 3.0) / 4.0
        d2l_deta2 = 2.0 - 6.0 * z + 2.5 * z**2 - z**3 / 3.0
        d2l_detadh = -z * (z - 3.0) / (2.0 * h)
        return loglik, dl_dh, d2l_dh2, dl_deta, d2l_deta2, d2l_detadh

    a = (1.0 + eta) / (2.0 * eta)
    b = 1.0 / (2.0 * eta)
    k = eta / (1.0 - 2.0 * eta)
    const = gammaln(a) - gammaln(b) - 0.5 * np.log(np.pi) - 0.5 * np.log(1.0 - 2.0 * eta) + 0.5 * np.log(eta)
    psi_diff = digamma(a) - digamma(b)
    trigamma_diff = polygamma(1, a) - polygamma(1, b)
    dconst = -psi_diff / (2.0 * eta**2) + 1.0 / (1.0 - 2.0 * eta) + 1.0 / (2.0 * eta)
    d2const = (
        trigamma_diff / (4.0 * eta**4)
        + psi_diff / eta**3
        + 2.0 / (1.0 - 2.0 * eta) ** 2
        - 1.0 / (2.0 * eta**2)
    )
    da = -1.0 / (2.0 * eta**2)
    d2a = 1.0 / eta**3
    dk = 1.0 / (1.0 - 2.0 * eta) ** 2
    d2k = 4.0 / (1.0 - 2.0 * eta) ** 3

    one_kz = 1.0 + k * z
    log_term = np.log1p(k * z)
    r = k * z / one_kz

    loglik = const - 0.5 * np.log(h) - a * log_term
    dl_dh = (-1.0 + 2.0 * a * r) / (2.0 * h)
    d2l_dh2 = (1.0 - 2.0 * a * r) / (2.0 * h**2) - a * r * (1.0 - r) / h**2
    ratio = dk * z / one_kz
    dl_deta = dconst - da * log_term - a * ratio
    d2l_deta2 = d2const - d2a * log_term - 2.0 * da * ratio - a * (d2k * z / one_kz - ratio**2)
    d2l_detadh = (da * r + a * dk * z / one_kz**2) / h
    return loglik, dl_dh, d2l_dh2, dl_deta, d2l_deta2, d2l_detadh


def _check_eta(eta: float) -> None:
    if eta >= ETA_MAX:
        raise DomainError(f"η 必须小于 {ETA_MAX}，当前为 {eta}", context={"eta": eta})
    if eta < -ETA_ROUNDING:
        raise DomainError(f"η 必须非负，当前为 {eta}", context={"eta": eta})


def garch_student_eval(beta: np.ndarray, y: np.ndarray) -> CriterionEval:
    """
    Student-t GARCH(1,1)伪对数似然，β = (ψ, φ, π, η)，自由度 1/η

    密度按方差标准化，h_t 始终是条件方差；η < 1e-8 时切换到高斯分支，
    η方向的导数使用 η → 0 的极限。

    Raises:
        DomainError: η ≥ .5 或 η < 0
    """
    y = _as_series(y)
    beta = np.asarray(beta, dtype=float)
    eta = float(beta[3])
    _check_eta(eta)
    h = garch_filter(beta, y)
    dh, d2h = garch_derivatives(beta, y, h)
    loglik, dl_dh, d2l_dh2, dl_deta, d2l_deta2, d2l_detadh = _student_terms(eta, y * y, h)

    garch_score, garch_hessian = _chain(dl_dh, d2l_dh2, dh, d2h)
    score = np.append(garch_score, np.mean(dl_deta))
    hessian = np.zeros((4, 4))
    hessian[:3, :3] = garch_hessian
    hessian[:3, 3] = hessian[3, :3] = np.mean(d2l_detadh[:, None] * dh, axis=0)
    hessian[3, 3] = np.mean(d2l_deta2)
    return CriterionEval(value=float(np.mean(loglik)), score=score, hessian=hessian)


def garch_student_contributions(beta: np.ndarray, y: np.ndarray) -> np.ndarray:
    y = _as_series(y)
    beta = np.asarray(beta, dtype=float)
    eta = float(beta[3])
    _check_eta(eta)
    h = garch_filter(beta, y)
    dh, _ = garch_derivatives(beta, y, h, second=False)
    _, dl_dh, _, dl_deta, _, _ = _student_terms(eta, y * y, h)
    return np.column_stack([dl_dh[:, None] * dh, dl_deta])


class GaussianGarchCriterion(Criterion):
    """高斯GARCH(1,1)准则，β = (ψ, φ, π)"""

    name = "garch"

    def __init__(self, spec: ConstraintSpec = None, start_phi: float = 0.05, start_pi: float = 0.85):
        super().__init__(spec or garch_constraints(student=False))
        self.start_phi = start_phi
        self.start_pi = start_pi

    def evaluate(self, beta: np.ndarray, data: np.ndarray) -> CriterionEval:
        return garch_gaussian_eval(self.check_beta(beta), data)

    def contributions(self, beta: np.ndarray, data: np.ndarray) -> np.ndarray:
        return garch_gaussian_contributions(self.check_beta(beta), data)

    def sample_size(self, data: np.ndarray) -> int:
        return int(np.size(data))

    def default_start(self, data: np.ndarray) -> np.ndarray:
        """(ψ₀, φ₀, π₀) = ((1 - φ₀ - π₀)·mean(y²), .05, .85)"""
        mean_y2 = float(np.mean(np.square(data)))
        return np.array([(1.0 - self.start_phi - self.start_pi) * mean_y2, self.start_phi, self.start_pi])


class StudentGarchCriterion(GaussianGarchCriterion):
    """Student-t GARCH(1,1)准则，β = (ψ, φ, π, η)"""

    name = "garch-t"

    def __init__(self, spec: ConstraintSpec = None, start_phi: float = 0.05, start_pi: float = 0.85,
                 start_eta: float = 0.1):
        super().__init__(spec or garch_constraints(student=True), start_phi, start_pi)
        self.start_eta = start_eta

    def evaluate(self, beta: np.ndarray, data: np.ndarray) -> CriterionEval:
        return garch_student_eval(self.check_beta(beta), data)

    def contributions(self, beta: np.ndarray, data: np.ndarray) -> np.ndarray:
        return garch_student_contributions(self.check_beta(beta), data)

    def default_start(self, data: np.ndarray) -> np.ndarray:
        return np.append(super().default_start(data), self.start_eta)
