"""
FUNC单步无约束估计、约束有效性的得分检验与投影分解诊断

FUNC: β̂ = β̂ᵣ - H(β̂ᵣ)⁻¹ s(β̂ᵣ)，在驻点条件下等于 β̂ᵣ + H⁻¹G'λ̂。
"""
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.stats import chi2

from indii.core.constrained.optimizer import ConstrainedFit
from indii.core.errors import NonConcavity, ParameterError, SingularHessian
from indii.utils.linalg import projector, sym_sqrt

# 配置日志
logger = logging.getLogger(__name__)

CONDITION_LIMIT = 1e12
RIDGE = 1e-8
NEGATIVE_XI_TOL = 1e-8


@dataclass
class FuncEstimate:
    """
    FUNC估计

    hessian 为实际用于求逆的矩阵（可能带有岭正则 ridge），
    恒有 β̂ - β̂ᵣ + hessian⁻¹ s = 0。
    """

    beta_hat: np.ndarray
    step: np.ndarray
    fit: ConstrainedFit
    hessian: np.ndarray
    ridge: float = 0.0


@dataclass
class ScoreTestResult:
    xi: float
    df: int
    p_value: float

    def reject(self, level: float = 0.05) -> bool:
        return self.p_value < level


@dataclass
class ProjectionDiagnostic:
    """投影分解诊断：两侧向量、残差以及投影形式"""

    lhs: np.ndarray
    rhs: np.ndarray
    residual_norm: float
    projected_lhs: np.ndarray
    projected_rhs: np.ndarray
    projected_residual: float
    P_X: np.ndarray
    M_X: np.ndarray
    j_non_psd: bool


def regularized_hessian(hessian: np.ndarray, cond_limit: float = CONDITION_LIMIT, ridge: float = RIDGE):
    """
    条件数 ≥ cond_limit 时施加岭正则 H - ridge·I

    Returns:
        (可求逆的Hessian, 实际使用的ridge)

    Raises:
        SingularHessian: 正则化后仍然奇异
    """
    hessian = np.asarray(hessian, dtype=float)
    cond = np.linalg.cond(hessian) if np.all(np.isfinite(hessian)) else np.inf
    if cond < cond_limit:
        return hessian, 0.0
    regularized = hessian - ridge * np.eye(hessian.shape[0])
    new_cond = np.linalg.cond(regularized) if np.all(np.isfinite(regularized)) else np.inf
    if not new_cond < cond_limit:
        raise SingularHessian(f"Hessian奇异 (条件数 {cond:.3e})", context={"condition": cond})
    logger.warning(f"Hessian条件数 {cond:.3e} 过大，施加岭正则 {ridge:.1e}，正则化后条件数 {new_cond:.3e}")
    return regularized, ridge


def func_estimator(fit: ConstrainedFit, cond_limit: float = CONDITION_LIMIT, ridge: float = RIDGE) -> FuncEstimate:
    """
    FUNC估计：从约束估计出发的一步Newton迭代

    Args:
        fit: 约束估计结果
        cond_limit: 条件数上限
        ridge: 岭正则强度

    Returns:
        FuncEstimate
    """
    hessian, used_ridge = regularized_hessian(fit.eval.hessian, cond_limit, ridge)
    step = -np.linalg.solve(hessian, fit.eval.score)
    return FuncEstimate(beta_hat=fit.beta_r + step, step=step, fit=fit, hessian=hessian, ridge=used_ridge)


def score_test(fit: ConstrainedFit, func: FuncEstimate, T: Optional[int] = None, q: Optional[int] = None) -> ScoreTestResult:
    """
    约束有效性的得分检验 ξ = T·(β̂ - β̂ᵣ)'(-H)(β̂ - β̂ᵣ)，渐近服从 χ²_q

    Args:
        fit: 约束估计
        func: FUNC估计
        T: 样本长度，缺省取 fit.T
        q: 自由度，缺省为等式约束个数

    Raises:
        NonConcavity: ξ < -1e-8
    """
    T = fit.T if T is None else int(T)
    q = fit.spec.n_equalities if q is None else int(q)
    if q < 1:
        raise ParameterError("得分检验至少需要一个等式约束")
    xi = float(T * func.step @ (-func.hessian) @ func.step)
    if xi < -NEGATIVE_XI_TOL:
        raise NonConcavity(f"得分检验统计量为负: {xi:.3e}", context={"beta_r": fit.beta_r})
    xi = max(xi, 0.0)
    return ScoreTestResult(xi=xi, df=q, p_value=float(chi2.sf(xi, q)))


def projection_decomposition(fit: ConstrainedFit, func: FuncEstimate, beta_true: np.ndarray) -> ProjectionDiagnostic:
    """
    约束估计的投影分解诊断

    该操作在 DESIGN.md 的操作表中有对应条目。

    直接形式：J√T(β̂ᵣ - β⁰) - G(β⁰)'√Tλ̂ 对比 J√T(β̂ - β⁰)，J = -H(β̂ᵣ)；
    投影形式：X = J^{-1/2}G̃(β⁰)'，Y = J^{1/2}√T(β̂ - β⁰)，
    比较 Yʳ = J^{1/2}√T(β̂ᵣ - β⁰) 与 M_X Y - X(X'X)⁻¹√T g̃(β⁰)，g̃为积极约束的松弛量。
    二次准则加线性约束时两种残差都为0。
    """
    beta_true = np.asarray(beta_true, dtype=float)
    spec = fit.spec
    T = fit.T
    root_T = np.sqrt(T)
    J = -func.hessian
    G0 = spec.jacobian(beta_true)

    lhs = J @ (root_T * (fit.beta_r - beta_true)) - G0.T @ (root_T * fit.lam) if spec.q else J @ (root_T * (fit.beta_r - beta_true))
    rhs = J @ (root_T * (func.beta_hat - beta_true))

    J_half, non_psd = sym_sqrt(J)
    J_inv_half, _ = sym_sqrt(J, inverse=True)
    if non_psd:
        logger.warning("J 不是半正定矩阵，平方根按特征值截断为0计算")

    binding = list(fit.binding)
    Y = J_half @ (root_T * (func.beta_hat - beta_true))
    Y_r = J_half @ (root_T * (fit.beta_r - beta_true))
    d = J.shape[0]
    if binding:
        X = J_inv_half @ G0[binding].T
        slack0 = spec.slack(beta_true, T)[binding]
        P_X = projector(X)
        M_X = np.eye(d) - P_X
        projected_rhs = M_X @ Y - X @ np.linalg.pinv(X.T @ X) @ (root_T * slack0)
    else:
        P_X = np.zeros((d, d))
        M_X = np.eye(d)
        projected_rhs = Y

    return ProjectionDiagnostic(
        lhs=lhs,
        rhs=rhs,
        residual_norm=float(np.linalg.norm(lhs - rhs)),
        projected_lhs=Y_r,
        projected_rhs=projected_rhs,
        projected_residual=float(np.linalg.norm(Y_r - projected_rhs)),
        P_X=P_X,
        M_X=M_X,
        j_non_psd=non_psd,
    )
