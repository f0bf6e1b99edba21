"""
间接推断的矩向量与模拟辅助估计

  m̄(θ)      = s_TH(θ, β̂ᵣ) + H_TH(θ, β̂ᵣ)(β̂ - β̂ᵣ)
  m_cfs(θ)   = s_TH(θ, β̂ᵣ) - s_T(β̂ᵣ)
  β̃^CFS(θ)  = β̃ᵣ_TH(θ) + H_T(β̂ᵣ)⁻¹G(β̂ᵣ)'λ̃_TH(θ)
  β̃^c(θ)    = β̂ᵣ - H_TH(θ, β̂ᵣ)⁻¹ s_TH(θ, β̂ᵣ)
  β̃^func(θ) = 模拟路径上从 β̃ᵣ_TH(θ) 出发的FUNC

恒等式 m̄(θ) = H_TH(θ, β̂ᵣ)(β̂ - β̃^c(θ))。
"""
import logging
from typing import Sequence

import numpy as np

from indii.core.constrained.func import FuncEstimate, func_estimator, regularized_hessian
from indii.core.constrained.optimizer import ConstrainedFit
from indii.core.inference.simulated import SimulatedCriterion

logger = logging.getLogger(__name__)


def m_bar(theta: Sequence[float], fit: ConstrainedFit, func: FuncEstimate, sim: SimulatedCriterion) -> np.ndarray:
    """基于FUNC的得分矩 m̄(θ)"""
    ev = sim.evaluate(theta, fit.beta_r)
    return ev.score + ev.hessian @ (func.beta_hat - fit.beta_r)


def m_cfs(theta: Sequence[float], fit: ConstrainedFit, sim: SimulatedCriterion) -> np.ndarray:
    """以观测得分重新中心化的模拟得分 m_cfs(θ)"""
    return sim.evaluate(theta, fit.beta_r).score - fit.eval.score


def beta_tilde_cfs(theta: Sequence[float], sim: SimulatedCriterion, fit: ConstrainedFit) -> np.ndarray:
    """模拟约束估计加KT乘子修正；模拟路径上的约束估计以 β̂ᵣ 为热启动"""
    sim_fit = sim.fit(theta, start=fit.beta_r)
    hessian, _ = regularized_hessian(fit.eval.hessian)
    if fit.spec.q == 0:
        return sim_fit.beta_r
    return sim_fit.beta_r + np.linalg.solve(hessian, fit.jacobian.T @ sim_fit.lam)


def beta_tilde_c(theta: Sequence[float], sim: SimulatedCriterion, fit: ConstrainedFit) -> np.ndarray:
    """从 β̂ᵣ 出发、用模拟得分与Hessian的一步Newton"""
    ev = sim.evaluate(theta, fit.beta_r)
    hessian, _ = regularized_hessian(ev.hessian)
    return fit.beta_r - np.linalg.solve(hessian, ev.score)


def beta_tilde_func_demo(theta: Sequence[float], sim: SimulatedCriterion, fit: ConstrainedFit) -> np.ndarray:
    """
    模拟路径上的FUNC估计

    与 β̂ 匹配一般不能得到θ⁰的一致估计，只用于演示。
    """
    sim_fit = sim.fit(theta, start=fit.beta_r)
    return func_estimator(sim_fit).beta_hat


def moment_identity_residual(theta: Sequence[float], fit: ConstrainedFit, func: FuncEstimate,
                             sim: SimulatedCriterion) -> float:
    """‖m̄(θ) - H_TH(θ, β̂ᵣ)(β̂ - β̃^c(θ))‖_∞"""
    ev = sim.evaluate(theta, fit.beta_r)
    tilde_c = beta_tilde_c(theta, sim, fit)
    return float(np.linalg.norm(m_bar(theta, fit, func, sim) - ev.hessian @ (func.beta_hat - tilde_c), np.inf))
