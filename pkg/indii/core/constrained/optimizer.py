"""
约束极大化

    β̂ᵣ = argmax Q(β)  s.t.  g(β) ≥ a_T（等式约束 g = 0）

序列二次规划：每步用特征值截断为负定的Hessian构造QP子问题，积极集法求解，
再以L1罚函数做Armijo回溯线搜索（求值失败同样回溯）。约束曲率被忽略，
对线性约束是精确的。SQP停滞时退回 scipy.optimize.minimize(method="trust-constr")。
KT乘子在收敛点上由积极约束行的最小二乘求出：s + G_C'λ = 0。
"""
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple

import numpy as np
from scipy.optimize import NonlinearConstraint, linprog, minimize

from indii.core.auxiliary.base import Criterion, CriterionEval
from indii.core.auxiliary.constraints import ConstraintSpec
from indii.core.constrained.qp import solve_qp
from indii.core.errors import IndiiError, Infeasible, NoConvergence

# 配置日志
logger = logging.getLogger(__name__)

NOISE_LEVEL = 1e-13


@dataclass
class OptimizerOptions:
    """约束优化器选项（对应config.yml的constrained配置段）"""

    max_iter: int = 500
    tol: float = 1e-8
    accept_tol: float = 1e-5
    binding_tol: float = 1e-8
    armijo: float = 1e-4
    max_backtracks: int = 60
    curvature_floor: float = 1e-10
    fallback: bool = True

    @classmethod
    def from_config(cls, config: Optional[Dict[str, Any]]) -> "OptimizerOptions":
        config = config or {}
        known = {k: v for k, v in config.items() if k in cls.__dataclass_fields__}
        return cls(**known)


@dataclass
class ConstrainedFit:
    """
    约束估计结果

    lam 长度为q：不等式约束的乘子非负，非积极约束为0；等式约束乘子可取任意符号。
    """

    beta_r: np.ndarray
    lam: np.ndarray
    binding: Tuple[int, ...]
    q_value: float
    eval: CriterionEval
    converged: bool
    iterations: int
    T: int
    spec: ConstraintSpec
    slack: np.ndarray
    jacobian: np.ndarray
    stationarity: float
    method: str = "sqp"
    start_value: float = float("nan")
    info: Dict[str, Any] = field(default_factory=dict)

    @property
    def binding_names(self):
        return [self.spec.names[j] for j in self.binding]

    def binding_mask(self) -> np.ndarray:
        mask = np.zeros(self.spec.q, dtype=bool)
        mask[list(self.binding)] = True
        return mask


def negative_definite(hessian: np.ndarray, floor: float = 1e-10) -> np.ndarray:
    """把对称矩阵的特征值截断到 ≤ -floor·max(1, |λ|_max)"""
    values, vectors = np.linalg.eigh(0.5 * (hessian + hessian.T))
    bound = floor * max(1.0, float(np.max(np.abs(values))))
    values = np.minimum(values, -bound)
    return (vectors * values) @ vectors.T


class ConstrainedMaximizer:
    """
    约束极大化器

    对任意Criterion求解约束极大化问题，并恢复KT乘子与积极集。
    """

    def __init__(self, options: Optional[OptimizerOptions] = None):
        self.options = options or OptimizerOptions()

    # ---- 可行起点 ----

    def _feasible_start(self, criterion: Criterion, data: Any, start: Optional[np.ndarray], T: int) -> np.ndarray:
        spec = criterion.spec
        candidates = []
        if start is not None:
            candidates.append(np.asarray(start, dtype=float))
        candidates.append(np.asarray(criterion.default_start(data), dtype=float))
        for candidate in candidates:
            if spec.is_feasible(candidate, T) and self._evaluable(criterion, candidate, data):
                return candidate
        if spec.is_linear:
            candidate = self._phase_one(spec, T, candidates[-1])
            if candidate is not None and self._evaluable(criterion, candidate, data):
                logger.info("起点不可行，使用第一阶段线性规划得到的内点")
                return candidate
        raise Infeasible("找不到可行起点", context={"start": candidates[0]})

    @staticmethod
    def _evaluable(criterion: Criterion, beta: np.ndarray, data: Any) -> bool:
        try:
            return np.isfinite(criterion.evaluate(beta, data).value)
        except IndiiError:
            return False

    @staticmethod
    def _phase_one(spec: ConstraintSpec, T: int, anchor: np.ndarray) -> Optional[np.ndarray]:
        """max t  s.t. G β + off - a ≥ t（不等式），G β + off = 0（等式），0 ≤ t ≤ 1"""
        d = len(spec.param_names)
        G = spec.jacobian(anchor)
        offset = spec.g(np.zeros(d))
        bounds = spec.bounds(T)
        eq = spec.equality_mask
        # 变量 (β, t)，linprog 求最小值
        objective = np.zeros(d + 1)
        objective[-1] = -1.0
        A_ub = np.hstack([-G[~eq], np.ones(((~eq).sum(), 1))])
        b_ub = offset[~eq] - bounds[~eq]
        A_eq = np.hstack([G[eq], np.zeros((eq.sum(), 1))]) if eq.any() else None
        b_eq = -offset[eq] if eq.any() else None
        var_bounds = [(None, None)] * d + [(0.0, 1.0)]
        result = linprog(objective, A_ub=A_ub if A_ub.size else None, b_ub=b_ub if A_ub.size else None,
                         A_eq=A_eq, b_eq=b_eq, bounds=var_bounds, method="highs")
        if not result.success or result.x[-1] <= 0.0:
            return None
        return result.x[:d]

    # ---- 主循环 ----

    def maximize(self, criterion: Criterion, data: Any, start: Optional[np.ndarray] = None) -> ConstrainedFit:
        """
        约束极大化

        Args:
            criterion: 准则
            data: 数据
            start: 起点，缺省为准则的默认起点

        Returns:
            ConstrainedFit

        Raises:
            Infeasible: 找不到可行起点
            NoConvergence: 达到迭代上限或停滞且KT残差超过容忍度
        """
        opts = self.options
        spec = criterion.spec
        T = criterion.sample_size(data)
        beta = self._feasible_start(criterion, data, start, T)
        ev = criterion.evaluate(beta, data)
        start_value = ev.value
        bounds = spec.bounds(T)
        eq = spec.equality_mask
        penalty = 1.0
        method = "sqp"
        iterations = 0
        stalled = False

        for iterations in range(1, opts.max_iter + 1):
            slack = spec.g(beta) - bounds
            G = spec.jacobian(beta)
            B = negative_definite(ev.hessian, opts.curvature_floor)
            qp = solve_qp(-B, -ev.score, G, -slack, eq)
            p = qp.p
            residual = np.linalg.norm(ev.score + G.T @ qp.multipliers, np.inf) if spec.q else np.linalg.norm(ev.score, np.inf)
            logger.debug(f"SQP迭代 {iterations}: Q={ev.value:.12g}, |p|={np.linalg.norm(p, np.inf):.3e}, KT残差={residual:.3e}")
            if residual < opts.tol and np.linalg.norm(p, np.inf) < max(opts.tol, 1e-6):
                break
            if np.linalg.norm(p, np.inf) < 1e-15 * (1.0 + np.linalg.norm(beta, np.inf)):
                stalled = True
                break

            penalty = max(penalty, 1.1 * float(np.max(np.abs(qp.multipliers), initial=0.0)))
            merit = ev.value - penalty * self._violation(slack, eq)
            slope = float(ev.score @ p) - penalty * self._violation(slack, eq)

            alpha = 1.0
            accepted = False
            for _ in range(opts.max_backtracks):
                trial = beta + alpha * p
                try:
                    trial_ev = criterion.evaluate(trial, data)
                except IndiiError as e:
                    logger.debug(f"线搜索试探点求值失败 (α={alpha:.2e}): {e}")
                    alpha *= 0.5
                    continue
                trial_slack = spec.g(trial) - bounds
                trial_merit = trial_ev.value - penalty * self._violation(trial_slack, eq)
                noise = NOISE_LEVEL * (1.0 + abs(merit)) if slope * alpha < NOISE_LEVEL * (1.0 + abs(merit)) else 0.0
                if np.isfinite(trial_merit) and trial_merit >= merit + opts.armijo * alpha * max(slope, 0.0) - noise:
                    beta, ev = trial, trial_ev
                    accepted = True
                    break
                alpha *= 0.5
            if not accepted:
                stalled = True
                break
        else:
            stalled = True

        if stalled and opts.fallback:
            beta, ev, used = self._fallback(criterion, data, beta, ev, T)
            if used:
                method = "trust-constr"

        return self._finish(criterion, data, beta, ev, T, iterations, method, start_value)

    @staticmethod
    def _violation(slack: np.ndarray, eq: np.ndarray) -> float:
        if slack.size == 0:
            return 0.0
        return float(np.sum(np.maximum(-slack[~eq], 0.0)) + np.sum(np.abs(slack[eq])))

    def _fallback(self, criterion: Criterion, data: Any, beta: np.ndarray, ev: CriterionEval, T: int):
        """SQP停滞时用trust-constr内点法继续；结果更差时保留原迭代点"""
        spec = criterion.spec
        bounds = spec.bounds(T)
        eq = spec.equality_mask
        logger.info(f"SQP停滞，改用trust-constr (Q={ev.value:.10g})")

        def objective(b):
            try:
                return -criterion.evaluate(b, data).value
            except IndiiError:
                return 1e100

        def gradient(b):
            try:
                return -criterion.evaluate(b, data).score
            except IndiiError:
                return np.zeros_like(b)

        def hessian(b):
            try:
                return -criterion.evaluate(b, data).hessian
            except IndiiError:
                return np.eye(b.size)

        constraints = []
        if spec.q:
            lower = np.where(eq, 0.0, bounds)
            upper = np.where(eq, 0.0, np.inf)
            constraints.append(NonlinearConstraint(spec.g, lower, upper, jac=spec.jacobian))
        try:
            result = minimize(objective, beta, jac=gradient, hess=hessian, method="trust-constr",
                              constraints=constraints, options={"maxiter": 2000, "gtol": 1e-12, "xtol": 1e-14})
            candidate = np.asarray(result.x, dtype=float)
            candidate_ev = criterion.evaluate(candidate, data)
        except (IndiiError, ValueError, np.linalg.LinAlgError) as e:
            logger.warning(f"trust-constr 失败: {e}")
            return beta, ev, False
        if spec.is_feasible(candidate, T, tol=1e-9) and candidate_ev.value >= ev.value:
            return candidate, candidate_ev, True
        return beta, ev, False

    def _finish(self, criterion: Criterion, data: Any, beta: np.ndarray, ev: CriterionEval, T: int,
                iterations: int, method: str, start_value: float) -> ConstrainedFit:
        opts = self.options
        spec = criterion.spec
        slack = spec.g(beta) - spec.bounds(T)
        G = spec.jacobian(beta)
        lam, binding = recover_multipliers(ev.score, slack, G, spec.equality_mask, opts.binding_tol)
        residual = float(np.linalg.norm(ev.score + G.T @ lam, np.inf)) if spec.q else float(np.linalg.norm(ev.score, np.inf))
        converged = residual < opts.tol
        fit = ConstrainedFit(
            beta_r=beta,
            lam=lam,
            binding=binding,
            q_value=ev.value,
            eval=ev,
            converged=converged,
            iterations=iterations,
            T=T,
            spec=spec,
            slack=slack,
            jacobian=G,
            stationarity=residual,
            method=method,
            start_value=start_value,
        )
        if not converged:
            if residual < opts.accept_tol:
                logger.warning(f"约束估计未达到容差 {opts.tol:.1e}，KT残差 {residual:.3e}，按近似解返回")
            else:
                raise NoConvergence(f"约束估计未收敛，KT残差 {residual:.3e}", best=fit, context={"beta": beta})
        logger.debug(f"约束估计完成: Q={ev.value:.10g}, 积极约束={fit.binding_names}, 迭代={iterations}, 方法={method}")
        return fit


def recover_multipliers(score: np.ndarray, slack: np.ndarray, G: np.ndarray, equality: np.ndarray,
                        binding_tol: float = 1e-8) -> Tuple[np.ndarray, Tuple[int, ...]]:
    """
    在积极约束行上最小二乘求解 G_C'λ_C = -s

    |g_j - a_j| < binding_tol 视为积极；若某个不等式乘子为负，则把它移出积极集后重解。

    Returns:
        (λ, 积极约束下标)
    """
    q = slack.size
    lam = np.zeros(q)
    active = [j for j in range(q) if equality[j] or abs(slack[j]) < binding_tol]
    while active:
        G_c = G[active]
        lam_c = np.linalg.lstsq(G_c.T, -score, rcond=None)[0]
        negative = [(value, j) for value, j in zip(lam_c, active) if not equality[j] and value < 0.0]
        if not negative:
            lam[active] = lam_c
            break
        worst = min(negative)[1]
        active.remove(worst)
    return lam, tuple(int(j) for j in active)


def maximize_constrained(criterion: Criterion, data: Any, start: Optional[np.ndarray] = None,
                         options: Optional[OptimizerOptions] = None) -> ConstrainedFit:
    """约束极大化的函数式入口"""
    return ConstrainedMaximizer(options).maximize(criterion, data, start)


def create_maximizer_from_config(config: Optional[Dict[str, Any]]) -> ConstrainedMaximizer:
    """根据constrained配置段创建约束极大化器"""
    return ConstrainedMaximizer(OptimizerOptions.from_config(config))
