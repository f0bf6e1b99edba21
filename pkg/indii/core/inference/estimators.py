"""
间接推断估计量

得分型：score_ours 最小化 m̄'Wm̄，score_cfs 最小化 m_cfs'Wm_cfs；
Wald型：wald_cfs / wald_c / wald_func_demo 最小化 (β̂ - β̃(θ))'ĴWĴ(β̂ - β̃(θ))，Ĵ = -H(β̂ᵣ)。
所有θ求值共用同一个冻结新息库（共同随机数），结果是 (数据, 配置, 种子) 的纯函数。
"""
import logging
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field, field_validator

from indii.core.auxiliary.base import Criterion
from indii.core.constrained.func import FuncEstimate, func_estimator
from indii.core.constrained.optimizer import ConstrainedFit, ConstrainedMaximizer
from indii.core.errors import IndiiError
from indii.core.inference.moments import beta_tilde_c, beta_tilde_cfs, beta_tilde_func_demo, m_bar, m_cfs
from indii.core.inference.search import GridSpec, gauss_seidel_grid
from indii.core.inference.simulated import SimulatedCriterion
from indii.core.inference.variance import asymptotic_variance, dL_dtheta, estimate_info_matrices
from indii.core.simulation.innovations import draw_innovation_bank
from indii.core.simulation.models import StructuralModel
from indii.utils.linalg import is_positive_definite

# 配置日志
logger = logging.getLogger(__name__)

VARIANTS = ("score_ours", "score_cfs", "wald_cfs", "wald_c", "wald_func_demo")

DEFAULT_BOUNDS = {
    "alpha": (-3.0, 1.0),
    "delta": (0.0, 0.995),
    "sigma_v": (0.005, 1.5),
    "theta2": (-0.95, 0.95),
}
DEFAULT_COEFFICIENT_BOUNDS = (-3.0, 3.0)


def normalize_variant(name: str) -> str:
    variant = name.replace("-", "_")
    if variant not in VARIANTS:
        raise ValueError(f"未知的估计量: {name}，可选 {VARIANTS}")
    return variant


class IIConfig(BaseModel):
    """间接推断设置"""

    H: int = Field(10, description="模拟路径数", ge=1)
    W: Optional[List[List[float]]] = Field(None, description="对称正定加权矩阵，缺省为单位阵")
    variant: str = Field("score_ours", description="估计量")
    grid: GridSpec = Field(default_factory=GridSpec, description="网格搜索设置")
    bounds: Dict[str, Tuple[float, float]] = Field(default_factory=dict, description="参数空间边界")
    seed: int = Field(0, description="新息库种子")
    report_variance: bool = Field(True, description="是否报告Ω̂与Ω̂*")

    @field_validator("variant")
    @classmethod
    def check_variant(cls, value: str) -> str:
        return normalize_variant(value)

    @field_validator("W")
    @classmethod
    def check_weighting(cls, value: Optional[List[List[float]]]) -> Optional[List[List[float]]]:
        if value is not None and not is_positive_definite(np.asarray(value, dtype=float)):
            raise ValueError("W 必须是对称正定矩阵")
        return value

    def weighting(self, d_beta: int) -> np.ndarray:
        if self.W is None:
            return np.eye(d_beta)
        W = np.asarray(self.W, dtype=float)
        if W.shape != (d_beta, d_beta):
            raise ValueError(f"W 的形状应为 ({d_beta}, {d_beta})，当前为 {W.shape}")
        return W

    def bounds_for(self, names: Sequence[str]) -> np.ndarray:
        rows = []
        for name in names:
            if name in self.bounds:
                rows.append(self.bounds[name])
            elif name in DEFAULT_BOUNDS:
                rows.append(DEFAULT_BOUNDS[name])
            else:
                rows.append(DEFAULT_COEFFICIENT_BOUNDS)
        return np.asarray(rows, dtype=float)


@dataclass
class IIEstimate:
    """间接推断估计结果"""

    theta_hat: np.ndarray
    variant: str
    objective: float
    moments: np.ndarray
    param_names: List[str]
    resolution: np.ndarray
    on_boundary: bool
    evaluations: int
    beta_r: np.ndarray
    beta_hat: np.ndarray
    binding: List[str]
    omega_hat: Optional[np.ndarray] = None
    omega_star: Optional[np.ndarray] = None
    elapsed: float = 0.0
    trace: List[Dict[str, Any]] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "variant": self.variant,
            "theta_hat": dict(zip(self.param_names, self.theta_hat.tolist())),
            "objective": self.objective,
            "moments": self.moments,
            "resolution": self.resolution,
            "on_boundary": self.on_boundary,
            "evaluations": self.evaluations,
            "beta_r": self.beta_r,
            "beta_hat": self.beta_hat,
            "binding": self.binding,
            "omega_hat": self.omega_hat,
            "omega_star": self.omega_star,
            "elapsed_seconds": self.elapsed,
            "trace": self.trace,
        }


class IndirectInference:
    """
    间接推断引擎

    负责观测数据上的约束估计与FUNC、模拟准则的构造、各估计量目标函数的网格最小化，
    以及Ω̂、Ω̂*的报告。
    """

    def __init__(self, model: StructuralModel, criterion: Criterion, config: Optional[IIConfig] = None,
                 maximizer: Optional[ConstrainedMaximizer] = None):
        self.model = model
        self.criterion = criterion
        self.config = config or IIConfig()
        self.maximizer = maximizer or ConstrainedMaximizer()

    def prepare(self, data: Any) -> Tuple[ConstrainedFit, FuncEstimate]:
        """观测数据上的约束估计与FUNC"""
        fit = self.maximizer.maximize(self.criterion, data)
        return fit, func_estimator(fit)

    def simulator(self, T: int) -> SimulatedCriterion:
        bank = draw_innovation_bank(self.config.H, T, self.model.innovation_columns, self.config.seed)
        return SimulatedCriterion(self.model, self.criterion, bank, self.maximizer)

    def objective(self, variant: str, fit: ConstrainedFit, func: FuncEstimate,
                  sim: SimulatedCriterion) -> Tuple[Callable[[np.ndarray], float], Callable[[np.ndarray], np.ndarray]]:
        """
        构造目标函数

        Returns:
            (θ → 目标值, θ → 矩向量或参数差)
        """
        variant = normalize_variant(variant)
        W = self.config.weighting(self.criterion.d_beta)
        J_hat = -fit.eval.hessian
        metric = J_hat @ W @ J_hat

        if variant == "score_ours":
            def moments(theta):
                return m_bar(theta, fit, func, sim)
            weight = W
        elif variant == "score_cfs":
            def moments(theta):
                return m_cfs(theta, fit, sim)
            weight = W
        else:
            tilde = {"wald_cfs": beta_tilde_cfs, "wald_c": beta_tilde_c, "wald_func_demo": beta_tilde_func_demo}[variant]

            def moments(theta):
                return func.beta_hat - tilde(theta, sim, fit)
            weight = metric

        def value(theta):
            m = moments(theta)
            return float(max(m @ weight @ m, 0.0))

        return value, moments

    def estimate(self, data: Any, variant: Optional[str] = None, fit: Optional[ConstrainedFit] = None,
                 func: Optional[FuncEstimate] = None) -> IIEstimate:
        """
        间接推断估计

        Args:
            data: 观测数据
            variant: 估计量，缺省取配置
            fit, func: 已有的观测数据约束估计与FUNC

        Returns:
            IIEstimate
        """
        started = time.perf_counter()
        variant = normalize_variant(variant or self.config.variant)
        if fit is None or func is None:
            fit, func = self.prepare(data)
        T = self.criterion.sample_size(data)
        sim = self.simulator(T)
        value, moments = self.objective(variant, fit, func, sim)
        names = self.model.param_names()
        bounds = self.config.bounds_for(names)

        result = gauss_seidel_grid(value, bounds, self.config.grid)
        estimate = IIEstimate(
            theta_hat=result.theta,
            variant=variant,
            objective=result.value,
            moments=moments(result.theta),
            param_names=names,
            resolution=result.resolution,
            on_boundary=result.on_boundary,
            evaluations=result.evaluations,
            beta_r=fit.beta_r,
            beta_hat=func.beta_hat,
            binding=fit.binding_names,
            trace=result.trace,
        )
        if self.config.report_variance:
            self._attach_variance(estimate, data, fit, sim)
        estimate.elapsed = time.perf_counter() - started
        logger.info(f"{variant} 估计完成: θ̂={np.round(estimate.theta_hat, 4)}, 目标值={estimate.objective:.3e}, "
                    f"用时 {estimate.elapsed:.1f}s")
        return estimate

    def _attach_variance(self, estimate: IIEstimate, data: Any, fit: ConstrainedFit, sim: SimulatedCriterion) -> None:
        try:
            info = estimate_info_matrices(data, fit, self.criterion)
            D = dL_dtheta(estimate.theta_hat, sim, fit.beta_r)
            W = self.config.weighting(self.criterion.d_beta)
            variance = asymptotic_variance(D, info.I_hat, info.J_hat, W, self.config.H)
            estimate.omega_hat = variance.omega
            estimate.omega_star = variance.omega_star
        except (IndiiError, np.linalg.LinAlgError) as e:
            logger.warning(f"无法计算渐近方差: {e}")

    def scan_objective(self, data: Any, thetas: Sequence[Sequence[float]], variant: str = "wald_func_demo",
                       fit: Optional[ConstrainedFit] = None, func: Optional[FuncEstimate] = None) -> np.ndarray:
        """在给定的θ网格上计算目标函数，无效点记为inf"""
        if fit is None or func is None:
            fit, func = self.prepare(data)
        sim = self.simulator(self.criterion.sample_size(data))
        value, _ = self.objective(variant, fit, func, sim)
        values = []
        for theta in thetas:
            try:
                values.append(value(np.asarray(theta, dtype=float)))
            except IndiiError:
                values.append(np.inf)
        return np.asarray(values)


def _estimate(variant: str, config: IIConfig, data: Any, criterion: Criterion, model: StructuralModel,
              maximizer: Optional[ConstrainedMaximizer] = None) -> IIEstimate:
    config = config.model_copy(update={"variant": variant})
    return IndirectInference(model, criterion, config, maximizer).estimate(data)


def estimate_score_ii(config: IIConfig, data: Any, criterion: Criterion, model: StructuralModel,
                      maximizer: Optional[ConstrainedMaximizer] = None) -> IIEstimate:
    """得分型估计；config.variant 为 score_cfs 时用 m_cfs，否则用 m̄"""
    variant = config.variant if config.variant in ("score_ours", "score_cfs") else "score_ours"
    return _estimate(variant, config, data, criterion, model, maximizer)


def estimate_wald_cfs(config: IIConfig, data: Any, criterion: Criterion, model: StructuralModel,
                      maximizer: Optional[ConstrainedMaximizer] = None) -> IIEstimate:
    return _estimate("wald_cfs", config, data, criterion, model, maximizer)


def estimate_wald_c(config: IIConfig, data: Any, criterion: Criterion, model: StructuralModel,
                    maximizer: Optional[ConstrainedMaximizer] = None) -> IIEstimate:
    return _estimate("wald_c", config, data, criterion, model, maximizer)


def create_ii_config(config: Optional[Dict[str, Any]]) -> IIConfig:
    """根据estimation配置段创建IIConfig"""
    return IIConfig(**(config or {}))
