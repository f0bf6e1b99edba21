"""
迭代Gauss–Seidel网格搜索

粗网格（每轴n点的张量网格）→ 以粗网格步长为半宽的逐坐标扫描 →
若干次半宽减半的局部细化。目标函数在不可容许点返回 inf。
"""
import itertools
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field, field_validator

from indii.core.errors import IndiiError, NoConvergence

# 配置日志
logger = logging.getLogger(__name__)


class GridSpec(BaseModel):
    """网格搜索设置"""

    points: int = Field(11, description="每轴网格点数", ge=3)
    sweeps: int = Field(3, description="每个阶段的Gauss–Seidel扫描次数", ge=1)
    refinements: int = Field(2, description="半宽减半的细化次数", ge=0)
    iterations: int = Field(1, description="完整迭代次数", ge=1)
    full_coarse: bool = Field(True, description="粗阶段是否评估完整张量网格")

    @field_validator("points")
    @classmethod
    def odd_points(cls, value: int) -> int:
        return value if value % 2 == 1 else value + 1


@dataclass
class SearchResult:
    theta: np.ndarray
    value: float
    resolution: np.ndarray
    evaluations: int
    on_boundary: bool
    trace: List[Dict[str, object]] = field(default_factory=list)


class _CachedObjective:
    def __init__(self, objective: Callable[[np.ndarray], float]):
        self.objective = objective
        self.cache: Dict[Tuple[float, ...], float] = {}

    def __call__(self, theta: np.ndarray) -> float:
        key = tuple(np.round(theta, 15).tolist())
        if key not in self.cache:
            try:
                value = float(self.objective(np.asarray(theta, dtype=float)))
            except IndiiError as e:
                logger.debug(f"网格点 {np.round(theta, 6)} 无效: {e}")
                value = np.inf
            self.cache[key] = value if np.isfinite(value) else np.inf
        return self.cache[key]


def _sweep(objective: _CachedObjective, theta: np.ndarray, value: float, span: np.ndarray,
           bounds: np.ndarray, points: int) -> Tuple[np.ndarray, float]:
    for i in range(theta.size):
        candidates = np.unique(np.clip(theta[i] + np.linspace(-span[i], span[i], points), bounds[i, 0], bounds[i, 1]))
        for candidate in candidates:
            trial = theta.copy()
            trial[i] = candidate
            trial_value = objective(trial)
            if trial_value < value:
                theta, value = trial, trial_value
    return theta, value


def gauss_seidel_grid(
    objective: Callable[[np.ndarray], float],
    bounds: Sequence[Sequence[float]],
    grid: Optional[GridSpec] = None,
    start: Optional[Sequence[float]] = None,
) -> SearchResult:
    """
    迭代Gauss–Seidel网格搜索

    Args:
        objective: 目标函数 θ → 非负实数，不可容许点可以抛出IndiiError或返回inf
        bounds: 每个坐标的 [下界, 上界]
        grid: 网格设置
        start: 不做完整粗网格时的起点，缺省为区间中点

    Returns:
        SearchResult，resolution 为最终网格间距

    Raises:
        NoConvergence: 所有网格点都无效
    """
    grid = grid or GridSpec()
    bounds = np.asarray(bounds, dtype=float).reshape(-1, 2)
    if np.any(bounds[:, 1] < bounds[:, 0]):
        raise ValueError("网格上界必须不小于下界")
    cached = _CachedObjective(objective)
    step = (bounds[:, 1] - bounds[:, 0]) / (grid.points - 1)
    trace: List[Dict[str, object]] = []

    if grid.full_coarse:
        axes = [np.linspace(lo, hi, grid.points) for lo, hi in bounds]
        best_theta, best_value = None, np.inf
        for point in itertools.product(*axes):
            theta = np.array(point)
            value = cached(theta)
            if value < best_value:
                best_theta, best_value = theta, value
        if best_theta is None:
            best_theta = bounds.mean(axis=1)
    else:
        best_theta = bounds.mean(axis=1) if start is None else np.asarray(start, dtype=float)
        best_value = cached(best_theta)
    trace.append({"stage": "coarse", "theta": best_theta.tolist(), "value": best_value})

    span = step.copy()
    for iteration in range(grid.iterations):
        span = step.copy()
        for level in range(grid.refinements + 1):
            for sweep in range(grid.sweeps):
                best_theta, best_value = _sweep(cached, best_theta, best_value, span, bounds, grid.points)
            trace.append({"stage": f"iteration{iteration}-level{level}", "theta": best_theta.tolist(), "value": best_value})
            if level < grid.refinements:
                span = span / 2.0

    if not np.isfinite(best_value):
        raise NoConvergence("网格搜索中所有点的目标函数都无效", best=best_theta)

    resolution = 2.0 * span / (grid.points - 1)
    on_boundary = bool(np.any(best_theta - bounds[:, 0] <= resolution * 0.5) or np.any(bounds[:, 1] - best_theta <= resolution * 0.5))
    if on_boundary:
        logger.warning(f"网格搜索的最优点位于参数空间边界: θ={np.round(best_theta, 6)}")
    return SearchResult(
        theta=best_theta,
        value=best_value,
        resolution=resolution,
        evaluations=len(cached.cache),
        on_boundary=on_boundary,
        trace=trace,
    )
