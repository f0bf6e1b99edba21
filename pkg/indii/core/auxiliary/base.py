"""
辅助准则基础类型

准则Q按样本均值缩放（除以T）；CriterionEval直接保存 ∂²Q/∂β∂β'，
使用方取负号得到 J。
"""
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, List

import numpy as np

from indii.core.auxiliary.constraints import ConstraintSpec
from indii.core.errors import ParameterError

# 配置日志
logger = logging.getLogger(__name__)

SYMMETRY_TOL = 1e-10


@dataclass(frozen=True)
class CriterionEval:
    """准则在一点处的取值、得分向量与Hessian矩阵"""

    value: float
    score: np.ndarray
    hessian: np.ndarray

    def __post_init__(self):
        score = np.asarray(self.score, dtype=float).reshape(-1)
        hessian = np.asarray(self.hessian, dtype=float).reshape(score.size, score.size)
        object.__setattr__(self, "score", score)
        object.__setattr__(self, "hessian", 0.5 * (hessian + hessian.T))
        object.__setattr__(self, "value", float(self.value))

    @property
    def dim(self) -> int:
        return self.score.size

    @classmethod
    def average(cls, evals: List["CriterionEval"]) -> "CriterionEval":
        """多个求值结果的算术平均（模拟准则 Q_TH）"""
        return cls(
            value=float(np.mean([e.value for e in evals])),
            score=np.mean([e.score for e in evals], axis=0),
            hessian=np.mean([e.hessian for e in evals], axis=0),
        )


class Criterion(ABC):
    """
    辅助准则抽象基类

    把 (β, 数据) 映射为CriterionEval，并携带约束规格。
    求值是确定性的，对象构造后不再修改，可在多个线程或进程中共享。
    """

    name: str = ""

    def __init__(self, spec: ConstraintSpec):
        self.spec = spec

    @abstractmethod
    def evaluate(self, beta: np.ndarray, data: Any) -> CriterionEval:
        """
        计算准则值、得分与Hessian

        Args:
            beta: 辅助参数
            data: 观测数据（GARCH为序列，probit为ProbitData）

        Returns:
            CriterionEval
        """
        pass

    @abstractmethod
    def contributions(self, beta: np.ndarray, data: Any) -> np.ndarray:
        """逐观测的得分贡献，形状 (T, d_β)，其列均值等于得分"""
        pass

    @abstractmethod
    def sample_size(self, data: Any) -> int:
        pass

    @abstractmethod
    def default_start(self, data: Any) -> np.ndarray:
        pass

    @property
    def param_names(self) -> List[str]:
        return list(self.spec.param_names)

    @property
    def d_beta(self) -> int:
        return len(self.spec.param_names)

    def value(self, beta: np.ndarray, data: Any) -> float:
        return self.evaluate(beta, data).value

    def check_beta(self, beta: np.ndarray) -> np.ndarray:
        beta = np.asarray(beta, dtype=float).reshape(-1)
        if beta.size != self.d_beta:
            raise ParameterError(f"{self.name} 的参数维数应为 {self.d_beta}，当前为 {beta.size}")
        if not np.all(np.isfinite(beta)):
            raise ParameterError("辅助参数必须有限", context={"beta": beta})
        return beta
