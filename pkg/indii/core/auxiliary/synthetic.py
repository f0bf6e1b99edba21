"""
合成准则

二次准则 Q(β) = -½(β - b)'P(β - b) 与高斯位置准则 Q(β) = -(1/2T)Σ(y_t - β)²，
以及与之配套的线性高斯结构模型，用于可手算的精确性检验。
"""
import logging
from typing import List, NamedTuple, Optional, Sequence

import numpy as np

from indii.core.auxiliary.base import Criterion, CriterionEval
from indii.core.auxiliary.constraints import ConstraintSpec
from indii.core.errors import ParameterError
from indii.core.simulation.models import StructuralModel
from indii.utils.linalg import require_positive_definite

logger = logging.getLogger(__name__)


class QuadraticData(NamedTuple):
    """二次准则的数据：中心b，可选的曲率矩阵P与名义样本长度"""

    center: np.ndarray
    curvature: Optional[np.ndarray] = None
    T: int = 1


class QuadraticCriterion(Criterion):
    """Q(β) = -½(β - b)'P(β - b)；数据中给出曲率时覆盖默认曲率"""

    name = "quadratic"

    def __init__(self, spec: ConstraintSpec, curvature: Optional[np.ndarray] = None):
        super().__init__(spec)
        d = len(spec.param_names)
        self.curvature = require_positive_definite(np.eye(d) if curvature is None else curvature, "曲率矩阵P")

    def _curvature(self, data: QuadraticData) -> np.ndarray:
        return self.curvature if data.curvature is None else np.asarray(data.curvature, dtype=float)

    def evaluate(self, beta: np.ndarray, data: QuadraticData) -> CriterionEval:
        beta = self.check_beta(beta)
        curvature = self._curvature(data)
        diff = beta - np.asarray(data.center, dtype=float)
        return CriterionEval(value=-0.5 * diff @ curvature @ diff, score=-curvature @ diff, hessian=-curvature)

    def contributions(self, beta: np.ndarray, data: QuadraticData) -> np.ndarray:
        return self.evaluate(beta, data).score[None, :]

    def sample_size(self, data: QuadraticData) -> int:
        return int(data.T)

    def default_start(self, data: QuadraticData) -> np.ndarray:
        return np.zeros(self.d_beta)


class GaussianLocationCriterion(Criterion):
    """Q(β) = -(1/2T)Σ(y_t - β)²，Î 应接近样本方差，Ĵ = 1"""

    name = "location"

    def evaluate(self, beta: np.ndarray, data: np.ndarray) -> CriterionEval:
        beta = self.check_beta(beta)
        y = np.asarray(data, dtype=float)
        resid = y - beta[0]
        return CriterionEval(value=-0.5 * np.mean(resid**2), score=[np.mean(resid)], hessian=[[-1.0]])

    def contributions(self, beta: np.ndarray, data: np.ndarray) -> np.ndarray:
        beta = self.check_beta(beta)
        return (np.asarray(data, dtype=float) - beta[0])[:, None]

    def sample_size(self, data: np.ndarray) -> int:
        return int(np.size(data))

    def default_start(self, data: np.ndarray) -> np.ndarray:
        return np.zeros(1)


class LinearGaussianModel(StructuralModel):
    """
    线性高斯结构模型：中心 b(θ) = Lθ + scale·ε̄，ε̄ 为新息路径的均值

    可选的曲率随θ线性变化 P(θ) = P₀ + Σ_i θ_i P_i，用于检验依赖于θ的模拟Hessian。
    """

    name = "linear-gaussian"

    def __init__(self, loading: np.ndarray, scale: float = 1.0, T: int = 100,
                 base_curvature: Optional[np.ndarray] = None, curvature_slopes: Sequence[np.ndarray] = ()):
        self.loading = np.atleast_2d(np.asarray(loading, dtype=float))
        self.scale = float(scale)
        self.T = int(T)
        self.base_curvature = None if base_curvature is None else np.asarray(base_curvature, dtype=float)
        self.curvature_slopes = [np.asarray(s, dtype=float) for s in curvature_slopes]
        self.innovation_columns = self.loading.shape[0]

    def param_names(self) -> List[str]:
        return [f"theta_{i}" for i in range(self.loading.shape[1])]

    def make_params(self, theta: Sequence[float]) -> np.ndarray:
        theta = np.asarray(theta, dtype=float).reshape(-1)
        if theta.size != self.loading.shape[1] or not np.all(np.isfinite(theta)):
            raise ParameterError("线性高斯模型参数维数不符或非有限", context={"theta": theta})
        return theta

    def simulate(self, theta: Sequence[float], bank_path: np.ndarray) -> QuadraticData:
        theta = self.make_params(theta)
        noise = np.asarray(bank_path, dtype=float)[1:].mean(axis=0)
        center = self.loading @ theta + self.scale * noise
        curvature = None
        if self.base_curvature is not None:
            curvature = self.base_curvature + sum(t * s for t, s in zip(theta, self.curvature_slopes))
        return QuadraticData(center=center, curvature=curvature, T=self.T)
