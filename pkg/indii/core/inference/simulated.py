"""
模拟准则

Q_TH(θ, β) = (1/H)Σ_h Q_T^{(h)}(θ, β)：结构模型在冻结新息库上模拟H条路径，
辅助准则在每条路径上求值后取平均。新息库固定，因此对 (θ, β) 是确定性的。
"""
import logging
from typing import Any, Optional, Sequence, Tuple

import numpy as np

from indii.core.auxiliary.base import Criterion, CriterionEval
from indii.core.constrained.optimizer import ConstrainedFit, ConstrainedMaximizer
from indii.core.errors import IndiiError, ParameterError
from indii.core.simulation.innovations import InnovationBank
from indii.core.simulation.models import StructuralModel

# 配置日志
logger = logging.getLogger(__name__)


class PooledCriterion(Criterion):
    """
    H条模拟路径上的合并准则，数据为路径元组

    约束规格与样本长度沿用单条路径。
    """

    def __init__(self, criterion: Criterion):
        super().__init__(criterion.spec)
        self.base = criterion
        self.name = f"pooled-{criterion.name}"

    def evaluate(self, beta: np.ndarray, data: Sequence[Any]) -> CriterionEval:
        return CriterionEval.average([self.base.evaluate(beta, path) for path in data])

    def contributions(self, beta: np.ndarray, data: Sequence[Any]) -> np.ndarray:
        return np.mean([self.base.contributions(beta, path) for path in data], axis=0)

    def sample_size(self, data: Sequence[Any]) -> int:
        return self.base.sample_size(data[0])

    def default_start(self, data: Sequence[Any]) -> np.ndarray:
        return self.base.default_start(data[0])


class SimulatedCriterion:
    """
    结构模型 + 辅助准则 + 冻结新息库

    最近一次θ的模拟路径被缓存，同一θ上的多次求值不重复模拟。
    """

    def __init__(self, model: StructuralModel, criterion: Criterion, bank: InnovationBank,
                 maximizer: Optional[ConstrainedMaximizer] = None):
        if bank.k != model.innovation_columns:
            raise ParameterError(f"新息库列数 {bank.k} 与模型 {model.name} 需要的 {model.innovation_columns} 不一致")
        self.model = model
        self.criterion = criterion
        self.bank = bank
        self.pooled = PooledCriterion(criterion)
        self.maximizer = maximizer or ConstrainedMaximizer()
        self._cache: Optional[Tuple[bytes, Tuple[Any, ...]]] = None

    @property
    def H(self) -> int:
        return self.bank.H

    def paths(self, theta: Sequence[float]) -> Tuple[Any, ...]:
        """在θ处模拟H条路径"""
        theta = np.asarray(theta, dtype=float)
        key = theta.tobytes()
        if self._cache is not None and self._cache[0] == key:
            return self._cache[1]
        paths = tuple(self.model.simulate(theta, self.bank.path(h)) for h in range(self.bank.H))
        self._cache = (key, paths)
        return paths

    def evaluate(self, theta: Sequence[float], beta: np.ndarray) -> CriterionEval:
        """Q_TH(θ, β) 及其对β的得分与Hessian"""
        try:
            return self.pooled.evaluate(beta, self.paths(theta))
        except IndiiError as e:
            e.context.setdefault("theta", np.asarray(theta, dtype=float))
            raise

    def fit(self, theta: Sequence[float], start: Optional[np.ndarray] = None) -> ConstrainedFit:
        """模拟路径上的合并约束估计 (β̃ᵣ_TH(θ), λ̃_TH(θ))"""
        try:
            return self.maximizer.maximize(self.pooled, self.paths(theta), start)
        except IndiiError as e:
            e.context.setdefault("theta", np.asarray(theta, dtype=float))
            raise
