"""
异常定义

indii所有可预期的失败都从IndiiError派生，命令行层据此区分
用法错误（退出码1）与数值失败（退出码2）。
"""
from typing import Any, Optional, Sequence

import numpy as np


class IndiiError(Exception):
    """indii异常基类"""

    def __init__(self, message: str, context: Optional[dict] = None):
        super().__init__(message)
        self.context = context or {}

    def __str__(self) -> str:
        base = super().__str__()
        if not self.context:
            return base
        details = ", ".join(f"{k}={_fmt(v)}" for k, v in self.context.items())
        return f"{base} ({details})"


def _fmt(value: Any) -> str:
    if isinstance(value, np.ndarray):
        return np.array2string(value, precision=6, separator=",")
    return str(value)


class UsageError(IndiiError):
    """命令行参数或配置文件错误"""


class ParameterError(IndiiError, ValueError):
    """参数违反可容许性约束"""


class SimulationError(IndiiError):
    """模拟路径出现非有限值"""


class NonPositiveVariance(IndiiError):
    """GARCH条件方差不为正"""


class DomainError(IndiiError):
    """在准则函数定义域之外求值"""


class Infeasible(IndiiError):
    """找不到严格可行的起点"""


class NoConvergence(IndiiError):
    """迭代达到上限仍未收敛，best保存当前最优迭代点"""

    def __init__(self, message: str, best: Any = None, context: Optional[dict] = None):
        super().__init__(message, context)
        self.best = best


class SingularHessian(IndiiError):
    """Hessian矩阵奇异或条件数过大"""


class NonConcavity(IndiiError):
    """得分检验统计量为负，准则在该点非凹"""


class SingularAGamma(IndiiError):
    """选择矩阵与Γ之积AΓ不可逆"""


class RankDeficiency(IndiiError):
    """矩阵列秩不足"""

    def __init__(self, message: str, columns: Sequence[int] = (), context: Optional[dict] = None):
        super().__init__(message, context)
        self.columns = list(columns)

    def __str__(self) -> str:
        return f"{super().__str__()} [秩亏列: {self.columns}]"


class NonIdentification(IndiiError):
    """信息矩阵奇异，θ不可识别"""


class InadmissibleC(IndiiError):
    """补充矩阵C不满足最优选择矩阵的条件"""


class DegenerateSample(IndiiError):
    """样本退化（零方差或样本量不足）"""
