"""约束估计模块 - 约束极大化、KT乘子、FUNC估计、得分检验与投影分解诊断"""

from .func import (
    FuncEstimate,
    ProjectionDiagnostic,
    ScoreTestResult,
    func_estimator,
    projection_decomposition,
    regularized_hessian,
    score_test,
)
from .optimizer import (
    ConstrainedFit,
    ConstrainedMaximizer,
    OptimizerOptions,
    create_maximizer_from_config,
    maximize_constrained,
    negative_definite,
    recover_multipliers,
)
from .qp import QPResult, solve_qp

__all__ = [
    "ConstrainedFit",
    "ConstrainedMaximizer",
    "FuncEstimate",
    "ProjectionDiagnostic",
    "OptimizerOptions",
    "QPResult",
    "ScoreTestResult",
    "create_maximizer_from_config",
    "func_estimator",
    "projection_decomposition",
    "maximize_constrained",
    "negative_definite",
    "recover_multipliers",
    "regularized_hessian",
    "score_test",
    "solve_qp",
]
