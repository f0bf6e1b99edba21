"""辅助准则模块 - GARCH、Student-t GARCH与约束probit伪对数似然及其约束规格"""

from typing import Any, Dict, Optional

from indii.core.errors import UsageError

from .base import Criterion, CriterionEval
from .constraints import (
    Constraint,
    ConstraintSpec,
    FunctionConstraint,
    LinearConstraint,
    build_constraint_spec,
    constraint_values,
    garch_constraints,
    load_constraint_spec,
    probit_constraints,
    with_bound,
)
from .garch import (
    GaussianGarchCriterion,
    StudentGarchCriterion,
    garch_filter,
    garch_gaussian_eval,
    garch_student_eval,
)
from .probit import ProbitZeroCriterion, generalized_residuals, probit_constrained_eval
from .synthetic import GaussianLocationCriterion, LinearGaussianModel, QuadraticCriterion, QuadraticData

CRITERIA = ("garch", "garch-t", "probit0")


def create_criterion(name: str, config: Optional[Dict[str, Any]] = None, spec: Optional[ConstraintSpec] = None) -> Criterion:
    """
    根据名称和auxiliary配置段创建准则

    Args:
        name: garch | garch-t | probit0
        config: auxiliary配置段（constraint_spec, phi_bound, eta_bound, hessian_rule, start, d_beta1）
        spec: 显式给出的约束规格，优先于配置
    """
    config = config or {}
    phi_bound = config.get("phi_bound", {})
    eta_bound = config.get("eta_bound", {})
    start = config.get("start", {})
    bound_kwargs = dict(
        phi_c=float(phi_bound.get("c", 0.1)),
        phi_kappa=float(phi_bound.get("kappa", 0.49)),
        eta_c=float(eta_bound.get("c", 0.1)),
        eta_kappa=float(eta_bound.get("kappa", 0.49)),
    )

    if name == "garch":
        spec = spec or build_constraint_spec(config.get("constraint_spec", "garch"), **bound_kwargs)
        return GaussianGarchCriterion(spec, start.get("phi", 0.05), start.get("pi", 0.85))
    if name == "garch-t":
        spec = spec or build_constraint_spec(config.get("constraint_spec_t", "garch_t"), **bound_kwargs)
        return StudentGarchCriterion(spec, start.get("phi", 0.05), start.get("pi", 0.85), start.get("eta", 0.1))
    if name == "probit0":
        d_beta1 = int(config.get("d_beta1", 2))
        spec = spec or build_constraint_spec("probit0", d_beta1=d_beta1)
        return ProbitZeroCriterion(d_beta1, spec, config.get("hessian_rule", "exact"))
    raise UsageError(f"未知的辅助准则: {name}，可选 {CRITERIA}")


__all__ = [
    "CRITERIA",
    "Constraint",
    "ConstraintSpec",
    "Criterion",
    "CriterionEval",
    "FunctionConstraint",
    "GaussianGarchCriterion",
    "GaussianLocationCriterion",
    "LinearConstraint",
    "LinearGaussianModel",
    "ProbitZeroCriterion",
    "QuadraticCriterion",
    "QuadraticData",
    "StudentGarchCriterion",
    "build_constraint_spec",
    "constraint_values",
    "create_criterion",
    "garch_constraints",
    "garch_filter",
    "garch_gaussian_eval",
    "garch_student_eval",
    "generalized_residuals",
    "load_constraint_spec",
    "probit_constraints",
    "probit_constrained_eval",
    "with_bound",
]
