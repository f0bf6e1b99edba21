"""
约束规格

约定 g_j(β) ≥ a_{j,T}，a_{j,T} = c_j·T^{-κ_j}；等式约束直接编码为 g_j(β) = 0。
constraint_values 返回松弛量 g(β) - a_T 以及Jacobian（q × d_β，第j行为 ∂g_j/∂β'）。
"""
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Dict, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
import yaml
from pydantic import BaseModel, Field, ValidationError, field_validator

from indii.core.errors import ParameterError, UsageError

# 配置日志
logger = logging.getLogger(__name__)

INEQUALITY = "inequality"
EQUALITY = "equality"


@dataclass(frozen=True)
class Constraint:
    """单个约束，bound(T) = c·T^{-κ}（等式约束恒为0）"""

    name: str
    kind: str = INEQUALITY
    c: float = 0.0
    kappa: float = 0.0

    def bound(self, T: int) -> float:
        if self.kind == EQUALITY:
            return 0.0
        return self.c * float(T) ** (-self.kappa)

    def g(self, beta: np.ndarray) -> float:
        raise NotImplementedError

    def grad(self, beta: np.ndarray) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True)
class LinearConstraint(Constraint):
    coefficients: Tuple[float, ...] = ()
    offset: float = 0.0

    def g(self, beta: np.ndarray) -> float:
        return float(np.dot(self.coefficients, beta) + self.offset)

    def grad(self, beta: np.ndarray) -> np.ndarray:
        return np.asarray(self.coefficients, dtype=float)


@dataclass(frozen=True)
class FunctionConstraint(Constraint):
    """一般光滑约束；优化器忽略其曲率"""

    func: Optional[Callable[[np.ndarray], float]] = None
    gradient: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def g(self, beta: np.ndarray) -> float:
        return float(self.func(beta))

    def grad(self, beta: np.ndarray) -> np.ndarray:
        return np.asarray(self.gradient(beta), dtype=float)


@dataclass(frozen=True)
class ConstraintSpec:
    """一组约束及其参数名"""

    name: str
    param_names: Tuple[str, ...]
    constraints: Tuple[Constraint, ...] = field(default_factory=tuple)

    @property
    def q(self) -> int:
        return len(self.constraints)

    @property
    def names(self) -> List[str]:
        return [c.name for c in self.constraints]

    @property
    def equality_mask(self) -> np.ndarray:
        return np.array([c.kind == EQUALITY for c in self.constraints], dtype=bool)

    @property
    def n_equalities(self) -> int:
        return int(self.equality_mask.sum())

    @property
    def is_linear(self) -> bool:
        return all(isinstance(c, LinearConstraint) for c in self.constraints)

    def bounds(self, T: int) -> np.ndarray:
        return np.array([c.bound(T) for c in self.constraints], dtype=float)

    def g(self, beta: np.ndarray) -> np.ndarray:
        return np.array([c.g(beta) for c in self.constraints], dtype=float)

    def jacobian(self, beta: np.ndarray) -> np.ndarray:
        if not self.constraints:
            return np.zeros((0, len(self.param_names)))
        return np.vstack([c.grad(beta) for c in self.constraints])

    def slack(self, beta: np.ndarray, T: int) -> np.ndarray:
        return self.g(beta) - self.bounds(T)

    def is_feasible(self, beta: np.ndarray, T: int, tol: float = 1e-10) -> bool:
        slack = self.slack(beta, T)
        eq = self.equality_mask
        return bool(np.all(slack[~eq] >= -tol) and np.all(np.abs(slack[eq]) <= tol))

    def index(self, name: str) -> int:
        return self.names.index(name)


def constraint_values(beta: np.ndarray, spec: ConstraintSpec, T: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    约束松弛量与Jacobian

    Args:
        beta: 辅助参数
        spec: 约束规格
        T: 样本长度（决定漂移界 a_T）

    Returns:
        (g(β) - a_T, ∂g/∂β')，后者形状 (q, d_β)
    """
    beta = np.asarray(beta, dtype=float)
    return spec.slack(beta, T), spec.jacobian(beta)


def _unit(param_names: Sequence[str], name: str, sign: float = 1.0) -> Tuple[float, ...]:
    coefficients = np.zeros(len(param_names))
    coefficients[list(param_names).index(name)] = sign
    return tuple(coefficients.tolist())


def garch_param_names(student: bool = False) -> Tuple[str, ...]:
    return ("psi", "phi", "pi", "eta") if student else ("psi", "phi", "pi")


def probit_param_names(d_beta1: int) -> Tuple[str, ...]:
    return tuple(f"beta1_{i}" for i in range(d_beta1)) + ("beta2",)


def garch_constraints(
    student: bool = False,
    phi_c: float = 0.1,
    phi_kappa: float = 0.49,
    eta_c: float = 0.1,
    eta_kappa: float = 0.49,
    name: Optional[str] = None,
) -> ConstraintSpec:
    """
    GARCH(1,1)的约束：φ ≥ c·T^{-κ}，ψ ≥ 0，π ≥ 0，1 - φ - π ≥ 0；
    Student-t 另加 .5 - η ≥ c_η·T^{-κ_η} 与 η ≥ 0。
    """
    names = garch_param_names(student)
    d = len(names)
    constraints: List[Constraint] = [
        LinearConstraint(name="phi_floor", c=phi_c, kappa=phi_kappa, coefficients=_unit(names, "phi")),
        LinearConstraint(name="psi_nonneg", coefficients=_unit(names, "psi")),
        LinearConstraint(name="pi_nonneg", coefficients=_unit(names, "pi")),
        LinearConstraint(
            name="stationarity",
            coefficients=tuple(-1.0 if n in ("phi", "pi") else 0.0 for n in names),
            offset=1.0,
        ),
    ]
    if student:
        constraints += [
            LinearConstraint(name="eta_cap", c=eta_c, kappa=eta_kappa, coefficients=_unit(names, "eta", -1.0), offset=0.5),
            LinearConstraint(name="eta_nonneg", coefficients=_unit(names, "eta")),
        ]
    default_name = "garch_t" if student else "garch"
    logger.debug(f"构造约束规格 {name or default_name}: d_β={d}, q={len(constraints)}")
    return ConstraintSpec(name=name or default_name, param_names=names, constraints=tuple(constraints))


def probit_constraints(d_beta1: int) -> ConstraintSpec:
    """等式约束 β₂ = 0，编码为松弛量 -β₂"""
    names = probit_param_names(d_beta1)
    zero_ar = LinearConstraint(name="beta2_zero", kind=EQUALITY, coefficients=_unit(names, "beta2", -1.0))
    return ConstraintSpec(name="probit0", param_names=names, constraints=(zero_ar,))


def build_constraint_spec(name: str, d_beta1: int = 2, phi_c: float = 0.1, phi_kappa: float = 0.49,
                          eta_c: float = 0.1, eta_kappa: float = 0.49) -> ConstraintSpec:
    """
    按名称构造内置约束规格

    garch / garch_t 使用漂移界；garch_fixed / garch_t_fixed 使用固定界 φ ≥ .025, η ≤ .499。
    """
    if name == "garch":
        return garch_constraints(False, phi_c, phi_kappa)
    if name == "garch_t":
        return garch_constraints(True, phi_c, phi_kappa, eta_c, eta_kappa)
    if name == "garch_fixed":
        return garch_constraints(False, 0.025, 0.0, name="garch_fixed")
    if name == "garch_t_fixed":
        return garch_constraints(True, 0.025, 0.0, 0.001, 0.0, name="garch_t_fixed")
    if name == "probit0":
        return probit_constraints(d_beta1)
    raise UsageError(f"未知的约束规格: {name}")


class BoundRecord(BaseModel):
    c: float = Field(0.0, description="界的常数c", ge=0.0)
    kappa: float = Field(0.0, description="界的衰减指数κ", ge=0.0)


class ConstraintRecord(BaseModel):
    """约束文件中的一条线性约束：coefficients·β + offset ≥ c·T^{-κ}（或 = 0）"""

    name: str = Field(..., description="约束名称")
    kind: Literal["inequality", "equality"] = Field(INEQUALITY, description="约束类型")
    coefficients: Dict[str, float] = Field(..., description="参数名到系数的映射")
    offset: float = Field(0.0, description="常数项")
    bound: BoundRecord = Field(default_factory=BoundRecord, description="漂移界")

    @field_validator("coefficients")
    @classmethod
    def check_coefficients(cls, value: Dict[str, float]) -> Dict[str, float]:
        if not value:
            raise ValueError("coefficients 不能为空")
        return value


def load_constraint_spec(source: Union[str, Path, dict], param_names: Sequence[str], name: Optional[str] = None) -> ConstraintSpec:
    """
    从YAML文件或映射读取线性约束规格

    文档格式为 {constraints: [{name, kind, coefficients: {param: value}, offset, bound: {c, kappa}}]}。
    """
    if isinstance(source, dict):
        document = source
        default_name = "custom"
    else:
        path = Path(source)
        if not path.exists():
            raise UsageError(f"约束文件不存在: {path}")
        try:
            with open(path, "r", encoding="utf-8") as f:
                document = yaml.safe_load(f) or {}
        except yaml.YAMLError as e:
            raise UsageError(f"无法解析约束文件 {path}: {e}") from e
        default_name = path.stem

    if not isinstance(document, dict) or not isinstance(document.get("constraints"), list):
        raise UsageError("约束文件必须包含 constraints 列表")

    param_names = tuple(param_names)
    constraints = []
    for raw in document["constraints"]:
        try:
            record = ConstraintRecord(**raw)
        except (TypeError, ValidationError) as e:
            raise UsageError(f"约束记录不合法: {e}") from e
        unknown = set(record.coefficients) - set(param_names)
        if unknown:
            raise UsageError(f"约束 {record.name} 引用了未知参数: {sorted(unknown)}")
        coefficients = tuple(float(record.coefficients.get(p, 0.0)) for p in param_names)
        constraints.append(
            LinearConstraint(
                name=record.name,
                kind=record.kind,
                c=record.bound.c,
                kappa=record.bound.kappa,
                coefficients=coefficients,
                offset=record.offset,
            )
        )
    spec = ConstraintSpec(name=name or document.get("name", default_name), param_names=param_names,
                          constraints=tuple(constraints))
    logger.info(f"加载约束规格 {spec.name}: {spec.q} 个约束")
    return spec


def with_bound(spec: ConstraintSpec, constraint_name: str, c: float, kappa: float) -> ConstraintSpec:
    """替换某个约束的界常数，返回新规格"""
    if constraint_name not in spec.names:
        raise ParameterError(f"约束 {constraint_name} 不存在于规格 {spec.name}")
    constraints = tuple(
        replace(con, c=c, kappa=kappa) if con.name == constraint_name else con for con in spec.constraints
    )
    return replace(spec, constraints=constraints)
