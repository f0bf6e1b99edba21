"""
蒙特卡洛设计

预置设计：
- jpr1 / jpr2：SV模型的两组参数，Gaussian GARCH(1,1)辅助准则，φ 的漂移界 .1T^{-.49}
- probit-null / probit-alt：动态probit，β₂ = 0 的等式约束辅助准则，θ₂⁰ = 0 或 .5
- overid：合成过度识别系统上朴素选择矩阵与最优选择矩阵的比较
"""
import logging
from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, Field, field_validator, model_validator

from indii.core.errors import UsageError
from indii.core.inference.estimators import normalize_variant
from indii.core.overid.selection import selection_names

# 配置日志
logger = logging.getLogger(__name__)


class McDesign(BaseModel):
    """一次蒙特卡洛研究的完整设置"""

    name: str = Field(..., description="设计名称")
    model: Literal["sv", "probit", "overid"] = Field(..., description="结构模型")
    theta0: List[float] = Field(..., description="真实结构参数")
    T: int = Field(500, description="样本长度", ge=2)
    replications: int = Field(1000, description="重复次数R", ge=1)
    H: int = Field(10, description="每次估计的模拟路径数", ge=1)
    criterion: str = Field("garch", description="辅助准则")
    constraint_spec: str = Field("garch", description="约束规格名称")
    variant: str = Field("score_ours", description="间接推断估计量")
    seed: int = Field(..., description="主种子")
    estimate: bool = Field(True, description="是否在每次重复中做间接推断估计")
    score_test: bool = Field(False, description="是否在每次重复中做得分检验")
    test_level: float = Field(0.05, description="得分检验的显著性水平", gt=0, lt=1)
    auxiliary: Dict[str, Any] = Field(default_factory=dict, description="auxiliary配置段覆盖项")
    optimizer: Dict[str, Any] = Field(default_factory=dict, description="约束优化器覆盖项")
    estimation: Dict[str, Any] = Field(default_factory=dict, description="网格与边界覆盖项")
    system: str = Field("linear", description="overid设计使用的矩系统")
    compare: List[str] = Field(default_factory=lambda: ["naive", "optimal"], description="overid设计比较的选择矩阵")
    trim_lower: float = Field(0.015, description="核密度估计前剔除的下尾比例", ge=0, lt=1)
    max_failure_rate: float = Field(0.02, description="汇总有效所允许的最大失败比例", ge=0, le=1)

    @field_validator("variant")
    @classmethod
    def check_variant(cls, value: str) -> str:
        return normalize_variant(value)

    @field_validator("compare")
    @classmethod
    def check_compare(cls, value: List[str]) -> List[str]:
        return selection_names(value)

    @model_validator(mode="after")
    def check_dimensions(self) -> "McDesign":
        if self.model == "sv" and len(self.theta0) != 3:
            raise ValueError("SV设计需要3个结构参数 (alpha, delta, sigma_v)")
        if self.model == "probit" and len(self.theta0) < 2:
            raise ValueError("probit设计至少需要 θ₁ 的一个分量和 θ₂")
        return self

    @property
    def param_names(self) -> List[str]:
        if self.model == "sv":
            return ["alpha", "delta", "sigma_v"]
        if self.model == "probit":
            return [f"theta1_{i}" for i in range(len(self.theta0) - 1)] + ["theta2"]
        return [f"theta_{i}" for i in range(len(self.theta0))]


PRESETS: Dict[str, Dict[str, Any]] = {
    "jpr1": {
        "model": "sv",
        "theta0": [-0.736, 0.90, 0.363],
        "criterion": "garch",
        "constraint_spec": "garch",
    },
    "jpr2": {
        "model": "sv",
        "theta0": [-0.141, 0.98, 0.0614],
        "criterion": "garch",
        "constraint_spec": "garch",
    },
    "probit-null": {
        "model": "probit",
        "theta0": [0.0, 1.0, 0.0],
        "criterion": "probit0",
        "constraint_spec": "probit0",
        "T": 1000,
        "score_test": True,
        "estimate": False,
    },
    "probit-alt": {
        "model": "probit",
        "theta0": [0.0, 1.0, 0.5],
        "criterion": "probit0",
        "constraint_spec": "probit0",
        "T": 1000,
        "score_test": True,
    },
    "overid": {
        "model": "overid",
        "theta0": [0.5],
        "criterion": "none",
        "constraint_spec": "none",
        "T": 1000,
        "replications": 10000,
        "estimate": True,
    },
}


def create_design(name: str, overrides: Optional[Dict[str, Any]] = None) -> McDesign:
    """
    按预置名称创建设计，overrides 中值为 None 的项被忽略

    Raises:
        UsageError: 未知的设计名称
    """
    if name not in PRESETS:
        raise UsageError(f"未知的蒙特卡洛设计: {name}，可选 {sorted(PRESETS)}")
    settings = {"name": name, **PRESETS[name]}
    settings.update({k: v for k, v in (overrides or {}).items() if v is not None})
    if settings["model"] == "probit":
        settings.setdefault("auxiliary", {})
        settings["auxiliary"] = {"d_beta1": len(settings["theta0"]) - 1, **settings["auxiliary"]}
    if settings["model"] == "overid" and settings.get("system") == "gmm" and "theta0" not in (overrides or {}):
        settings["theta0"] = [1.0]
    design = McDesign(**settings)
    logger.info(f"蒙特卡洛设计 {design.name}: T={design.T}, R={design.replications}, H={design.H}")
    return design
