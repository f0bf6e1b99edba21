"""
结构参数模型

SvParams与ProbitParams在构造时校验可容许性（|δ| < 1, σ_v > 0, |θ₂| < 1），
违反时抛出pydantic的ValidationError。
"""
from typing import List, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator


class SvParams(BaseModel):
    """对数正态随机波动率模型参数 θ = (α, δ, σ_v)'"""

    model_config = ConfigDict(frozen=True)

    alpha: float = Field(..., description="对数波动率的水平")
    delta: float = Field(..., description="对数波动率的持续性，|δ| < 1")
    sigma_v: float = Field(..., description="波动率的波动率，> 0")

    @field_validator("delta")
    @classmethod
    def check_delta(cls, value: float) -> float:
        if not abs(value) < 1.0:
            raise ValueError(f"|delta| 必须小于1，当前为 {value}")
        return value

    @field_validator("sigma_v")
    @classmethod
    def check_sigma_v(cls, value: float) -> float:
        if not value > 0.0:
            raise ValueError(f"sigma_v 必须为正，当前为 {value}")
        return value

    @field_validator("alpha")
    @classmethod
    def check_alpha(cls, value: float) -> float:
        if not np.isfinite(value):
            raise ValueError("alpha 必须有限")
        return value

    def as_array(self) -> np.ndarray:
        return np.array([self.alpha, self.delta, self.sigma_v], dtype=float)

    @classmethod
    def from_array(cls, values: Sequence[float]) -> "SvParams":
        alpha, delta, sigma_v = (float(v) for v in values)
        return cls(alpha=alpha, delta=delta, sigma_v=sigma_v)

    @staticmethod
    def names() -> List[str]:
        return ["alpha", "delta", "sigma_v"]


class ProbitParams(BaseModel):
    """动态probit模型参数：回归系数θ₁与潜在误差的AR(1)系数θ₂"""

    model_config = ConfigDict(frozen=True)

    theta1: List[float] = Field(..., description="回归系数", min_length=1)
    theta2: float = Field(..., description="潜在误差的AR(1)系数，|θ₂| < 1")

    @field_validator("theta2")
    @classmethod
    def check_theta2(cls, value: float) -> float:
        if not abs(value) < 1.0:
            raise ValueError(f"|theta2| 必须小于1，当前为 {value}")
        return value

    @field_validator("theta1")
    @classmethod
    def check_theta1(cls, value: List[float]) -> List[float]:
        if not np.all(np.isfinite(value)):
            raise ValueError("theta1 必须有限")
        return [float(v) for v in value]

    def as_array(self) -> np.ndarray:
        return np.array(list(self.theta1) + [self.theta2], dtype=float)

    @classmethod
    def from_array(cls, values: Sequence[float]) -> "ProbitParams":
        values = [float(v) for v in values]
        return cls(theta1=values[:-1], theta2=values[-1])

    def names(self) -> List[str]:
        return [f"theta1_{i}" for i in range(len(self.theta1))] + ["theta2"]
