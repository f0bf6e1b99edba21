"""模拟模块 - 结构模型参数、冻结新息库与路径模拟"""

from .innovations import InnovationBank, default_covariates, derive_seed, draw_innovation_bank, draw_path, make_generator
from .models import (
    ProbitData,
    ProbitModel,
    StructuralModel,
    SvModel,
    coefficient_of_variation,
    create_structural_model,
    simulate_probit,
    simulate_sv,
)
from .params import ProbitParams, SvParams

__all__ = [
    "InnovationBank",
    "ProbitData",
    "ProbitModel",
    "ProbitParams",
    "StructuralModel",
    "SvModel",
    "SvParams",
    "coefficient_of_variation",
    "create_structural_model",
    "default_covariates",
    "derive_seed",
    "draw_innovation_bank",
    "draw_path",
    "make_generator",
    "simulate_probit",
    "simulate_sv",
]
