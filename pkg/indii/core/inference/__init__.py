"""间接推断模块 - 模拟准则、矩向量、网格搜索、估计量与渐近方差"""

from .estimators import (
    VARIANTS,
    IIConfig,
    IIEstimate,
    IndirectInference,
    create_ii_config,
    estimate_score_ii,
    estimate_wald_c,
    estimate_wald_cfs,
    normalize_variant,
)
from .moments import beta_tilde_c, beta_tilde_cfs, beta_tilde_func_demo, m_bar, m_cfs, moment_identity_residual
from .search import GridSpec, SearchResult, gauss_seidel_grid
from .simulated import PooledCriterion, SimulatedCriterion
from .variance import (
    AsymptoticVariance,
    InfoMatrices,
    RankCheck,
    asymptotic_variance,
    dL_dtheta,
    estimate_info_matrices,
    exponential_family_rank_check,
    newey_west_bandwidth,
    optimal_weighting,
)

__all__ = [
    "VARIANTS",
    "AsymptoticVariance",
    "GridSpec",
    "IIConfig",
    "IIEstimate",
    "IndirectInference",
    "InfoMatrices",
    "PooledCriterion",
    "RankCheck",
    "SearchResult",
    "SimulatedCriterion",
    "asymptotic_variance",
    "beta_tilde_c",
    "beta_tilde_cfs",
    "beta_tilde_func_demo",
    "create_ii_config",
    "dL_dtheta",
    "estimate_info_matrices",
    "estimate_score_ii",
    "estimate_wald_c",
    "estimate_wald_cfs",
    "exponential_family_rank_check",
    "gauss_seidel_grid",
    "m_bar",
    "m_cfs",
    "moment_identity_residual",
    "newey_west_bandwidth",
    "normalize_variant",
    "optimal_weighting",
]
