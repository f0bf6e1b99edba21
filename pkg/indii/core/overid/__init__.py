"""过度识别模块 - 合成矩系统、选择矩阵、方差公式与最优选择矩阵"""

from .selection import (
    OverIdEstimate,
    avar_beta,
    binding_slope,
    default_C,
    gls_theta,
    ii_avar_theta,
    naive_optimal_A,
    optimal_A_for_theta,
    random_selection,
    selection_names,
    selection_rank_ok,
    selection_report,
    solve_selected,
    standard_selections,
    theta_information,
    wald_ii_overid,
)
from .systems import (
    SYSTEMS,
    LinearAlsSystem,
    MomentSystem,
    NonlinearAlsSystem,
    PowerMomentGmmSystem,
    conflict_instance,
    create_moment_system,
)

__all__ = [
    "SYSTEMS",
    "LinearAlsSystem",
    "MomentSystem",
    "NonlinearAlsSystem",
    "OverIdEstimate",
    "PowerMomentGmmSystem",
    "avar_beta",
    "binding_slope",
    "conflict_instance",
    "create_moment_system",
    "default_C",
    "gls_theta",
    "ii_avar_theta",
    "naive_optimal_A",
    "optimal_A_for_theta",
    "random_selection",
    "selection_names",
    "selection_rank_ok",
    "selection_report",
    "solve_selected",
    "standard_selections",
    "theta_information",
    "wald_ii_overid",
]
