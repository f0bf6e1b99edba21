"""蒙特卡洛模块 - 设计、并行重复、汇总统计与核密度估计"""

from .designs import PRESETS, McDesign, create_design
from .harness import McResult, default_workers, replication_seeds, run_design, run_replication, run_replications
from .summary import (
    BindingSummary,
    McSummary,
    ParamSummary,
    binding_table,
    bootstrap_median_ci,
    density_frames,
    kernel_density,
    parameter_statistics,
    silverman_bandwidth,
    summarize,
)

__all__ = [
    "PRESETS",
    "BindingSummary",
    "McDesign",
    "McResult",
    "McSummary",
    "ParamSummary",
    "binding_table",
    "bootstrap_median_ci",
    "create_design",
    "default_workers",
    "density_frames",
    "kernel_density",
    "parameter_statistics",
    "replication_seeds",
    "run_design",
    "run_replication",
    "run_replications",
    "silverman_bandwidth",
    "summarize",
]
