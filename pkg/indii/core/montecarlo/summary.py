"""
蒙特卡洛结果汇总与核密度估计

统计量都以重复次数R为除数：STD² + bias² = RMSE²。
"""
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from sklearn.neighbors import KernelDensity

from indii.core.errors import DegenerateSample

# 配置日志
logger = logging.getLogger(__name__)

GRID_POINTS = 512
MIN_SAMPLES = 10


@dataclass
class ParamSummary:
    true: float
    median: float
    std: float
    rmse: float
    bias: float


@dataclass
class BindingSummary:
    binding_pct: float
    violation_pct: float


@dataclass
class McSummary:
    """汇总：每个参数的统计量、每个约束的约束/违反频率、失败次数与耗时"""

    design: str
    replications: int
    failures: int
    valid: bool
    wall_time: float
    params: Dict[str, ParamSummary] = field(default_factory=dict)
    bindings: Dict[str, BindingSummary] = field(default_factory=dict)
    rejection_rate: Optional[float] = None
    extra: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "design": self.design,
            "replications": self.replications,
            "failures": self.failures,
            "valid": self.valid,
            "wall_time_seconds": self.wall_time,
            "params": {name: vars(s) for name, s in self.params.items()},
            "bindings": {name: vars(s) for name, s in self.bindings.items()},
            "rejection_rate": self.rejection_rate,
            **self.extra,
        }


def parameter_statistics(estimates: np.ndarray, true_value: float) -> ParamSummary:
    """中位数、标准差（除数R）、RMSE 与平均偏差"""
    estimates = np.asarray(estimates, dtype=float)
    errors = estimates - true_value
    return ParamSummary(
        true=float(true_value),
        median=float(np.median(estimates)),
        std=float(np.std(estimates)),
        rmse=float(np.sqrt(np.mean(errors**2))),
        bias=float(np.mean(errors)),
    )


def summarize(records: pd.DataFrame, theta0: Sequence[float], param_names: Sequence[str],
              constraint_names: Sequence[str] = (), design: str = "", wall_time: float = 0.0,
              max_failure_rate: float = 0.02, test_level: float = 0.05) -> McSummary:
    """
    汇总每次重复的记录

    Args:
        records: 每行一次重复；列 ok、theta_hat_<参数>、binding_<约束>、violated_<约束>、p_value（可选）
        theta0: 真实参数
        param_names: 参数名称
        constraint_names: 约束名称
        design: 设计名称
        wall_time: 总耗时（秒）
        max_failure_rate: 汇总有效所允许的最大失败比例
        test_level: 得分检验的显著性水平

    Returns:
        McSummary
    """
    total = len(records)
    ok = records[records["ok"]] if total else records
    failures = total - len(ok)
    valid = bool(len(ok) >= 1 and failures <= max_failure_rate * total)
    if not valid:
        logger.warning(f"设计 {design}: {failures}/{total} 次重复失败，汇总无效")

    summary = McSummary(design=design, replications=total, failures=failures, valid=valid, wall_time=wall_time)
    for name, true_value in zip(param_names, theta0):
        column = f"theta_hat_{name}"
        if column in ok and ok[column].notna().any():
            summary.params[name] = parameter_statistics(ok[column].dropna().to_numpy(), true_value)
    for name in constraint_names:
        binding, violated = f"binding_{name}", f"violated_{name}"
        if binding in ok and len(ok):
            summary.bindings[name] = BindingSummary(
                binding_pct=100.0 * float(ok[binding].astype(bool).mean()),
                violation_pct=100.0 * float(ok[violated].astype(bool).mean()) if violated in ok else 0.0,
            )
    if "p_value" in ok and ok["p_value"].notna().any():
        summary.rejection_rate = float((ok["p_value"].dropna() < test_level).mean())
    return summary


def binding_table(summary: McSummary) -> pd.DataFrame:
    """约束频率表：constraint, binding_pct, violation_pct"""
    rows = [{"constraint": name, "binding_pct": s.binding_pct, "violation_pct": s.violation_pct}
            for name, s in summary.bindings.items()]
    return pd.DataFrame(rows, columns=["constraint", "binding_pct", "violation_pct"])


def silverman_bandwidth(samples: np.ndarray) -> float:
    """1.06·σ̂·n^{-1/5}"""
    samples = np.asarray(samples, dtype=float)
    return float(1.06 * np.std(samples, ddof=1) * samples.size ** (-0.2))


def kernel_density(samples: Sequence[float], bandwidth: Optional[float] = None, trim_lower: float = 0.015,
                   grid_points: int = GRID_POINTS) -> Tuple[np.ndarray, np.ndarray]:
    """
    高斯核密度估计

    Args:
        samples: 样本
        bandwidth: 带宽，缺省为 Silverman 规则 1.06·σ̂·n^{-1/5}
        trim_lower: 先剔除最小的 ⌊trim_lower·n⌋ 个观测
        grid_points: 网格点数

    Returns:
        (grid, density)，网格覆盖 [min - 3bw, max + 3bw]

    Raises:
        DegenerateSample: 样本少于10个或方差为0
    """
    samples = np.sort(np.asarray(samples, dtype=float)[np.isfinite(samples)])
    if samples.size < MIN_SAMPLES:
        raise DegenerateSample(f"核密度估计至少需要 {MIN_SAMPLES} 个样本，当前 {samples.size} 个")
    samples = samples[int(np.floor(trim_lower * samples.size)):]
    if samples.size < MIN_SAMPLES or np.ptp(samples) == 0.0:
        raise DegenerateSample("样本方差为0或剔除后样本过少")
    bw = silverman_bandwidth(samples) if bandwidth is None else float(bandwidth)
    if bw <= 0:
        raise DegenerateSample(f"带宽必须为正，当前为 {bw}")

    grid = np.linspace(samples[0] - 3.0 * bw, samples[-1] + 3.0 * bw, grid_points)
    kde = KernelDensity(kernel="gaussian", bandwidth=bw).fit(samples[:, None])
    density = np.exp(kde.score_samples(grid[:, None]))
    return grid, density


def density_frames(records: pd.DataFrame, param_names: Sequence[str], trim_lower: float = 0.015) -> Dict[str, pd.DataFrame]:
    """每个参数估计的核密度表（grid, density），样本退化的参数被跳过"""
    frames = {}
    ok = records[records["ok"]] if len(records) else records
    for name in param_names:
        column = f"theta_hat_{name}"
        if column not in ok:
            continue
        try:
            grid, density = kernel_density(ok[column].dropna().to_numpy(), trim_lower=trim_lower)
        except DegenerateSample as e:
            logger.warning(f"参数 {name} 的核密度估计被跳过: {e}")
            continue
        frames[name] = pd.DataFrame({"grid": grid, "density": density})
    return frames


def bootstrap_median_ci(values: Sequence[float], seed: int, reps: int = 999, level: float = 0.95) -> Tuple[float, float]:
    """中位数的自助法置信区间"""
    values = np.asarray(values, dtype=float)
    rng = np.random.default_rng(seed)
    medians = np.median(rng.choice(values, size=(reps, values.size), replace=True), axis=1)
    alpha = (1.0 - level) / 2.0
    return float(np.quantile(medians, alpha)), float(np.quantile(medians, 1.0 - alpha))


def overid_variance_table(records: pd.DataFrame, selections: List[str], T: int,
                          avar: Dict[str, Optional[np.ndarray]]) -> pd.DataFrame:
    """
    overid研究：每个选择矩阵下 T·Var(θ̂) 的蒙特卡洛值与渐近方差

    avar 中为 None 的选择矩阵（θ不可识别）记为 NaN。
    """
    ok = records[records["ok"]] if len(records) else records
    rows = []
    for name in selections:
        columns = sorted(c for c in ok.columns if c.startswith(f"theta_{name}_"))
        for j, column in enumerate(columns):
            values = ok[column].dropna().to_numpy()
            mc = float(T * np.var(values)) if values.size else float("nan")
            asymptotic = avar.get(name)
            rows.append({
                "selection": name,
                "param": j,
                "mc_variance": mc,
                "avar": float(asymptotic[j, j]) if asymptotic is not None else float("nan"),
            })
    return pd.DataFrame(rows, columns=["selection", "param", "mc_variance", "avar"])
