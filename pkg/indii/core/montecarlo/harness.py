"""
蒙特卡洛执行引擎

每次重复 r 的随机数都由主种子按计数器方式派生：
  数据 (r, 0)，新息库 (r, 1)，协变量 (r, 2)
因此结果与执行顺序、进程数无关。重复在进程池中并行，
单次重复的 IndiiError 被记录为失败并从汇总中剔除。
"""
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd
import psutil
from tqdm import tqdm

from indii.core.auxiliary import create_criterion
from indii.core.constrained.func import func_estimator, score_test
from indii.core.constrained.optimizer import create_maximizer_from_config
from indii.core.errors import IndiiError, NonIdentification
from indii.core.inference.estimators import IIConfig, IndirectInference
from indii.core.montecarlo.designs import McDesign
from indii.core.montecarlo.summary import McSummary, binding_table, density_frames, overid_variance_table, summarize
from indii.core.overid.selection import ii_avar_theta, standard_selections, wald_ii_overid
from indii.core.overid.systems import LinearAlsSystem, NonlinearAlsSystem, create_moment_system
from indii.core.simulation.innovations import derive_seed, draw_path, make_generator
from indii.core.simulation.models import create_structural_model

# 配置日志
logger = logging.getLogger(__name__)

DATA_STREAM = 0
BANK_STREAM = 1
COVARIATE_STREAM = 2


@dataclass
class McResult:
    summary: McSummary
    raw: pd.DataFrame
    bindings: pd.DataFrame
    densities: Dict[str, pd.DataFrame]
    extra_tables: Dict[str, pd.DataFrame]


def default_workers() -> int:
    return psutil.cpu_count(logical=False) or os.cpu_count() or 1


def replication_seeds(seed: int, r: int) -> Dict[str, int]:
    return {
        "data": derive_seed(seed, r, DATA_STREAM),
        "bank": derive_seed(seed, r, BANK_STREAM),
        "covariates": derive_seed(seed, r, COVARIATE_STREAM),
    }


def _structural_model(design: McDesign, seeds: Dict[str, int]):
    return create_structural_model(design.model, design.T, covariate_seed=seeds["covariates"])


def run_replication(design: McDesign, r: int) -> Dict[str, Any]:
    """
    执行第r次重复

    Returns:
        扁平字典：index, ok, error, elapsed, rss_mb，以及 beta_r_* / beta_hat_* / binding_* /
        violated_* / theta_hat_* / xi / p_value 等列
    """
    if design.model == "overid":
        return run_overid_replication(design, r)

    started = time.perf_counter()
    record: Dict[str, Any] = {"index": r, "ok": False, "error": ""}
    seeds = replication_seeds(design.seed, r)
    try:
        model = _structural_model(design, seeds)
        data = model.simulate(design.theta0, draw_path(design.T, model.innovation_columns, seeds["data"], 0))
        criterion = create_criterion(design.criterion, {"constraint_spec": design.constraint_spec, **design.auxiliary})
        maximizer = create_maximizer_from_config(design.optimizer)

        fit = maximizer.maximize(criterion, data)
        func = func_estimator(fit)
        spec = criterion.spec
        func_slack = spec.slack(func.beta_hat, fit.T)
        binding = fit.binding_mask()
        for j, name in enumerate(spec.names):
            record[f"binding_{name}"] = bool(binding[j])
            record[f"violated_{name}"] = bool(not spec.equality_mask[j] and func_slack[j] < 0.0)
        for name, beta_r, beta_hat in zip(criterion.param_names, fit.beta_r, func.beta_hat):
            record[f"beta_r_{name}"] = float(beta_r)
            record[f"beta_hat_{name}"] = float(beta_hat)

        if design.score_test:
            test = score_test(fit, func)
            record.update({"xi": test.xi, "p_value": test.p_value})

        if design.estimate:
            config = IIConfig(**{**design.estimation, "H": design.H, "variant": design.variant, "seed": seeds["bank"],
                                 "report_variance": False})
            estimate = IndirectInference(model, criterion, config, maximizer).estimate(data, fit=fit, func=func)
            for name, value in zip(design.param_names, estimate.theta_hat):
                record[f"theta_hat_{name}"] = float(value)
            record["objective"] = estimate.objective
            record["on_boundary"] = estimate.on_boundary
        record["ok"] = True
    except IndiiError as e:
        logger.warning(f"设计 {design.name} 第 {r} 次重复失败: {e}")
        record["error"] = f"{type(e).__name__}: {e}"
    record["elapsed"] = time.perf_counter() - started
    record["rss_mb"] = psutil.Process().memory_info().rss / 2**20
    return record


def _overid_system(design: McDesign):
    config = {"theta0": design.theta0[0]} if design.system == "gmm" else {}
    return create_moment_system(design.system, config)


def run_overid_replication(design: McDesign, r: int) -> Dict[str, Any]:
    """overid设计的第r次重复：同一个 ς̂_T 上比较各选择矩阵下的 θ̂[A, W*(A)]"""
    started = time.perf_counter()
    record: Dict[str, Any] = {"index": r, "ok": False, "error": ""}
    try:
        system = _overid_system(design)
        selections = standard_selections(system)
        rng = make_generator(design.seed, r, DATA_STREAM)
        sigma_hat = system.simulate_sigma(system.theta0, design.T, rng)
        linear = isinstance(system, LinearAlsSystem) and not isinstance(system, NonlinearAlsSystem)
        for name in design.compare:
            try:
                estimate = wald_ii_overid(selections[name], system, sigma_hat,
                                          method="closed_form" if linear else "grid")
                values = estimate.theta_hat
            except IndiiError as e:
                logger.debug(f"选择矩阵 {name} 在第 {r} 次重复中无法估计: {e}")
                values = np.full(system.d_theta, np.nan)
            for j, value in enumerate(values):
                record[f"theta_{name}_{j}"] = float(value)
        record["ok"] = True
    except IndiiError as e:
        logger.warning(f"设计 {design.name} 第 {r} 次重复失败: {e}")
        record["error"] = f"{type(e).__name__}: {e}"
    record["elapsed"] = time.perf_counter() - started
    return record


def _constraint_names(design: McDesign) -> List[str]:
    if design.model == "overid":
        return []
    criterion = create_criterion(design.criterion, {"constraint_spec": design.constraint_spec, **design.auxiliary})
    return list(criterion.spec.names)


def run_replications(design: McDesign, workers: Optional[int] = None, progress: bool = True) -> pd.DataFrame:
    """
    并行执行全部重复，返回按 index 排序的原始记录

    Args:
        design: 蒙特卡洛设计
        workers: 进程数，缺省为物理核数；为1时在当前进程中顺序执行
        progress: 是否显示进度条
    """
    workers = default_workers() if workers is None else max(1, int(workers))
    indices = range(design.replications)
    task = partial(run_replication, design)
    bar = tqdm(total=design.replications, desc=design.name, disable=not progress)
    records = []
    if workers == 1:
        for r in indices:
            records.append(task(r))
            bar.update(1)
    else:
        chunksize = max(1, design.replications // (workers * 8))
        with ProcessPoolExecutor(max_workers=workers) as executor:
            for record in executor.map(task, indices, chunksize=chunksize):
                records.append(record)
                bar.update(1)
    bar.close()
    return pd.DataFrame(records).sort_values("index").reset_index(drop=True)


def run_design(design: McDesign, workers: Optional[int] = None, progress: bool = True) -> McResult:
    """
    执行一个蒙特卡洛设计并汇总

    Returns:
        McResult：汇总、原始记录、约束频率表、核密度表以及 overid 方差表
    """
    logger.info(f"开始蒙特卡洛设计 {design.name}: R={design.replications}, T={design.T}")
    started = time.perf_counter()
    raw = run_replications(design, workers, progress)
    wall_time = time.perf_counter() - started

    extra_tables: Dict[str, pd.DataFrame] = {}
    if design.model == "overid":
        system = _overid_system(design)
        selections = standard_selections(system)
        avar = {}
        for name in design.compare:
            try:
                avar[name] = ii_avar_theta(selections[name], system.Gamma_theta, system.V)
            except NonIdentification:
                avar[name] = None
        summary = summarize(raw, [], [], design=design.name, wall_time=wall_time,
                            max_failure_rate=design.max_failure_rate)
        extra_tables["overid_variance"] = overid_variance_table(raw, design.compare, design.T, avar)
        summary.extra["overid_variance"] = extra_tables["overid_variance"].to_dict(orient="records")
        densities: Dict[str, pd.DataFrame] = {}
    else:
        constraint_names = _constraint_names(design)
        summary = summarize(raw, design.theta0, design.param_names, constraint_names, design=design.name,
                            wall_time=wall_time, max_failure_rate=design.max_failure_rate,
                            test_level=design.test_level)
        densities = density_frames(raw, design.param_names, design.trim_lower)

    summary.extra["resources"] = {
        "workers": default_workers() if workers is None else workers,
        "mean_replication_seconds": float(raw["elapsed"].mean()) if len(raw) else 0.0,
        "peak_rss_mb": float(raw["rss_mb"].max()) if "rss_mb" in raw and len(raw) else None,
    }
    logger.info(f"设计 {design.name} 完成: 失败 {summary.failures}/{summary.replications}，用时 {wall_time:.1f}s")
    return McResult(summary=summary, raw=raw, bindings=binding_table(summary), densities=densities,
                    extra_tables=extra_tables)
