"""
命令行公共部分：运行配置、数据读取与结果输出
"""
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
import yaml
from pydantic import BaseModel, Field, model_validator

from indii.core.auxiliary import ConstraintSpec, create_criterion, load_constraint_spec
from indii.core.auxiliary.base import Criterion
from indii.core.errors import UsageError
from indii.core.simulation.models import ProbitData
from indii.utils.env_loader import get_section
from indii.utils.io import dump_json, read_matrix, write_json, write_resolved_config

# 配置日志
logger = logging.getLogger(__name__)

STOCHASTIC_COMMANDS = ("simulate", "estimate", "overid", "montecarlo")


class RunConfig(BaseModel):
    """一次命令行运行的设置"""

    subcommand: str = Field(..., description="子命令")
    model: Optional[str] = Field(None, description="结构模型")
    criterion: Optional[str] = Field(None, description="辅助准则")
    theta: Optional[List[float]] = Field(None, description="结构参数")
    files: List[str] = Field(default_factory=list, description="需要读取的文件")
    seed: Optional[int] = Field(None, description="随机种子")
    out: Optional[str] = Field(None, description="输出目录")
    verbosity: int = Field(0, description="-v 的次数")

    @model_validator(mode="after")
    def check_run(self) -> "RunConfig":
        missing = [f for f in self.files if not Path(f).exists()]
        if missing:
            raise ValueError(f"文件不存在: {missing}")
        if self.subcommand in STOCHASTIC_COMMANDS and self.seed is None:
            raise ValueError(f"{self.subcommand} 需要 --seed")
        return self


def parse_floats(text: Optional[str], name: str) -> Optional[List[float]]:
    """解析逗号分隔的数值，如 "-0.736,0.90,0.363" """
    if text is None:
        return None
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise UsageError(f"{name} 必须是逗号分隔的数值: {text}") from e


def load_observations(path: str, criterion: str) -> Any:
    """
    读取观测数据

    GARCH类准则读取 y 列；probit0 读取 y 列与 x_* 列。
    simulate 的多路径输出没有 y 列，此时读取第一条路径 y_0。
    """
    frame = pd.read_csv(path)
    column = "y" if "y" in frame.columns else "y_0"
    if column not in frame.columns:
        raise UsageError(f"{path} 缺少 y 列")
    y = frame[column].to_numpy(dtype=float)
    if criterion != "probit0":
        return y
    x_columns = [c for c in frame.columns if c.startswith("x_")]
    if not x_columns:
        raise UsageError(f"{path} 缺少协变量列 x_*")
    return ProbitData(y=y, x=frame[x_columns].to_numpy(dtype=float))


def build_criterion(name: str, config: Dict[str, Any], spec_path: Optional[str] = None,
                    data: Any = None) -> Criterion:
    """按名称与auxiliary配置段创建准则，--spec 给出时用YAML约束规格替换缺省规格"""
    auxiliary = dict(get_section(config, "auxiliary"))
    if name == "probit0" and isinstance(data, ProbitData):
        auxiliary["d_beta1"] = data.x.shape[1]
    criterion = create_criterion(name, auxiliary)
    if spec_path is not None:
        spec: ConstraintSpec = load_constraint_spec(spec_path, criterion.param_names)
        criterion = create_criterion(name, auxiliary, spec)
    return criterion


def resolve_criterion(args, config: Dict[str, Any]) -> str:
    """--criterion 缺省时取 auxiliary.criterion"""
    if args.criterion is None:
        args.criterion = get_section(config, "auxiliary").get("criterion") or "garch"
    return args.criterion


def load_weighting(path: Optional[str]) -> Optional[List[List[float]]]:
    if path is None:
        return None
    if path.endswith((".yml", ".yaml")):
        with open(path, "r", encoding="utf-8") as f:
            return yaml.safe_load(f)
    return read_matrix(path).tolist()


def emit(payload: Dict[str, Any], out: Optional[str], filename: str, config: Optional[Dict[str, Any]] = None) -> None:
    """结果写到 out/filename（并回显配置），未给出 out 时打印到标准输出"""
    if out is None:
        sys.stdout.write(dump_json(payload) + "\n")
        return
    write_json(Path(out) / filename, payload)
    if config is not None:
        write_resolved_config(out, config)


def fit_payload(fit) -> Dict[str, Any]:
    return {
        "param_names": fit.spec.param_names,
        "beta_r": dict(zip(fit.spec.param_names, np.asarray(fit.beta_r).tolist())),
        "multipliers": dict(zip(fit.spec.names, np.asarray(fit.lam).tolist())),
        "binding": fit.binding_names,
        "slack": dict(zip(fit.spec.names, np.asarray(fit.slack).tolist())),
        "q_value": fit.q_value,
        "converged": fit.converged,
        "iterations": fit.iterations,
        "stationarity": fit.stationarity,
        "method": fit.method,
        "T": fit.T,
    }


def add_common_arguments(parser, seed: bool = False, out: bool = True) -> None:
    if seed:
        parser.add_argument("--seed", type=int, help="随机种子（必需）")
    if out:
        parser.add_argument("--out", help="输出目录；缺省打印到标准输出")


def resolved(args, config: Dict[str, Any], keys: Sequence[str]) -> Dict[str, Any]:
    """把命令行参数并入配置，用于回显"""
    return {**config, "command": {k: getattr(args, k, None) for k in keys}}
