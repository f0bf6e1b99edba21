"""
结果输出工具

JSON: UTF-8，键顺序稳定，附带schema_version字段；
CSV: 逗号分隔，带表头，'.'作小数点。
"""
import json
import logging
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Sequence, Union

import numpy as np
import pandas as pd
import yaml

logger = logging.getLogger(__name__)

SCHEMA_VERSION = "1.0"

PathLike = Union[str, Path]


def to_jsonable(value: Any) -> Any:
    """把numpy对象转换为JSON可序列化的Python对象"""
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()] if value.ndim else to_jsonable(value.item())
    if isinstance(value, (np.floating,)):
        return to_jsonable(float(value))
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, float):
        if np.isnan(value) or np.isinf(value):
            return None
        return value
    if isinstance(value, Mapping):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, set, frozenset)):
        items = sorted(value) if isinstance(value, (set, frozenset)) else value
        return [to_jsonable(v) for v in items]
    return value


def dump_json(payload: Dict[str, Any]) -> str:
    document = {"schema_version": SCHEMA_VERSION}
    document.update(to_jsonable(payload))
    return json.dumps(document, ensure_ascii=False, indent=2)


def write_json(path: PathLike, payload: Dict[str, Any]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        f.write(dump_json(payload))
    logger.info(f"已写出 {path}")
    return path


def write_csv(path: PathLike, frame: pd.DataFrame) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format="%.10g")
    logger.info(f"已写出 {path} ({len(frame)} 行)")
    return path


def read_matrix(path: PathLike, columns: Optional[Sequence[str]] = None) -> np.ndarray:
    frame = pd.read_csv(path)
    if columns is not None:
        frame = frame[list(columns)]
    return frame.to_numpy(dtype=float)


def write_resolved_config(directory: PathLike, config: Dict[str, Any]) -> Path:
    """把最终生效的配置写到输出目录，便于复现"""
    path = Path(directory) / "config_resolved.yml"
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        yaml.safe_dump(to_jsonable(config), f, allow_unicode=True, sort_keys=False)
    return path
