"""
配置加载工具

读取YAML配置文件，替换形如 ${ENV_VAR} 的环境变量引用，
并按“内置默认值 < 配置文件 < 命令行参数”的顺序合并配置。
"""
import copy
import logging
import os
import re
from pathlib import Path
from typing import Any, Dict, Optional, Union

import yaml

from indii.core.errors import UsageError

logger = logging.getLogger(__name__)

_ENV_PATTERN = re.compile(r"\$\{([A-Za-z0-9_]+)\}")


def process_env_vars(value: Any) -> Any:
    """
    处理配置中的环境变量引用

    替换形如 ${ENV_VAR} 的字符串为实际的环境变量值

    Args:
        value: 可能包含环境变量引用的值

    Returns:
        处理后的值
    """
    if isinstance(value, str):
        def replace_env_var(match):
            env_var_name = match.group(1)
            env_var_value = os.environ.get(env_var_name)
            if env_var_value is None:
                logger.warning(f"环境变量 {env_var_name} 未定义")
                return match.group(0)  # 未定义则保持原样
            return env_var_value

        return _ENV_PATTERN.sub(replace_env_var, value)

    elif isinstance(value, dict):
        return {k: process_env_vars(v) for k, v in value.items()}

    elif isinstance(value, list):
        return [process_env_vars(item) for item in value]

    return value


def process_config(config: Dict[str, Any]) -> Dict[str, Any]:
    """处理配置字典中的所有环境变量引用"""
    return process_env_vars(config)


def load_config(config_path: Union[str, Path, None] = "config.yml") -> Dict[str, Any]:
    """
    加载配置文件

    Args:
        config_path: 配置文件路径；为None时返回空配置

    Returns:
        处理过环境变量引用的配置字典

    Raises:
        UsageError: 文件不存在或不是合法的YAML映射
    """
    if config_path is None:
        return {}

    path = Path(config_path)
    if not path.exists():
        raise UsageError(f"配置文件不存在: {path}")

    try:
        with open(path, "r", encoding="utf-8") as file:
            config = yaml.safe_load(file) or {}
    except yaml.YAMLError as e:
        raise UsageError(f"无法解析配置文件 {path}: {e}") from e

    if not isinstance(config, dict):
        raise UsageError(f"配置文件 {path} 顶层必须是映射")

    logger.debug(f"从 {path} 加载配置，共 {len(config)} 个配置段")
    return process_config(config)


def merge_config(base: Dict[str, Any], overrides: Optional[Dict[str, Any]]) -> Dict[str, Any]:
    """
    递归合并配置，overrides中值为None的键被忽略

    Args:
        base: 基础配置
        overrides: 覆盖项（通常来自命令行参数）

    Returns:
        合并后的新字典，不修改输入
    """
    merged = copy.deepcopy(base)
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = merge_config(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def get_section(config: Dict[str, Any], name: str) -> Dict[str, Any]:
    """取出配置段，不存在时返回空字典"""
    section = config.get(name) or {}
    if not isinstance(section, dict):
        raise UsageError(f"配置段 {name} 必须是映射")
    return section
