"""
日志工具

按config.yml中的logging配置段初始化根日志器。
"""
import logging
import logging.handlers
from pathlib import Path
from typing import Any, Dict, Optional

DEFAULT_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def setup_logging(config: Optional[Dict[str, Any]] = None, verbosity: int = 0) -> None:
    """
    配置日志

    Args:
        config: logging配置段（level, format, file, max_file_size_mb, backup_count）
        verbosity: 命令行 -v 的次数，大于0时强制DEBUG
    """
    config = config or {}
    level_name = "DEBUG" if verbosity > 0 else str(config.get("level", "INFO")).upper()
    level = getattr(logging, level_name, logging.INFO)
    fmt = config.get("format", DEFAULT_FORMAT)

    root = logging.getLogger()
    root.setLevel(level)
    for handler in list(root.handlers):
        root.removeHandler(handler)

    console = logging.StreamHandler()
    console.setFormatter(logging.Formatter(fmt))
    root.addHandler(console)

    log_file = config.get("file")
    if log_file:
        Path(log_file).parent.mkdir(parents=True, exist_ok=True)
        file_handler = logging.handlers.RotatingFileHandler(
            log_file,
            maxBytes=int(config.get("max_file_size_mb", 10)) * 1024 * 1024,
            backupCount=int(config.get("backup_count", 5)),
            encoding="utf-8",
        )
        file_handler.setFormatter(logging.Formatter(fmt))
        root.addHandler(file_handler)

    logging.getLogger(__name__).debug(f"日志已配置: 级别={level_name}, 文件={log_file}")
