"""
indii 命令行入口

退出码：0 成功；1 用法错误（未知参数、配置错误、文件缺失、缺少 --seed）；2 数值失败。
"""
import argparse
import logging
import re
import sys
from pathlib import Path
from typing import List, Optional

from pydantic import ValidationError

from indii import __version__
from indii.cli.commands import COMMANDS
from indii.core.errors import IndiiError, UsageError
from indii.utils.env_loader import get_section, load_config
from indii.utils.logger import setup_logging

# 配置日志
logger = logging.getLogger(__name__)

DEFAULT_CONFIG = "config.yml"

# 如 -0.736,0.90,0.363 与 -1e-3
_NUMBER = r"-?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
NEGATIVE_LIST = re.compile(rf"^-(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?(?:,{_NUMBER})*$")


class CliParser(argparse.ArgumentParser):
    """参数错误时抛出UsageError而不是直接退出；逗号分隔的负数列表按参数值处理"""

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self._negative_number_matcher = NEGATIVE_LIST

    def error(self, message: str):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = CliParser(prog="indii", description="带约束辅助模型的间接推断")
    parser.add_argument("--config", "-c", default=None, help=f"配置文件路径，缺省读取存在的 {DEFAULT_CONFIG}")
    parser.add_argument("--verbose", "-v", action="count", default=0, help="输出DEBUG日志")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", parser_class=CliParser)
    subparsers.required = True
    for command in COMMANDS:
        command.register(subparsers)
    return parser


def _load(path: Optional[str]):
    if path is None:
        return load_config(DEFAULT_CONFIG) if Path(DEFAULT_CONFIG).exists() else {}
    return load_config(path)


def main(argv: Optional[List[str]] = None) -> int:
    """解析参数并分派子命令，返回退出码"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        config = _load(args.config)
    except SystemExit as e:
        return int(e.code or 0)
    except UsageError as e:
        sys.stderr.write(f"indii: 错误: {e}\n")
        return 1

    setup_logging(get_section(config, "logging"), args.verbose)
    try:
        return int(args.handler(args, config) or 0)
    except (UsageError, ValidationError, FileNotFoundError) as e:
        logger.error(f"用法错误: {e}")
        sys.stderr.write(f"indii: 错误: {e}\n")
        return 1
    except IndiiError as e:
        logger.error(f"数值失败: {e}")
        sys.stderr.write(f"indii: 数值失败: {e}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
