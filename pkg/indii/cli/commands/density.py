"""density 子命令：对估计结果做高斯核密度估计"""
import logging
import sys
from pathlib import Path

import pandas as pd

from indii.cli.common import RunConfig
from indii.core.errors import UsageError
from indii.core.montecarlo import kernel_density
from indii.utils.io import write_csv

# 配置日志
logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("density", help="核密度估计")
    parser.add_argument("--input", required=True, help="CSV文件，例如 montecarlo 输出的 raw.csv")
    parser.add_argument("--column", required=True, help="列名")
    parser.add_argument("--trim", type=float, default=0.015, help="剔除的下尾比例")
    parser.add_argument("--bandwidth", type=float, help="带宽，缺省为Silverman规则")
    parser.add_argument("--out", help="输出目录；缺省打印到标准输出")
    parser.set_defaults(handler=run)


def run(args, config) -> int:
    RunConfig(subcommand="density", files=[args.input], out=args.out)
    frame = pd.read_csv(args.input)
    if args.column not in frame.columns:
        raise UsageError(f"{args.input} 中没有列 {args.column}")
    if "ok" in frame.columns:
        frame = frame[frame["ok"].astype(bool)]
    grid, density = kernel_density(frame[args.column].dropna().to_numpy(), args.bandwidth, args.trim)
    table = pd.DataFrame({"grid": grid, "density": density})
    if args.out is None:
        table.to_csv(sys.stdout, index=False, float_format="%.10g")
    else:
        write_csv(Path(args.out) / f"density_{args.column}.csv", table)
    return 0
