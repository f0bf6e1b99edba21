"""overid 子命令：选择矩阵的渐近方差与蒙特卡洛方差比较"""
import logging
from pathlib import Path

import numpy as np
import pandas as pd

from indii.cli.common import RunConfig, emit, resolved
from indii.core.errors import UsageError
from indii.core.montecarlo import create_design, run_design
from indii.core.overid import create_moment_system, selection_report, standard_selections
from indii.utils.env_loader import get_section
from indii.utils.io import write_csv, write_json, write_resolved_config

# 配置日志
logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("overid", help="过度识别系统上的选择矩阵比较")
    parser.add_argument("--instance", choices=["linear", "nonlinear", "gmm", "conflict"], default="linear",
                        help="合成矩系统")
    parser.add_argument("--compare", default="naive,optimal", help="逗号分隔的选择矩阵")
    parser.add_argument("--reps", type=int, help="蒙特卡洛重复次数，0 表示只输出渐近方差")
    parser.add_argument("--T", type=int, help="样本长度")
    parser.add_argument("--threads", type=int, help="进程数，缺省为全部物理核")
    parser.add_argument("--seed", type=int, help="随机种子（必需）")
    parser.add_argument("--out", help="输出目录；缺省打印到标准输出")
    parser.set_defaults(handler=run)


def _avar_frame(report) -> pd.DataFrame:
    rows = []
    for name, entry in report.items():
        for key in ("avar_beta", "avar_theta"):
            matrix = entry[key]
            if matrix is None:
                rows.append({"selection": name, "quantity": key, "row": None, "col": None, "value": np.nan})
                continue
            for (i, j), value in np.ndenumerate(matrix):
                rows.append({"selection": name, "quantity": key, "row": i, "col": j, "value": float(value)})
    return pd.DataFrame(rows, columns=["selection", "quantity", "row", "col", "value"])


def run(args, config) -> int:
    RunConfig(subcommand="overid", seed=args.seed, out=args.out)
    section = get_section(config, "overid")
    compare = [c for c in args.compare.split(",") if c]
    system_config = {"theta0": section["theta0"]} if args.instance == "gmm" and "theta0" in section else {}
    system = create_moment_system(args.instance, system_config)
    selections = standard_selections(system)
    unknown = set(compare) - set(selections)
    if unknown:
        raise UsageError(f"未知的选择矩阵: {sorted(unknown)}")
    report = selection_report(system, {name: selections[name] for name in compare})
    payload = {"system": system.describe(), "selections": report}

    reps = args.reps if args.reps is not None else int(section.get("reps", 10000))
    echo = resolved(args, config, ["instance", "compare", "reps", "T", "seed"])
    if reps > 0:
        overrides = {"system": args.instance, "compare": compare, "replications": reps, "seed": args.seed,
                     "T": args.T or section.get("T")}
        if args.instance == "gmm":
            overrides["theta0"] = [float(system.theta0[0])]
        result = run_design(create_design("overid", overrides), workers=args.threads)
        payload["monte_carlo"] = result.summary.to_dict()
        if args.out is not None:
            write_csv(Path(args.out) / "overid_variance.csv", result.extra_tables["overid_variance"])

    if args.out is None:
        emit(payload, None, "overid.json")
        return 0
    write_csv(Path(args.out) / "overid_avar.csv", _avar_frame(report))
    write_json(Path(args.out) / "overid.json", payload)
    write_resolved_config(args.out, echo)
    return 0
