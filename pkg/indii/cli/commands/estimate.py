"""estimate 子命令：间接推断估计"""
import logging

from indii.cli.common import (RunConfig, add_common_arguments, build_criterion, emit, load_observations, load_weighting,
                              resolve_criterion, resolved)
from indii.core.constrained import create_maximizer_from_config
from indii.core.inference import VARIANTS, IndirectInference, create_ii_config
from indii.core.simulation import ProbitModel, SvModel
from indii.utils.env_loader import get_section, merge_config

# 配置日志
logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("estimate", help="间接推断估计结构参数")
    parser.add_argument("--data", required=True, help="观测数据CSV")
    parser.add_argument("--criterion", choices=["garch", "garch-t", "probit0"], help="辅助准则，缺省取 auxiliary.criterion")
    parser.add_argument("--spec", help="YAML约束规格")
    parser.add_argument("--variant", choices=[v.replace("_", "-") for v in VARIANTS], help="估计量")
    parser.add_argument("--H", type=int, help="模拟路径数")
    parser.add_argument("--W", help="加权矩阵（CSV或YAML）")
    parser.add_argument("--grid-points", type=int, help="每轴网格点数")
    parser.add_argument("--no-variance", action="store_true", help="不计算Ω̂与Ω̂*")
    add_common_arguments(parser, seed=True)
    parser.set_defaults(handler=run)


def run(args, config) -> int:
    resolve_criterion(args, config)
    files = [args.data] + [f for f in (args.spec, args.W) if f]
    RunConfig(subcommand="estimate", criterion=args.criterion, files=files, seed=args.seed, out=args.out)
    overrides = {
        "variant": args.variant,
        "H": args.H,
        "seed": args.seed,
        "W": load_weighting(args.W),
        "report_variance": False if args.no_variance else None,
    }
    if args.grid_points is not None:
        overrides["grid"] = {"points": args.grid_points}
    estimation = merge_config(get_section(config, "estimation"), overrides)
    ii_config = create_ii_config(estimation)

    data = load_observations(args.data, args.criterion)
    criterion = build_criterion(args.criterion, config, args.spec, data)
    model = ProbitModel(data.x) if args.criterion == "probit0" else SvModel()
    maximizer = create_maximizer_from_config(get_section(config, "constrained"))
    estimate = IndirectInference(model, criterion, ii_config, maximizer).estimate(data)

    echo = merge_config(config, {"estimation": ii_config.model_dump()})
    emit({"estimate": estimate.to_dict()}, args.out, "estimate.json",
         resolved(args, echo, ["data", "criterion", "spec", "variant", "H", "W", "seed"]))
    return 0
