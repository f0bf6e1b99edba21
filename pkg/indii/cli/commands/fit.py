"""fit-aux / func / score-test 子命令：观测数据上的约束辅助估计及其衍生量"""
import logging

import numpy as np

from indii.cli.common import (RunConfig, add_common_arguments, build_criterion, emit, fit_payload, load_observations,
                              resolve_criterion, resolved)
from indii.core.constrained import create_maximizer_from_config, func_estimator, score_test
from indii.utils.env_loader import get_section

# 配置日志
logger = logging.getLogger(__name__)

_KEYS = ["data", "criterion", "spec"]


def _add_inputs(parser) -> None:
    parser.add_argument("--data", required=True, help="观测数据CSV（y 列，probit另需 x_* 列）")
    parser.add_argument("--criterion", choices=["garch", "garch-t", "probit0"], help="辅助准则，缺省取 auxiliary.criterion")
    parser.add_argument("--spec", help="YAML约束规格，替换缺省规格")
    add_common_arguments(parser)


def register(subparsers) -> None:
    fit_parser = subparsers.add_parser("fit-aux", help="约束辅助估计与KT乘子")
    _add_inputs(fit_parser)
    fit_parser.set_defaults(handler=run_fit)

    func_parser = subparsers.add_parser("func", help="FUNC单步无约束估计")
    _add_inputs(func_parser)
    func_parser.set_defaults(handler=run_func)

    test_parser = subparsers.add_parser("score-test", help="等式约束的得分检验")
    _add_inputs(test_parser)
    test_parser.add_argument("--level", type=float, default=0.05, help="显著性水平")
    test_parser.set_defaults(handler=run_score_test)


def _fit(args, config):
    resolve_criterion(args, config)
    files = [args.data] + ([args.spec] if args.spec else [])
    RunConfig(subcommand=args.command, criterion=args.criterion, files=files, out=args.out)
    data = load_observations(args.data, args.criterion)
    criterion = build_criterion(args.criterion, config, args.spec, data)
    maximizer = create_maximizer_from_config(get_section(config, "constrained"))
    return criterion, maximizer.maximize(criterion, data)


def run_fit(args, config) -> int:
    _, fit = _fit(args, config)
    emit({"fit": fit_payload(fit)}, args.out, "fit.json", resolved(args, config, _KEYS))
    return 0


def run_func(args, config) -> int:
    criterion, fit = _fit(args, config)
    func = func_estimator(fit)
    slack = criterion.spec.slack(func.beta_hat, fit.T)
    violated = [name for name, s, eq in zip(criterion.spec.names, slack, criterion.spec.equality_mask) if not eq and s < 0]
    payload = {
        "fit": fit_payload(fit),
        "beta_hat": dict(zip(criterion.param_names, np.asarray(func.beta_hat).tolist())),
        "step": func.step,
        "ridge": func.ridge,
        "violated": violated,
    }
    emit(payload, args.out, "func.json", resolved(args, config, _KEYS))
    return 0


def run_score_test(args, config) -> int:
    _, fit = _fit(args, config)
    func = func_estimator(fit)
    result = score_test(fit, func)
    payload = {
        "fit": fit_payload(fit),
        "xi": result.xi,
        "df": result.df,
        "p_value": result.p_value,
        "level": args.level,
        "reject": result.reject(args.level),
    }
    emit(payload, args.out, "score_test.json", resolved(args, config, _KEYS + ["level"]))
    return 0
