# -*- coding: utf-8 -*-
"""gaittracks 命令行入口。

子命令：
    accuracy      自适应与批量模型的精度-经验对比
    drag-change   阻力比切换下的适应
    optimize      门控步态优化
    simulate      导出单条轨迹

示例：
    $ gaittracks accuracy --preset desk --seed 7 --out ./results
    $ gaittracks optimize --links 9 --cycles 100 --config study.toml

退出码：0 成功，2 配置错误，3 数值或模型错误，4 结果读写错误。
"""

import argparse
import logging
import sys
from typing import Optional, Sequence

from .config import load_settings
from .errors import ConfigError, ModelError, NumericalError, ResultsIOError
from .experiments.accuracy import run_accuracy_experiment
from .experiments.drag_change import run_drag_change_experiment
from .experiments.optimization import run_optimization_experiment
from .experiments.runner import ensure_dir
from .experiments.settings import ExperimentConfig, load_experiment_config
from .experiments.simulate import run_simulation
from .logfire_utils import configure_logfire

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4

RUNNERS = {
    "accuracy": run_accuracy_experiment,
    "drag-change": run_drag_change_experiment,
    "optimize": run_optimization_experiment,
    "simulate": run_simulation,
}


class _Parser(argparse.ArgumentParser):
    """参数错误抛出 ConfigError，由 main 统一映射到退出码 2。"""

    def error(self, message: str):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gaittracks", description="自适应几何模型与门控步态优化实验。")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name in RUNNERS:
        sub = subparsers.add_parser(name, help=f"run the {name} experiment")
        sub.add_argument("--config", type=str, help="TOML 或 JSON 实验配置文件")
        sub.add_argument("--seed", type=int, help="实验种子（u64）")
        sub.add_argument("--out", type=str, help="结果输出目录")
        sub.add_argument("--links", type=int, help="连杆数（奇数）")
        sub.add_argument("--cycles", type=int, help="周期数或经验预算")
        sub.add_argument("--preset", choices=["desk", "paper"], default="desk", help="基础预设")
        sub.add_argument("--workers", type=int, help="并行进程数")
    return parser


def cli_overrides(args: argparse.Namespace) -> dict:
    """把命令行参数转换为配置覆盖项；--cycles 的含义随子命令而定。"""
    overrides: dict = {"family": args.command}
    if args.seed is not None:
        overrides["seed"] = args.seed
        overrides["seeds"] = None
    if args.out is not None:
        overrides["output_dir"] = args.out
    if args.workers is not None:
        overrides["workers"] = args.workers
    if args.links is not None:
        overrides["swimmer"] = {"n_links": args.links}
        overrides["optimization"] = {"link_counts": [args.links]}
    if args.cycles is not None:
        n = args.cycles
        if args.command == "accuracy":
            checkpoints = list(range(5, n + 1, 5)) or [n]
            if checkpoints[-1] != n:
                checkpoints.append(n)
            overrides["accuracy"] = {"cycles": n, "checkpoints": checkpoints}
        elif args.command == "drag-change":
            overrides["drag_change"] = {"train_cycles": n, "stream_cycles": n}
        elif args.command == "optimize":
            study = overrides.setdefault("optimization", {})
            study["default_budget"] = n
            study["budgets"] = {"3": n, "5": n, "9": n}
        else:
            overrides["simulate"] = {"cycles": n}
    return overrides


def run(cfg: ExperimentConfig) -> dict:
    out_dir = ensure_dir(cfg.output_dir)
    logger.info("running %s experiment into %s", cfg.family, out_dir)
    return RUNNERS[cfg.family](cfg, out_dir)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """解析参数、加载配置并运行实验，返回退出码。"""
    try:
        args = build_parser().parse_args(argv)
        try:
            settings = load_settings()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        configure_logfire(settings)
        cfg = load_experiment_config(
            args.config,
            args.preset,
            cli_overrides(args),
            defaults={"output_dir": settings.output_dir, "workers": settings.workers},
        )
        run(cfg)
    except ConfigError as exc:
        logger.error("configuration error: %s", exc)
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, ModelError) as exc:
        logger.error("numerical failure: %s", exc)
        return EXIT_NUMERICAL
    except (ResultsIOError, OSError) as exc:
        logger.error("results I/O error: %s", exc)
        return EXIT_IO
    return EXIT_OK


__all__ = ["EXIT_OK", "EXIT_CONFIG", "EXIT_NUMERICAL", "EXIT_IO", "build_parser", "cli_overrides", "main", "run"]
