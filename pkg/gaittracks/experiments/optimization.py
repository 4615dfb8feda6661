# -*- coding: utf-8 -*-
"""多连杆、多种子的门控步态优化实验。

开启 cold_reset_ablation 时，每个种子再以"更新后丢弃模型"的方式运行一次，
两者在第一次步态更新之前逐位相同，之后比较重新通过门控所需的周期数。
"""

import logging
from pathlib import Path
from typing import Optional

import logfire
import numpy as np

from ..optimizer import optimize
from ..records import TrialRecord
from .plotting import progress_plot
from .runner import header_lines, percentile_row, run_trials, write_csv, write_json
from .settings import ExperimentConfig

logger = logging.getLogger(__name__)


def improvement_curve(record: TrialRecord, budget: int) -> np.ndarray:
    """第 c 个周期（1..budget）所执行名义步态相对种子步态的无噪声位移提升。

    迭代行 i 覆盖 (上一行 cycles_consumed, 本行 cycles_consumed] 区间，末行延伸到
    预算末尾。预算恰在一次更新后耗尽时末行区间为空，此时最后一个周期记为
    最终步态，使曲线终点与 relative_improvement 一致。
    """
    seed_value = record.iterations[0].nominal_displacement
    curve = np.full(budget, np.nan)
    if seed_value == 0 or budget == 0:
        return curve

    def relative(row) -> float:
        return (row.nominal_displacement - seed_value) / abs(seed_value)

    start = 0
    for row in record.iterations[:-1]:
        end = min(row.cycles_consumed, budget)
        curve[start:end] = relative(row)
        start = end
    curve[min(start, budget - 1):] = relative(record.iterations[-1])
    return curve


def cycles_to_regate(record: TrialRecord, budget: int) -> Optional[int]:
    """第一次步态更新之后，到再次通过门控所用的周期数。

    从未更新时返回 None；预算内没有再次通过时返回剩余预算加一（右删失）。
    """
    stepped = [row.cycles_consumed for row in record.iterations if row.stepped]
    if not stepped:
        return None
    if len(stepped) > 1:
        return stepped[1] - stepped[0]
    return budget - stepped[0] + 1


def first_step_improved(record: TrialRecord) -> Optional[bool]:
    """第一步梯度更新是否提高了名义步态的无噪声位移；没有更新时为 None。"""
    rows = record.iterations
    if len(rows) < 2 or not rows[0].stepped:
        return None
    return rows[1].nominal_displacement > rows[0].nominal_displacement


def optimization_trial(
    cfg: ExperimentConfig,
    n_links: int,
    seed: int,
    out_dir: str,
    cold_reset: bool = False,
) -> dict:
    """运行一次优化试验，逐行写出 TrialRecord 的两个 CSV，返回汇总与进度曲线。

    cold_reset 为 True 时每次步态更新后丢弃模型，文件名带 `_cold` 后缀。
    """
    params = cfg.swimmer.model_copy(update={"n_links": n_links})
    gait = cfg.gait.build(n_links)
    ocfg = cfg.optimizer_config(n_links)
    if cold_reset:
        ocfg = ocfg.model_copy(update={"reset_model_on_step": True})
    base = Path(out_dir) / f"optimize_{n_links}link_seed{seed}{'_cold' if cold_reset else ''}"
    header = {**header_lines(cfg.resolved(), seed), "n_links": n_links, "cold_reset": cold_reset}
    with TrialRecord(
        params.shape_dim,
        step_path=f"{base}_steps.csv",
        iteration_path=f"{base}_iterations.csv",
        header=header,
    ) as record:
        optimize(params, gait, ocfg, seed, record)
        summary = record.summary()
        curve = improvement_curve(record, ocfg.max_cycles)
    return {
        "n_links": n_links,
        "seed": seed,
        "cold_reset": cold_reset,
        "summary": summary,
        "curve": curve,
        "regate": cycles_to_regate(record, ocfg.max_cycles),
        "first_step_improved": first_step_improved(record),
    }


def _share(flags) -> Optional[float]:
    flags = [bool(f) for f in flags if f is not None]
    return sum(flags) / len(flags) if flags else None


def rebase_ablation(warm: list[dict], cold: list[dict]) -> dict:
    """按种子配对比较 rebase 与冷启动重新通过门控所需的周期数。"""
    pairs = [
        (w["regate"], c["regate"])
        for w, c in zip(warm, cold)
        if w["regate"] is not None and c["regate"] is not None
    ]
    if not pairs:
        return {
            "paired_trials": 0,
            "median_cycles_to_regate_rebase": None,
            "median_cycles_to_regate_cold_reset": None,
            "rebase_faster_share": None,
            "tie_share": None,
        }
    rebase, reset = np.array(pairs, dtype=float).T
    return {
        "paired_trials": len(pairs),
        "median_cycles_to_regate_rebase": float(np.median(rebase)),
        "median_cycles_to_regate_cold_reset": float(np.median(reset)),
        "rebase_faster_share": float(np.mean(rebase < reset)),
        "tie_share": float(np.mean(rebase == reset)),
    }


def run_optimization_experiment(cfg: ExperimentConfig, out_dir: Path) -> dict:
    """对每个连杆数、每个种子运行 optimize，写出逐试验记录、提升分位表、
    进度图与汇总 JSON；开启对照时另写 optimize_ablation.csv。"""
    seeds = cfg.trial_seeds(cfg.trials)
    config = cfg.resolved()
    link_counts = cfg.optimization.link_counts
    ablation = cfg.optimization.cold_reset_ablation
    modes = [False, True] if ablation else [False]
    tasks = [(cfg, n, s, str(out_dir), cold) for cold in modes for n in link_counts for s in seeds]

    with logfire.span("optimization experiment", trials=len(tasks), link_counts=link_counts):
        outcomes = run_trials(optimization_trial, tasks, cfg.workers)
    results = [r for r in outcomes if not r["cold_reset"]]
    cold_results = [r for r in outcomes if r["cold_reset"]]

    write_csv(
        out_dir / "optimize_trials.csv",
        [
            "n_links",
            "seed",
            "outcome",
            "iterations",
            "cycles_consumed",
            "cycles_to_final_gait",
            "seed_displacement",
            "final_displacement",
            "relative_improvement",
        ],
        [
            (
                r["n_links"],
                r["seed"],
                r["summary"]["outcome"],
                r["summary"]["iterations"],
                r["summary"]["cycles_consumed"],
                r["summary"]["cycles_to_final_gait"],
                r["summary"]["seed_displacement"],
                r["summary"]["final_displacement"],
                r["summary"]["relative_improvement"],
            )
            for r in results
        ],
        header_lines(config, seeds),
    )

    bands = {}
    percentile_rows = []
    per_links = {}
    for n in link_counts:
        group = [r for r in results if r["n_links"] == n]
        curves = np.vstack([r["curve"] for r in group])
        table = np.array(
            [[np.nan if v is None else v for v in percentile_row(curves[:, c])] for c in range(curves.shape[1])]
        )
        bands[f"{n}-link"] = table
        percentile_rows.extend((n, c + 1, *table[c]) for c in range(curves.shape[1]))

        improvements = [r["summary"]["relative_improvement"] for r in group]
        improvements = np.array([np.nan if v is None else v for v in improvements])
        final = percentile_row(improvements)
        per_links[str(n)] = {
            "median_improvement": final[2],
            "upper_quartile_improvement": final[3],
            "median_cycles_to_final_gait": float(
                np.median([r["summary"]["cycles_to_final_gait"] for r in group])
            ),
            "gate_never_passed": sum(r["summary"]["outcome"] == "gate_never_passed" for r in group),
            "improved_share": _share(
                None if np.isnan(v) else v > 0 for v in improvements
            ),
            "first_step_improved_share": _share(r["first_step_improved"] for r in group),
        }
        if ablation:
            cold_group = [r for r in cold_results if r["n_links"] == n]
            per_links[str(n)]["rebase_vs_cold_reset"] = rebase_ablation(group, cold_group)

    write_csv(
        out_dir / "optimize_progress.csv",
        ["n_links", "cycle", "p5", "p25", "p50", "p75", "p95"],
        percentile_rows,
        header_lines(config, seeds),
    )
    longest = max(len(table) for table in bands.values())
    padded = {
        label: np.vstack((table, np.full((longest - len(table), 5), np.nan)))
        for label, table in bands.items()
    }
    progress_plot(out_dir / "optimize_progress.svg", np.arange(1, longest + 1), padded, config)

    if ablation:
        write_csv(
            out_dir / "optimize_ablation.csv",
            ["n_links", "seed", "cycles_to_regate_rebase", "cycles_to_regate_cold_reset"],
            [(w["n_links"], w["seed"], w["regate"], c["regate"]) for w, c in zip(results, cold_results)],
            header_lines(config, seeds),
        )

    summary = {"config": config, "seeds": seeds, "by_links": per_links}
    write_json(out_dir / "optimize_summary.json", summary)
    logger.info("optimization experiment finished: %s", per_links)
    return summary


__all__ = [
    "improvement_curve",
    "cycles_to_regate",
    "first_step_improved",
    "rebase_ablation",
    "optimization_trial",
    "run_optimization_experiment",
]
