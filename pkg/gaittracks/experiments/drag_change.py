# -*- coding: utf-8 -*-
"""阻力比切换实验：先在 k₀ 下训练，再不加通知地依次切换到新的阻力比。

自适应模型（每个 λ_RLS 一个）逐样本先预测后摄入；批量模型在训练数据上
拟合后冻结。记录每个样本的对数预测误差。
"""

import logging
from pathlib import Path
from typing import Optional

import logfire
import numpy as np

from ..adaptive_model import FilterBank
from ..batch_model import SampleStore, fit_batch
from ..gait import PerturbationState
from ..metrics import log_prediction_errors
from ..rng import derive_seed
from ..se2 import GroupElement
from ..swimmer import simulate_cycle
from .plotting import error_timeseries
from .runner import header_lines, run_trials, write_csv, write_json
from .settings import ExperimentConfig

logger = logging.getLogger(__name__)


def model_labels(lambdas) -> list[str]:
    return ["batch"] + [f"rls_{lam:g}" for lam in lambdas]


def drag_change_trial(cfg: ExperimentConfig, seed: int, control: bool = False) -> dict:
    """一次切换试验。

    参数：
        cfg: 实验配置
        seed: 试验种子
        control: True 时保持训练阻力比不变（空干预对照）

    返回：
        dict: t、drag_ratio 与各模型的逐样本对数误差（数组）
    """
    spec = cfg.drag_change
    params = cfg.swimmer.model_copy(update={"drag_ratio": spec.train_drag_ratio})
    gait = cfg.gait.build(params.n_links)
    alpha, beta, eta = cfg.perturbation.resolve(gait.period)
    state = PerturbationState.create(params.shape_dim, alpha, beta, eta, derive_seed(seed, 0))
    grid = cfg.model.grid()
    order = cfg.model.smoothing_order

    train = simulate_cycle(gait, params, cfg.dt, state, cycles=spec.train_cycles)
    batch = fit_batch(SampleStore(params.shape_dim).extend_from_record(train), grid, gait, order)
    banks = [
        FilterBank(grid, gait, lam, cfg.model.p0, order, cfg.model.p_max)
        for lam in spec.lambdas
    ]
    for bank in banks:
        bank.ingest_many(train.phi, train.r, train.r_dot, train.xi)

    ratios = [spec.train_drag_ratio] * len(spec.switch_drag_ratios) if control else spec.switch_drag_ratios
    pose: GroupElement = train.final_pose
    t0 = spec.train_cycles * gait.period
    times, drag, errors = [], [], {label: [] for label in model_labels(spec.lambdas)}
    for k in ratios:
        segment = simulate_cycle(
            gait,
            params.model_copy(update={"drag_ratio": k}),
            cfg.dt,
            state,
            cycles=spec.stream_cycles,
            g0=pose,
            t0=t0,
        )
        pose = segment.final_pose
        t0 += spec.stream_cycles * gait.period
        times.append(segment.t)
        drag.append(np.full(len(segment.t), k))
        errors["batch"].append(
            log_prediction_errors(batch.predict_many(segment.phi, segment.r, segment.r_dot), segment.xi)
        )
        for lam, bank in zip(spec.lambdas, banks):
            predictions = np.empty((len(segment.t), 3))
            for i in range(len(segment.t)):
                predictions[i] = bank.predict_many(segment.phi[i], segment.r[i], segment.r_dot[i])[0]
                bank.ingest_sample(segment.phi[i], segment.r[i], segment.r_dot[i], segment.xi[i])
            errors[f"rls_{lam:g}"].append(log_prediction_errors(predictions, segment.xi))

    return {
        "t": np.concatenate(times),
        "drag_ratio": np.concatenate(drag),
        "errors": {label: np.concatenate(chunks) for label, chunks in errors.items()},
        "steps_per_cycle": train.steps_per_cycle,
    }


def _bin_edges(steps_per_cycle: int, n_cycles: int, bins_per_cycle: int) -> np.ndarray:
    within = np.round(np.linspace(0, steps_per_cycle, bins_per_cycle + 1)).astype(int)
    edges = [c * steps_per_cycle + within[:-1] for c in range(n_cycles)]
    return np.append(np.concatenate(edges), n_cycles * steps_per_cycle)


def cycle_medians(results: list[dict], label: str, bins_per_cycle: int = 1) -> np.ndarray:
    """每个流周期（或周期内每个相位段）中，所有种子所有样本上预测误差（非对数）的中位数。"""
    steps = results[0]["steps_per_cycle"]
    if not 1 <= bins_per_cycle <= steps:
        raise ValueError(f"bins_per_cycle must lie in [1, {steps}], got {bins_per_cycle}")
    stacked = np.vstack([np.exp(r["errors"][label]) for r in results])
    edges = _bin_edges(steps, stacked.shape[1] // steps, bins_per_cycle)
    return np.array([np.median(stacked[:, a:b]) for a, b in zip(edges[:-1], edges[1:])])


def cycles_to_recover(
    adaptive: np.ndarray,
    frozen: np.ndarray,
    fraction: float,
    start: int,
    length: int,
    bins_per_cycle: int = 1,
) -> Optional[float]:
    """切换后第一次满足 adaptive < fraction·frozen 时经过的周期数。

    adaptive、frozen 是逐段中位数，start、length 以段为单位；返回该段结束时
    距切换的周期数，bins_per_cycle = 1 时即从 1 开始的周期序号。
    """
    for b in range(length):
        if adaptive[start + b] < fraction * frozen[start + b]:
            return (b + 1) / bins_per_cycle
    return None


def run_drag_change_experiment(cfg: ExperimentConfig, out_dir: Path) -> dict:
    """运行切换实验并写出 drag_change_errors.csv、drag_change_cycles.csv、
    drag_change_errors.svg 与 drag_change_summary.json。"""
    spec = cfg.drag_change
    control = spec.control
    seeds = cfg.trial_seeds(cfg.trials)
    labels = model_labels(spec.lambdas)
    config = cfg.resolved()
    prefix = "drag_change_control" if control else "drag_change"

    with logfire.span("drag-change experiment", trials=len(seeds), control=control):
        results = run_trials(drag_change_trial, [(cfg, s, control) for s in seeds], cfg.workers)

    rows = []
    for seed, result in zip(seeds, results):
        for i in range(len(result["t"])):
            rows.append(
                (seed, result["t"][i], result["drag_ratio"][i])
                + tuple(result["errors"][label][i] for label in labels)
            )
    write_csv(
        out_dir / f"{prefix}_errors.csv",
        ["seed", "t", "drag_ratio"] + [f"log_error_{label}" for label in labels],
        rows,
        header_lines(config, seeds),
    )

    medians = {label: cycle_medians(results, label) for label in labels}
    n_cycles = len(medians["batch"])
    write_csv(
        out_dir / f"{prefix}_cycles.csv",
        ["cycle", "drag_ratio"] + [f"median_error_{label}" for label in labels],
        [
            (c + 1, results[0]["drag_ratio"][c * results[0]["steps_per_cycle"]])
            + tuple(medians[label][c] for label in labels)
            for c in range(n_cycles)
        ],
        header_lines(config, seeds),
    )

    t = results[0]["t"]
    median_log = {
        label: np.median(np.vstack([r["errors"][label] for r in results]), axis=0)
        for label in labels
    }
    switch_times = [
        (spec.train_cycles + j * spec.stream_cycles) * cfg.gait.period
        for j in range(len(spec.switch_drag_ratios))
    ]
    error_timeseries(out_dir / f"{prefix}_errors.svg", t, median_log, switch_times, config)

    bins = spec.recovery_bins
    binned = {label: cycle_medians(results, label, bins) for label in labels}
    recovery = {
        label: [
            cycles_to_recover(
                binned[label],
                binned["batch"],
                spec.error_fraction,
                j * spec.stream_cycles * bins,
                spec.stream_cycles * bins,
                bins,
            )
            for j in range(len(spec.switch_drag_ratios))
        ]
        for label in labels[1:]
    }
    summary = {
        "config": config,
        "seeds": seeds,
        "control": control,
        "cycles_to_recover": recovery,
        "recovery_bins_per_cycle": bins,
        "median_error_per_cycle": {label: medians[label].tolist() for label in labels},
    }
    write_json(out_dir / f"{prefix}_summary.json", summary)
    logger.info("drag-change experiment finished: cycles to recover %s", recovery)
    return summary


__all__ = [
    "model_labels",
    "drag_change_trial",
    "cycle_medians",
    "cycles_to_recover",
    "run_drag_change_experiment",
]
