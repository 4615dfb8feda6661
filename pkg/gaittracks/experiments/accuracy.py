# -*- coding: utf-8 -*-
"""精度-经验实验：自适应模型与批量模型在留出数据上的 Γ 随训练周期数的变化。"""

import logging
import warnings
from pathlib import Path

import logfire
import numpy as np

from ..adaptive_model import FilterBank
from ..batch_model import DegenerateRegressionWarning, SampleStore, fit_batch, fit_phase_average
from ..gait import PerturbationState
from ..metrics import gamma_batch
from ..rng import derive_seed
from ..swimmer import simulate_cycle
from .plotting import accuracy_boxplot
from .runner import header_lines, percentile_row, run_trials, write_csv, write_json
from .settings import ExperimentConfig

logger = logging.getLogger(__name__)

MODELS = ("adaptive", "batch")


def _nan_if_none(value):
    return np.nan if value is None else value


def accuracy_pair(cfg: ExperimentConfig, seed: int) -> list[tuple[int, float, float]]:
    """一组训练/测试试验：返回每个检查点的 (cycles, Γ_adaptive, Γ_batch)。

    两个模型的 Γ 都以同一训练前缀上拟合的相位平均模型 ξ_T 为基线。
    """
    params = cfg.swimmer
    gait = cfg.gait.build(params.n_links)
    alpha, beta, eta = cfg.perturbation.resolve(gait.period)
    cycles = cfg.accuracy.cycles

    train = simulate_cycle(
        gait,
        params,
        cfg.dt,
        PerturbationState.create(params.shape_dim, alpha, beta, eta, derive_seed(seed, 0)),
        cycles=cycles,
    )
    test = simulate_cycle(
        gait,
        params,
        cfg.dt,
        PerturbationState.create(params.shape_dim, alpha, beta, eta, derive_seed(seed, 1)),
        cycles=cycles,
    )

    grid = cfg.model.grid()
    order = cfg.model.smoothing_order
    bank = FilterBank.from_config(cfg.model, gait)
    store = SampleStore(params.shape_dim).extend_from_record(train)
    steps = train.steps_per_cycle

    rows = []
    ingested = 0
    for n in cfg.accuracy.checkpoints:
        bank.ingest_many(
            train.phi[ingested:n * steps],
            train.r[ingested:n * steps],
            train.r_dot[ingested:n * steps],
            train.xi[ingested:n * steps],
        )
        ingested = n * steps
        subset = store.slice_cycles(n, steps)
        baseline = fit_phase_average(subset, grid, order).predict_many(test.phi)
        batch = fit_batch(subset, grid, gait, order)
        gamma_adaptive = gamma_batch(bank.predict_many(test.phi, test.r, test.r_dot), baseline, test.xi)
        gamma_offline = gamma_batch(batch.predict_many(test.phi, test.r, test.r_dot), baseline, test.xi)
        rows.append((n, _nan_if_none(gamma_adaptive), _nan_if_none(gamma_offline)))
    return rows


def run_accuracy_experiment(cfg: ExperimentConfig, out_dir: Path) -> dict:
    """生成训练/测试试验对，在各检查点评估两种模型的留出 Γ。

    输出：accuracy_trials.csv、accuracy_percentiles.csv、accuracy_boxplot.svg、
    accuracy_summary.json。
    """
    seeds = cfg.trial_seeds(cfg.accuracy.pairs)
    _, _, eta = cfg.perturbation.resolve(cfg.gait.period)
    if eta == 0:
        message = "zero perturbation noise: no off-cycle excitation, batch regression is degenerate"
        logger.warning(message)
        warnings.warn(message, DegenerateRegressionWarning, stacklevel=2)

    config = cfg.resolved()
    with logfire.span("accuracy experiment", pairs=len(seeds), n_links=cfg.swimmer.n_links):
        results = run_trials(accuracy_pair, [(cfg, s) for s in seeds], cfg.workers)

    trial_rows = [
        (seed, pair, n, g_a, g_b)
        for pair, (seed, rows) in enumerate(zip(seeds, results))
        for n, g_a, g_b in rows
    ]
    write_csv(
        out_dir / "accuracy_trials.csv",
        ["seed", "pair", "cycles", "gamma_adaptive", "gamma_batch"],
        trial_rows,
        header_lines(config, seeds),
    )

    checkpoints = cfg.accuracy.checkpoints
    by_model = {
        "adaptive": [[rows[i][1] for rows in results] for i in range(len(checkpoints))],
        "batch": [[rows[i][2] for rows in results] for i in range(len(checkpoints))],
    }
    percentile_rows = [
        (n, model, *percentile_row(by_model[model][i]))
        for i, n in enumerate(checkpoints)
        for model in MODELS
    ]
    write_csv(
        out_dir / "accuracy_percentiles.csv",
        ["cycles", "model", "p5", "p25", "p50", "p75", "p95"],
        percentile_rows,
        header_lines(config, seeds),
    )
    accuracy_boxplot(out_dir / "accuracy_boxplot.svg", checkpoints, by_model, config)

    medians = {
        model: {str(n): percentile_row(by_model[model][i])[2] for i, n in enumerate(checkpoints)}
        for model in MODELS
    }
    summary = {"config": config, "seeds": seeds, "median_gamma": medians}
    write_json(out_dir / "accuracy_summary.json", summary)
    logger.info("accuracy experiment finished: adaptive medians %s", medians["adaptive"])
    return summary


__all__ = ["accuracy_pair", "run_accuracy_experiment"]
