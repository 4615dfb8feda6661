# -*- coding: utf-8 -*-
"""单条轨迹导出：样本 CSV 加上带在线模型预测与 Γ 的逐样本记录。

结束时把滤波器组写成快照；配置 simulate.bank_snapshot 后从已有快照继续学习。
"""

import logging
from pathlib import Path

import logfire
import numpy as np

from ..adaptive_model import FilterBank, PhaseAverageTracker, load_snapshot, save_snapshot
from ..batch_model import SampleStore
from ..errors import ConfigError, UnfittedModelError
from ..gait import PerturbationState
from ..metrics import GammaState, gamma_components
from ..optimizer import model_centroid_displacement, score_and_ingest
from ..records import TrialRecord
from ..swimmer import centroid_displacements, cycle_displacements, simulate_cycle
from .runner import header_lines, write_json
from .settings import ExperimentConfig

logger = logging.getLogger(__name__)


def initial_bank(cfg: ExperimentConfig, gait) -> FilterBank:
    """新建滤波器组，或从 simulate.bank_snapshot 载入并检查是否匹配当前游动体。"""
    if cfg.simulate.bank_snapshot is None:
        return FilterBank.from_config(cfg.model, gait)
    bank = load_snapshot(cfg.simulate.bank_snapshot)
    if bank.shape_dim != gait.n_joints or bank.grid.m_windows != cfg.model.m_windows:
        raise ConfigError(
            f"bank snapshot {cfg.simulate.bank_snapshot} has {bank.shape_dim} joints and "
            f"{bank.grid.m_windows} windows, configuration needs {gait.n_joints} and "
            f"{cfg.model.m_windows}"
        )
    logger.info("resuming from bank snapshot %s", cfg.simulate.bank_snapshot)
    return bank.rebase(gait)


def run_simulation(cfg: ExperimentConfig, out_dir: Path) -> dict:
    """按周期仿真配置中的游动体与种子步态，边仿真边训练自适应模型。

    输出：simulate_samples.csv（SampleStore 列）、simulate_steps.csv（TrialRecord 列）、
    simulate_bank.json（滤波器组快照）、simulate_summary.json。
    """
    params = cfg.swimmer
    gait = cfg.gait.build(params.n_links)
    seed = cfg.trial_seeds(1)[0]
    alpha, beta, eta = cfg.perturbation.resolve(gait.period)
    state = (
        PerturbationState.create(params.shape_dim, alpha, beta, eta, seed)
        if cfg.simulate.perturbed
        else None
    )
    bank = initial_bank(cfg, gait)
    tracker = PhaseAverageTracker(bank.grid, cfg.model.lambda_rls, cfg.model.p0, cfg.model.smoothing_order)
    gamma_state = GammaState(cfg.lambda_gamma)
    store = SampleStore(params.shape_dim)
    header = header_lines(cfg.resolved(), seed)
    displacements = []
    centroid_moves = []

    with logfire.span("simulate", n_links=params.n_links, cycles=cfg.simulate.cycles):
        with TrialRecord(params.shape_dim, step_path=out_dir / "simulate_steps.csv", header=header) as record:
            pose = None
            t0 = 0.0
            for _ in range(cfg.simulate.cycles):
                kwargs = {} if pose is None else {"g0": pose}
                segment = simulate_cycle(gait, params, cfg.dt, state, cycles=1, t0=t0, **kwargs)
                pose = segment.final_pose
                t0 += gait.period
                score_and_ingest(segment, bank, tracker, gamma_state, record)
                store.extend_from_record(segment)
                displacements.append(cycle_displacements(segment)[0].tolist())
                centroid_moves.append(centroid_displacements(segment)[0].tolist())

    store.to_csv(out_dir / "simulate_samples.csv", header)
    save_snapshot(bank, out_dir / "simulate_bank.json")

    steps = record.step_array()
    d = params.shape_dim
    truth = steps[:, 2 + 2 * d:5 + 2 * d]
    xi_d = steps[:, 5 + 2 * d:8 + 2 * d]
    xi_t = steps[:, 8 + 2 * d:11 + 2 * d]
    scored = ~(np.isnan(xi_d).any(axis=1) | np.isnan(xi_t).any(axis=1))
    try:
        model_centroid = model_centroid_displacement(bank, gait, params, cfg.dt).tolist()
    except UnfittedModelError:
        model_centroid = None

    summary = {
        "config": cfg.resolved(),
        "seed": seed,
        "final_pose": [pose.x, pose.y, pose.theta],
        "cycle_displacements": displacements,
        "centroid_displacements": centroid_moves,
        "model_centroid_displacement": model_centroid,
        "final_gamma": gamma_state.gamma,
        "gamma_components": (
            gamma_components(xi_d[scored], xi_t[scored], truth[scored]) if scored.any() else None
        ),
    }
    write_json(out_dir / "simulate_summary.json", summary)
    logger.info("simulated %d cycles, final pose %s", cfg.simulate.cycles, pose)
    return summary


__all__ = ["initial_bank", "run_simulation"]
