# -*- coding: utf-8 -*-
"""以模型置信度 Γ 为门控的步态优化循环。

每次迭代：执行带扰动的名义步态并把样本送入滤波器组，同时累积本迭代的
递归 Γ；当 Γ 达到阈值后，在模型上用中心差分求目标函数对 Fourier 系数的
梯度，沿归一化梯度走一步并投影回幅值约束，然后把滤波器组迁移到新步态。
"""

import logging
import math
from typing import Literal, Optional

import logfire
import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .adaptive_model import FilterBank, ModelConfig, PhaseAverageTracker
from .errors import DimensionMismatchError, UnfittedModelError
from .gait import (
    Gait,
    PerturbationConfig,
    PerturbationState,
    nominal_shape,
    nominal_shape_many,
)
from .metrics import DEFAULT_LAMBDA_GAMMA, GammaState, gamma_update
from .records import IterationRow, TrialRecord
from .se2 import GroupElement, integrate_trajectory, trajectory_poses, transform_point
from .swimmer import (
    SwimmerParams,
    centroid,
    cycle_displacements,
    simulate_cycle,
    steps_per_cycle,
)

logger = logging.getLogger(__name__)

Objective = Literal["forward", "lateral", "rotation"]

OBJECTIVE_INDEX = {"forward": 0, "lateral": 1, "rotation": 2}


class OptimizationConfig(BaseModel):
    """优化循环的全部超参数。"""

    model_config = ConfigDict(extra="forbid")

    gamma_threshold: float = Field(default=0.5, gt=0, lt=1, description="Γ 门控阈值")
    step_size: float = Field(default=0.05, ge=0, description="系数空间中每步的长度")
    fd_epsilon: float = Field(default=1e-3, gt=0, description="中心差分探针大小")
    max_cycles: int = Field(default=40, ge=1, description="经验预算（周期数）")
    objective: Objective = "forward"
    amplitude_bound: float = Field(default=1.0, gt=0, description="每个系数的盒约束 |c| ≤ bound")
    min_cycles_per_iteration: int = Field(default=2, ge=1)
    reset_model_on_step: bool = Field(
        default=False, description="步态更新后丢弃模型从头学习，而不是 rebase（对照用）"
    )
    lambda_gamma: float = Field(default=DEFAULT_LAMBDA_GAMMA, gt=0, le=1)
    steps_per_cycle: int = Field(default=200, ge=8, description="每周期仿真步数")
    model: ModelConfig = Field(default_factory=ModelConfig)
    perturbation: PerturbationConfig = Field(default_factory=PerturbationConfig)


def model_objective(
    bank: FilterBank,
    gait: Gait,
    dt: float,
    objective: Objective = "forward",
) -> float:
    """沿候选步态积分模型预测的体速度一个周期，返回所选位移分量。

    δ、δ̇ 相对于 bank 当前的名义步态计算。静止步态的目标值为 0。
    """
    if not bank.is_fitted():
        raise UnfittedModelError(bank.empty_windows())
    if gait.is_static():
        return 0.0
    steps = steps_per_cycle(gait.period, dt)
    phis = 2.0 * math.pi * np.arange(steps) / steps
    r, r_dot = nominal_shape_many(gait, phis)
    xi = bank.predict_many(phis, r, r_dot)
    displacement = integrate_trajectory(GroupElement(), xi, dt)
    return float(displacement.as_array()[OBJECTIVE_INDEX[objective]])


def model_centroid_displacement(
    bank: FilterBank,
    gait: Gait,
    params: SwimmerParams,
    dt: float,
) -> np.ndarray:
    """模型预测的一个周期内质心位移 (x, y)，以周期开始时的体坐标系表示。

    各向同性阻力下真实质心不随闭合步态移动，而体坐标系仍可能转动，
    因此用质心而不是坐标原点检验模型是否继承这一零位移性质。
    体速度取步中点相位，积分为二阶精度。
    """
    if not bank.is_fitted():
        raise UnfittedModelError(bank.empty_windows())
    if gait.n_joints != params.shape_dim:
        raise DimensionMismatchError(
            f"gait has {gait.n_joints} joints but swimmer has {params.shape_dim}"
        )
    steps = steps_per_cycle(gait.period, dt)
    midpoints = 2.0 * math.pi * (np.arange(steps) + 0.5) / steps
    r, r_dot = nominal_shape_many(gait, midpoints)
    poses = trajectory_poses(GroupElement(), bank.predict_many(midpoints, r, r_dot), dt)
    start_shape = nominal_shape(gait, 0.0)[0]
    offset = centroid(start_shape, params)
    return transform_point(GroupElement.from_array(poses[-1]), offset) - offset


def policy_gradient(
    bank: FilterBank,
    gait: Gait,
    cfg: OptimizationConfig,
    dt: Optional[float] = None,
) -> np.ndarray:
    """对每个 Fourier 系数做中心差分，返回与 gait.coefficient_vector() 同形的梯度。"""
    dt = gait.period / cfg.steps_per_cycle if dt is None else dt
    base = gait.coefficient_vector()
    gradient = np.zeros_like(base)
    for i in range(base.size):
        bump = np.zeros_like(base)
        bump[i] = cfg.fd_epsilon
        upper = model_objective(bank, gait.with_coefficients(base + bump), dt, cfg.objective)
        lower = model_objective(bank, gait.with_coefficients(base - bump), dt, cfg.objective)
        gradient[i] = (upper - lower) / (2.0 * cfg.fd_epsilon)
    return gradient


def projected_step(gait: Gait, gradient: np.ndarray, cfg: OptimizationConfig) -> Gait:
    """c ← clip(c + step_size·∇/‖∇‖, ±amplitude_bound)；零梯度时不动。"""
    coefficients = gait.coefficient_vector()
    norm = float(np.linalg.norm(gradient))
    if norm > 0 and cfg.step_size > 0:
        coefficients = coefficients + cfg.step_size * gradient / norm
    bound = cfg.amplitude_bound
    return gait.with_coefficients(np.clip(coefficients, -bound, bound))


def nominal_displacement(
    params: SwimmerParams,
    gait: Gait,
    dt: float,
    objective: Objective = "forward",
) -> float:
    """无噪声执行一个周期的真实位移；只用于评估，不产生训练样本。"""
    segment = simulate_cycle(gait, params, dt)
    return float(cycle_displacements(segment)[0, OBJECTIVE_INDEX[objective]])


def optimize(
    params: SwimmerParams,
    seed_gait: Gait,
    cfg: OptimizationConfig,
    rng_seed: int,
    record: Optional[TrialRecord] = None,
) -> TrialRecord:
    """运行一次完整的门控优化试验。

    参数：
        params: 游动体参数
        seed_gait: 种子步态
        cfg: 优化配置
        rng_seed: 扰动随机流的种子
        record: 可选的（已打开 CSV 输出的）记录对象

    返回：
        TrialRecord: 完整的逐样本与逐迭代记录
    """
    if seed_gait.n_joints != params.shape_dim:
        raise ValueError(
            f"seed gait has {seed_gait.n_joints} joints, swimmer has {params.shape_dim}"
        )
    gait = seed_gait.with_coefficients(
        np.clip(seed_gait.coefficient_vector(), -cfg.amplitude_bound, cfg.amplitude_bound)
    )
    dt = gait.period / cfg.steps_per_cycle
    axis = OBJECTIVE_INDEX[cfg.objective]
    alpha, beta, eta = cfg.perturbation.resolve(gait.period)

    record = record or TrialRecord(params.shape_dim)
    perturbation = PerturbationState.create(params.shape_dim, alpha, beta, eta, rng_seed)
    bank = FilterBank.from_config(cfg.model, gait)
    tracker = PhaseAverageTracker(
        bank.grid, cfg.model.lambda_rls, cfg.model.p0, cfg.model.smoothing_order
    )
    gamma_state = GammaState(cfg.lambda_gamma)

    pose = GroupElement()
    t0 = 0.0
    cycles_used = 0
    iteration = 0
    iteration_cycles = 0
    realized: list[float] = []
    evaluated = nominal_displacement(params, gait, dt, cfg.objective)

    with logfire.span("optimize trial", n_links=params.n_links, seed=rng_seed):
        while cycles_used < cfg.max_cycles:
            segment = simulate_cycle(gait, params, dt, perturbation, cycles=1, g0=pose, t0=t0)
            pose = segment.final_pose
            t0 += gait.period
            score_and_ingest(segment, bank, tracker, gamma_state, record)
            cycles_used += 1
            iteration_cycles += 1
            realized.append(float(cycle_displacements(segment)[0, axis]))

            gamma = gamma_state.gamma
            if (
                iteration_cycles < cfg.min_cycles_per_iteration
                or gamma is None
                or gamma < cfg.gamma_threshold
            ):
                continue

            predicted = model_objective(bank, gait, dt, cfg.objective)
            new_gait = projected_step(gait, policy_gradient(bank, gait, cfg, dt), cfg)
            record.add_iteration(
                IterationRow(
                    iteration=iteration,
                    cycles_consumed=cycles_used,
                    gamma=gamma,
                    predicted_objective=predicted,
                    realized_displacement=float(np.mean(realized)),
                    nominal_displacement=evaluated,
                    stepped=True,
                    coefficients=gait.coefficients.tolist(),
                )
            )
            logger.debug(
                "iteration %d passed gate (gamma=%.3f) after %d cycles",
                iteration,
                gamma,
                iteration_cycles,
            )
            _shift_perturbation(perturbation, gait, new_gait)
            if cfg.reset_model_on_step:
                bank = FilterBank.from_config(cfg.model, new_gait)
                tracker = PhaseAverageTracker(
                    bank.grid, cfg.model.lambda_rls, cfg.model.p0, cfg.model.smoothing_order
                )
            else:
                bank.rebase(new_gait)
                tracker.reseed(bank.constant_block_profile())
            gait = new_gait
            evaluated = nominal_displacement(params, gait, dt, cfg.objective)
            gamma_state.reset()
            iteration += 1
            iteration_cycles = 0
            realized = []

        # 末行记录最终名义步态；预算恰好在一次更新后耗尽时 realized 为空
        record.add_iteration(
            IterationRow(
                iteration=iteration,
                cycles_consumed=cycles_used,
                gamma=gamma_state.gamma,
                predicted_objective=None,
                realized_displacement=float(np.mean(realized)) if realized else math.nan,
                nominal_displacement=evaluated,
                stepped=False,
                coefficients=gait.coefficients.tolist(),
            )
        )

    record.outcome = "optimized" if iteration > 0 else "gate_never_passed"
    logger.info(
        "trial seed=%d finished: %s after %d cycles, %d gait updates",
        rng_seed,
        record.outcome,
        cycles_used,
        iteration,
    )
    return record


def score_and_ingest(segment, bank, tracker, gamma_state, record) -> None:
    """用周期开始时的模型预测本周期样本并更新 Γ，然后摄入样本。"""
    n = len(segment.t)
    xi_d = np.full((n, 3), np.nan)
    xi_t = np.full((n, 3), np.nan)
    gammas = np.full(n, np.nan)
    try:
        xi_d = bank.predict_many(segment.phi, segment.r, segment.r_dot)
        xi_t = tracker.predict_many(segment.phi)
    except UnfittedModelError:
        pass
    else:
        for i in range(n):
            _, gamma = gamma_update(gamma_state, xi_d[i], xi_t[i], segment.xi[i])
            gammas[i] = np.nan if gamma is None else gamma

    record.add_steps(segment.t, segment.phi, segment.r, segment.r_dot, segment.xi, xi_d, xi_t, gammas)
    for i in range(n):
        bank.ingest_sample(segment.phi[i], segment.r[i], segment.r_dot[i], segment.xi[i])
        tracker.ingest_sample(segment.phi[i], segment.xi[i])


def _shift_perturbation(state: PerturbationState, old: Gait, new: Gait) -> None:
    """把名义步态在 φ = 0 处的跳变吸收进 (δ, δ̇)，使指令形状保持连续。"""
    old_r, old_r_dot = nominal_shape(old, 0.0)
    new_r, new_r_dot = nominal_shape(new, 0.0)
    state.delta = state.delta + old_r - new_r
    state.delta_dot = state.delta_dot + old_r_dot - new_r_dot


__all__ = [
    "Objective",
    "OptimizationConfig",
    "model_objective",
    "model_centroid_displacement",
    "policy_gradient",
    "projected_step",
    "nominal_displacement",
    "score_and_ingest",
    "optimize",
]
