# -*- coding: utf-8 -*-
"""实验配置：pydantic 模型树、预设、TOML/JSON 文件加载与命令行覆盖。

合并顺序为 预设 → 配置文件 → 命令行参数，后者覆盖前者；
合并结果整体校验一次，未知键一律拒绝。

示例配置（TOML）：

    family = "accuracy"
    seed = 7

    [swimmer]
    n_links = 3
    drag_ratio = 2.0

    [accuracy]
    pairs = 10
"""

import json
import tomllib
from pathlib import Path
from typing import Any, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from ..adaptive_model import LAMBDA_RAPID, LAMBDA_SLOW, ModelConfig
from ..errors import ConfigError
from ..gait import Gait, PerturbationConfig, seed_gait
from ..metrics import DEFAULT_LAMBDA_GAMMA
from ..optimizer import Objective, OptimizationConfig
from ..rng import derive_seed
from ..swimmer import SwimmerParams

Family = Literal["accuracy", "drag-change", "optimize", "simulate"]
Preset = Literal["desk", "paper"]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SeedGaitConfig(_Strict):
    """种子步态：等相位差的一阶（或更高阶）Fourier 步态。"""

    amplitude: float = Field(default=0.5, gt=0)
    order: int = Field(default=1, ge=1)
    period: float = Field(default=1.0, gt=0)
    phase_lag: Optional[float] = Field(default=None, description="相邻关节相位差，默认 2π/n_links")

    def build(self, n_links: int) -> Gait:
        return seed_gait(n_links, self.amplitude, self.order, self.period, self.phase_lag)


class AccuracyConfig(_Strict):
    """自适应与批量模型精度随经验增长的对比实验。"""

    pairs: int = Field(default=10, ge=1, description="训练/测试试验对数")
    cycles: int = Field(default=40, ge=1, description="每条训练与测试轨迹的周期数")
    checkpoints: list[int] = Field(default_factory=lambda: [5, 10, 15, 20, 25, 30, 35, 40])

    @model_validator(mode="after")
    def _checkpoints_within_cycles(self) -> "AccuracyConfig":
        if not self.checkpoints:
            raise ValueError("at least one checkpoint is required")
        if sorted(set(self.checkpoints)) != self.checkpoints:
            raise ValueError("checkpoints must be strictly increasing")
        if self.checkpoints[0] < 1 or self.checkpoints[-1] > self.cycles:
            raise ValueError(f"checkpoints must lie in [1, {self.cycles}]")
        return self


class DragChangeConfig(_Strict):
    """不加通知地切换阻力比的适应实验。"""

    train_cycles: int = Field(default=40, ge=1)
    stream_cycles: int = Field(default=40, ge=1, description="每个新阻力比下的周期数")
    train_drag_ratio: float = Field(default=2.0, ge=1.0)
    switch_drag_ratios: list[float] = Field(default_factory=lambda: [3.0, 4.0])
    lambdas: list[float] = Field(default_factory=lambda: [LAMBDA_SLOW, LAMBDA_RAPID])
    error_fraction: float = Field(default=0.5, gt=0, lt=1, description="判定适应完成的误差比例")
    recovery_bins: int = Field(default=16, ge=1, description="判定适应时每周期划分的相位段数")
    control: bool = Field(default=False, description="保持训练阻力比不变的空干预对照")

    @field_validator("switch_drag_ratios")
    def _ratios_valid(cls, v: list[float]) -> list[float]:
        if any(k < 1.0 for k in v):
            raise ValueError("drag ratios must be >= 1")
        return v

    @field_validator("lambdas")
    def _lambdas_valid(cls, v: list[float]) -> list[float]:
        if not v or any(not 0 < lam <= 1 for lam in v):
            raise ValueError("lambdas must be non-empty and lie in (0, 1]")
        return v


class OptimizationStudyConfig(_Strict):
    """多连杆、多种子的门控优化实验。"""

    link_counts: list[int] = Field(default_factory=lambda: [3, 5])
    budgets: dict[int, int] = Field(
        default_factory=lambda: {3: 40, 5: 60, 9: 100},
        description="各连杆数的经验预算（周期）",
    )
    default_budget: int = Field(default=40, ge=1)
    gamma_threshold: float = Field(default=0.5, gt=0, lt=1)
    step_size: float = Field(default=0.05, ge=0)
    fd_epsilon: float = Field(default=1e-3, gt=0)
    objective: Objective = "forward"
    amplitude_bound: float = Field(default=1.0, gt=0)
    min_cycles_per_iteration: int = Field(default=2, ge=1)
    cold_reset_ablation: bool = Field(
        default=True, description="每个种子另跑一次更新后丢弃模型的对照"
    )

    @field_validator("link_counts")
    def _odd_counts(cls, v: list[int]) -> list[int]:
        if not v or any(n < 3 or n % 2 == 0 for n in v):
            raise ValueError("link_counts must be odd integers >= 3")
        return v

    def budget(self, n_links: int) -> int:
        return self.budgets.get(n_links, self.default_budget)


class SimulateConfig(_Strict):
    cycles: int = Field(default=5, ge=1)
    perturbed: bool = True
    bank_snapshot: Optional[str] = Field(default=None, description="从该滤波器组快照继续学习")


class ExperimentConfig(_Strict):
    """一次实验运行的完整、自描述配置。"""

    family: Family = "accuracy"
    seed: int = Field(default=0, ge=0, lt=2**64)
    seeds: Optional[list[int]] = Field(default=None, description="显式给出的试验种子；为空时由 seed 派生")
    trials: int = Field(default=10, ge=1, description="drag-change 与 optimize 的试验数")
    output_dir: str = "./results"
    workers: int = Field(default=1, ge=1)

    swimmer: SwimmerParams = Field(default_factory=SwimmerParams)
    gait: SeedGaitConfig = Field(default_factory=SeedGaitConfig)
    model: ModelConfig = Field(default_factory=ModelConfig)
    perturbation: PerturbationConfig = Field(default_factory=PerturbationConfig)
    lambda_gamma: float = Field(default=DEFAULT_LAMBDA_GAMMA, gt=0, le=1)
    steps_per_cycle: int = Field(default=200, ge=8)

    accuracy: AccuracyConfig = Field(default_factory=AccuracyConfig)
    drag_change: DragChangeConfig = Field(default_factory=DragChangeConfig)
    optimization: OptimizationStudyConfig = Field(default_factory=OptimizationStudyConfig)
    simulate: SimulateConfig = Field(default_factory=SimulateConfig)

    @field_validator("seeds")
    def _seeds_u64(cls, v: Optional[list[int]]) -> Optional[list[int]]:
        if v is not None and any(not 0 <= s < 2**64 for s in v):
            raise ValueError("seeds must be unsigned 64-bit integers")
        return v

    @property
    def dt(self) -> float:
        return self.gait.period / self.steps_per_cycle

    def trial_seeds(self, count: int) -> list[int]:
        """前 count 个试验种子：显式列表优先，否则由 (seed, i) 派生。"""
        if self.seeds is not None:
            if len(self.seeds) < count:
                raise ConfigError(f"{count} trials requested but only {len(self.seeds)} seeds given")
            return list(self.seeds[:count])
        return [derive_seed(self.seed, i) for i in range(count)]

    def optimizer_config(self, n_links: int) -> OptimizationConfig:
        study = self.optimization
        return OptimizationConfig(
            gamma_threshold=study.gamma_threshold,
            step_size=study.step_size,
            fd_epsilon=study.fd_epsilon,
            max_cycles=study.budget(n_links),
            objective=study.objective,
            amplitude_bound=study.amplitude_bound,
            min_cycles_per_iteration=study.min_cycles_per_iteration,
            lambda_gamma=self.lambda_gamma,
            steps_per_cycle=self.steps_per_cycle,
            model=self.model,
            perturbation=self.perturbation,
        )

    def resolved(self) -> dict:
        """写入每个结果文件开头的完整配置。"""
        return self.model_dump(mode="json")


PRESETS: dict[str, dict[str, Any]] = {
    "desk": {
        "trials": 10,
        "accuracy": {"pairs": 10},
        "optimization": {"link_counts": [3, 5]},
    },
    "paper": {
        "trials": 50,
        "accuracy": {"pairs": 100},
        "optimization": {"link_counts": [3, 5, 9]},
    },
}


def deep_merge(base: dict, override: dict) -> dict:
    """递归合并两个字典，override 中的值优先。"""
    merged = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def read_config_file(path: Union[str, Path]) -> dict:
    """读取 TOML 或 JSON 配置文件。

    异常：
        ConfigError: 文件不存在、格式无法识别或语法错误
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    try:
        if path.suffix == ".toml":
            return tomllib.loads(text)
        if path.suffix == ".json":
            return json.loads(text)
    except (tomllib.TOMLDecodeError, json.JSONDecodeError) as exc:
        raise ConfigError(f"malformed config file {path}: {exc}") from exc
    raise ConfigError(f"unsupported config format {path.suffix!r}; use .toml or .json")


def load_experiment_config(
    path: Optional[Union[str, Path]] = None,
    preset: Preset = "desk",
    overrides: Optional[dict] = None,
    defaults: Optional[dict] = None,
) -> ExperimentConfig:
    """按 预设 → 运行时默认值 → 文件 → 覆盖 的顺序合并并校验实验配置。

    defaults 通常来自环境变量（输出目录、进程数），优先级低于配置文件。

    异常：
        ConfigError: 任何校验失败（包括未知键）
    """
    if preset not in PRESETS:
        raise ConfigError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
    data = dict(PRESETS[preset])
    if defaults:
        data = deep_merge(data, defaults)
    if path is not None:
        data = deep_merge(data, read_config_file(path))
    if overrides:
        data = deep_merge(data, overrides)
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(f"invalid experiment config:\n{exc}") from exc


__all__ = [
    "Family",
    "Preset",
    "PRESETS",
    "SeedGaitConfig",
    "AccuracyConfig",
    "DragChangeConfig",
    "OptimizationStudyConfig",
    "SimulateConfig",
    "ExperimentConfig",
    "deep_merge",
    "read_config_file",
    "load_experiment_config",
]
