# -*- coding: utf-8 -*-
"""实验族：精度-经验、阻力比切换、门控优化与单轨迹导出。"""

from .accuracy import run_accuracy_experiment
from .drag_change import run_drag_change_experiment
from .optimization import run_optimization_experiment
from .settings import ExperimentConfig, load_experiment_config
from .simulate import run_simulation

__all__ = [
    "ExperimentConfig",
    "load_experiment_config",
    "run_accuracy_experiment",
    "run_drag_change_experiment",
    "run_optimization_experiment",
    "run_simulation",
]
