# -*- coding: utf-8 -*-
"""gaittracks：主运动学游动体的自适应数据驱动几何模型与门控步态优化。"""

from .adaptive_model import FilterBank, ModelConfig, PhaseAverageTracker, RlsFilter
from .batch_model import SampleStore, fit_batch, fit_phase_average
from .gait import Gait, PerturbationState, PhaseWindowGrid, seed_gait
from .metrics import GammaState, gamma_batch, gamma_update
from .optimizer import OptimizationConfig, optimize
from .se2 import BodyVelocity, GroupElement
from .swimmer import SwimmerParams, simulate_cycle

__version__ = "0.1.0"

__all__ = [
    "BodyVelocity",
    "FilterBank",
    "Gait",
    "GammaState",
    "GroupElement",
    "ModelConfig",
    "OptimizationConfig",
    "PerturbationState",
    "PhaseAverageTracker",
    "PhaseWindowGrid",
    "RlsFilter",
    "SampleStore",
    "SwimmerParams",
    "fit_batch",
    "fit_phase_average",
    "gamma_batch",
    "gamma_update",
    "optimize",
    "seed_gait",
    "simulate_cycle",
]
