# -*- coding: utf-8 -*-
"""模型置信度指标 Γ。

Γ = 1 − Σ‖ξ_D − ξ‖ / Σ‖ξ_T − ξ‖：0 表示与相位平均基线持平，1 表示完全准确，
负值表示比基线更差。基线误差和为 0 时 Γ 无定义，此时返回 None。
"""

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .se2 import BodyVelocity

DEFAULT_LAMBDA_GAMMA = 0.995

VelocityLike = Union[BodyVelocity, Sequence[float], np.ndarray]


def _as_rows(values) -> np.ndarray:
    if isinstance(values, BodyVelocity):
        return values.as_array()[None, :]
    rows = [v.as_array() if isinstance(v, BodyVelocity) else v for v in values]
    return np.asarray(rows, dtype=float).reshape(-1, 3)


def _weighted_norms(errors: np.ndarray, weights: Optional[Sequence[float]]) -> np.ndarray:
    if weights is None:
        return np.linalg.norm(errors, axis=-1)
    w = np.asarray(weights, dtype=float)
    if w.shape != (3,) or np.any(w < 0):
        raise ValueError("weights must be three non-negative numbers")
    return np.sqrt(np.sum(w * errors**2, axis=-1))


def gamma_batch(
    predictions_d,
    predictions_t,
    truths,
    weights: Optional[Sequence[float]] = None,
) -> Optional[float]:
    """批量 Γ。

    参数：
        predictions_d: 数据驱动模型的预测，(N, 3)
        predictions_t: 相位平均基线的预测，(N, 3)
        truths: 真实体速度，(N, 3)
        weights: 各分量的范数权重，默认为单位权重

    返回：
        Optional[float]: Γ；基线误差和为 0 时返回 None
    """
    d = _as_rows(predictions_d)
    t = _as_rows(predictions_t)
    y = _as_rows(truths)
    if not (len(d) == len(t) == len(y)) or len(y) == 0:
        raise ValueError("gamma_batch needs equal-length, non-empty sequences")
    psi_d = float(np.sum(_weighted_norms(d - y, weights)))
    psi_t = float(np.sum(_weighted_norms(t - y, weights)))
    if psi_t == 0.0:
        return None
    return 1.0 - psi_d / psi_t


def gamma_components(predictions_d, predictions_t, truths) -> list[Optional[float]]:
    """逐分量 (x, y, θ) 的 Γ，仅用于诊断。"""
    d = _as_rows(predictions_d)
    t = _as_rows(predictions_t)
    y = _as_rows(truths)
    result = []
    for k in range(3):
        psi_t = float(np.sum(np.abs(t[:, k] - y[:, k])))
        psi_d = float(np.sum(np.abs(d[:, k] - y[:, k])))
        result.append(None if psi_t == 0.0 else 1.0 - psi_d / psi_t)
    return result


@dataclass
class GammaState:
    """递归 Γ 的累加器。"""

    lambda_gamma: float = DEFAULT_LAMBDA_GAMMA
    psi_d: float = 0.0
    psi_t: float = 0.0
    n_samples: int = 0

    def __post_init__(self):
        if not 0 < self.lambda_gamma <= 1:
            raise ValueError(f"lambda_gamma must be in (0, 1], got {self.lambda_gamma}")
        if self.psi_d < 0 or self.psi_t < 0:
            raise ValueError("accumulated errors must be non-negative")

    @property
    def gamma(self) -> Optional[float]:
        if self.psi_t == 0.0:
            return None
        return 1.0 - self.psi_d / self.psi_t

    def reset(self) -> None:
        self.psi_d = 0.0
        self.psi_t = 0.0
        self.n_samples = 0


def gamma_update(
    state: GammaState,
    xi_d: VelocityLike,
    xi_t: VelocityLike,
    xi: VelocityLike,
    weights: Optional[Sequence[float]] = None,
) -> tuple[GammaState, Optional[float]]:
    """ψ ← λ_Γ·ψ + ‖误差‖，原地更新 state 并返回 (state, Γ)。"""
    d, t, y = (_as_rows(v)[0] for v in (xi_d, xi_t, xi))
    norms = _weighted_norms(np.stack((d - y, t - y)), weights)
    if not np.all(np.isfinite(norms)):
        raise ValueError("gamma_update received non-finite velocities")
    state.psi_d = state.lambda_gamma * state.psi_d + float(norms[0])
    state.psi_t = state.lambda_gamma * state.psi_t + float(norms[1])
    state.n_samples += 1
    return state, state.gamma


def log_prediction_error(prediction: VelocityLike, truth: VelocityLike) -> float:
    """单个样本预测误差欧氏范数的自然对数；零误差返回 -inf。"""
    error = float(np.linalg.norm(_as_rows(prediction)[0] - _as_rows(truth)[0]))
    return math.log(error) if error > 0 else -math.inf


def log_prediction_errors(predictions, truths) -> np.ndarray:
    """log_prediction_error 的批量版本。"""
    errors = np.linalg.norm(_as_rows(predictions) - _as_rows(truths), axis=1)
    with np.errstate(divide="ignore"):
        return np.log(errors)


__all__ = [
    "DEFAULT_LAMBDA_GAMMA",
    "GammaState",
    "gamma_batch",
    "gamma_update",
    "gamma_components",
    "log_prediction_error",
    "log_prediction_errors",
]
