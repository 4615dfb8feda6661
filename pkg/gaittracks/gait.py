# -*- coding: utf-8 -*-
"""步态参数化、S¹ 上的相位窗口，以及在线随机扰动生成器。

步态 θ(φ) 是每个关节的截断 Fourier 级数；系数矩阵的每一行对应一个关节，
列依次为 [c, a₁, b₁, a₂, b₂, ...]，即
    θ_j(φ) = c_j + Σ_f (a_jf·cos(fφ) + b_jf·sin(fφ))。
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .rng import make_rng

TWO_PI = 2.0 * math.pi

# covering_windows 的圆周距离比较容差
_WINDOW_TOL = 1e-12


def fourier_basis(phis: np.ndarray, order: int) -> np.ndarray:
    """返回 (N, 2·order+1) 的基函数矩阵 [1, cos φ, sin φ, cos 2φ, ...]。"""
    phis = np.atleast_1d(np.asarray(phis, dtype=float))
    basis = np.empty((phis.size, 2 * order + 1))
    basis[:, 0] = 1.0
    for f in range(1, order + 1):
        basis[:, 2 * f - 1] = np.cos(f * phis)
        basis[:, 2 * f] = np.sin(f * phis)
    return basis


def fourier_basis_derivative(phis: np.ndarray, order: int) -> np.ndarray:
    """fourier_basis 对 φ 的导数。"""
    phis = np.atleast_1d(np.asarray(phis, dtype=float))
    basis = np.zeros((phis.size, 2 * order + 1))
    for f in range(1, order + 1):
        basis[:, 2 * f - 1] = -f * np.sin(f * phis)
        basis[:, 2 * f] = f * np.cos(f * phis)
    return basis


@dataclass(frozen=True, eq=False)
class Gait:
    """名义步态：每个关节一组 Fourier 系数，加上周期 T。"""

    coefficients: np.ndarray
    period: float = 1.0

    def __post_init__(self):
        coefficients = np.array(self.coefficients, dtype=float, copy=True)
        if coefficients.ndim != 2 or coefficients.shape[1] % 2 != 1:
            raise ValueError(
                "coefficients must be a (joints, 2*order+1) array, "
                f"got shape {coefficients.shape}"
            )
        if not np.all(np.isfinite(coefficients)):
            raise ValueError("gait coefficients must be finite")
        if not self.period > 0:
            raise ValueError(f"period must be positive, got {self.period}")
        coefficients.setflags(write=False)
        object.__setattr__(self, "coefficients", coefficients)

    @property
    def n_joints(self) -> int:
        return self.coefficients.shape[0]

    @property
    def order(self) -> int:
        return (self.coefficients.shape[1] - 1) // 2

    @property
    def phase_rate(self) -> float:
        """ω = 2π / T。"""
        return TWO_PI / self.period

    def coefficient_vector(self) -> np.ndarray:
        """优化器使用的扁平系数向量（按关节行优先）。"""
        return self.coefficients.ravel().copy()

    def with_coefficients(self, vector: np.ndarray) -> "Gait":
        return Gait(np.reshape(vector, self.coefficients.shape), self.period)

    def is_static(self) -> bool:
        """所有振荡项为零时，形状不随相位变化。"""
        return not np.any(self.coefficients[:, 1:])

    def to_dict(self) -> dict:
        return {"coefficients": self.coefficients.tolist(), "period": self.period}

    @classmethod
    def from_dict(cls, data: dict) -> "Gait":
        return cls(np.asarray(data["coefficients"], dtype=float), float(data["period"]))


def nominal_shape(gait: Gait, phi: float) -> tuple[np.ndarray, np.ndarray]:
    """在相位 φ 处求值 θ(φ) 及其时间导数 θ̇ = ω·dθ/dφ。"""
    r, r_dot = nominal_shape_many(gait, np.array([phi]))
    return r[0], r_dot[0]


def nominal_shape_many(gait: Gait, phis: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """nominal_shape 的向量化版本，返回两个 (N, d) 数组。"""
    basis = fourier_basis(phis, gait.order)
    d_basis = fourier_basis_derivative(phis, gait.order)
    r = basis @ gait.coefficients.T
    r_dot = gait.phase_rate * (d_basis @ gait.coefficients.T)
    return r, r_dot


def seed_gait(
    n_links: int,
    amplitude: float = 0.5,
    order: int = 1,
    period: float = 1.0,
    phase_lag: Optional[float] = None,
) -> Gait:
    """等相位差的一阶 Fourier 种子步态。

    关节 j 取 amplitude·cos(φ + j·lag)，波从头部（+x 端）向尾部传播，
    在 k > 1 时推动游动体沿 +x 前进。lag 默认为 2π / n_links。
    """
    if n_links < 3:
        raise ValueError(f"n_links must be >= 3, got {n_links}")
    if order < 1:
        raise ValueError(f"order must be >= 1, got {order}")
    d = n_links - 1
    lag = TWO_PI / n_links if phase_lag is None else phase_lag
    coefficients = np.zeros((d, 2 * order + 1))
    for j in range(d):
        coefficients[j, 1] = amplitude * math.cos(j * lag)
        coefficients[j, 2] = -amplitude * math.sin(j * lag)
    return Gait(coefficients, period)


def circular_distance(a, b):
    """S¹ 上的距离，取值 [0, π]。"""
    diff = np.mod(np.asarray(a) - np.asarray(b), TWO_PI)
    return np.minimum(diff, TWO_PI - diff)


@dataclass(frozen=True)
class PhaseWindowGrid:
    """S¹ 上 M 个等距、等宽且相互重叠的相位窗口。"""

    m_windows: int = 16
    width: Optional[float] = None

    def __post_init__(self):
        if self.m_windows < 2:
            raise ValueError(f"m_windows must be >= 2, got {self.m_windows}")
        if self.width is None:
            object.__setattr__(self, "width", 2.0 * self.spacing)
        if not self.width > self.spacing:
            raise ValueError(
                f"window width {self.width} must exceed spacing {self.spacing} "
                "so that windows overlap"
            )
        if self.width >= TWO_PI:
            raise ValueError("window width must be smaller than 2π")

    @property
    def spacing(self) -> float:
        return TWO_PI / self.m_windows

    @property
    def centers(self) -> np.ndarray:
        return window_centers(self)

    def membership(self, phis: np.ndarray) -> np.ndarray:
        """(N, M) 的布尔矩阵：样本 n 是否落在窗口 m 内。"""
        phis = np.atleast_1d(np.asarray(phis, dtype=float))
        distances = circular_distance(phis[:, None], self.centers[None, :])
        return distances <= 0.5 * self.width + _WINDOW_TOL

    def to_dict(self) -> dict:
        return {"m_windows": self.m_windows, "width": self.width}


def window_centers(grid: PhaseWindowGrid) -> np.ndarray:
    return np.arange(grid.m_windows) * grid.spacing


def covering_windows(grid: PhaseWindowGrid, phi: float) -> list[int]:
    """覆盖相位 φ 的所有窗口下标（处理 0/2π 处的回绕）。"""
    distances = circular_distance(phi, window_centers(grid))
    return [int(m) for m in np.flatnonzero(distances <= 0.5 * grid.width + _WINDOW_TOL)]


class FourierSmoother:
    """把各窗口中心上的取值拟合为相位的截断 Fourier 级数。

    阶数取 min(order, (M-1)//2) 以避免混叠。
    """

    def __init__(self, grid: PhaseWindowGrid, order: int = 4):
        if order < 0:
            raise ValueError(f"smoothing order must be non-negative, got {order}")
        self.grid = grid
        self.order = min(order, (grid.m_windows - 1) // 2)
        self._projector = np.linalg.pinv(fourier_basis(grid.centers, self.order))

    def fit(self, values: np.ndarray) -> np.ndarray:
        """values 的第一维为窗口；返回第一维为 Fourier 系数的数组。"""
        values = np.asarray(values, dtype=float)
        flat = values.reshape(self.grid.m_windows, -1)
        coefficients = self._projector @ flat
        return coefficients.reshape((self._projector.shape[0],) + values.shape[1:])

    def evaluate(self, coefficients: np.ndarray, phis: np.ndarray) -> np.ndarray:
        basis = fourier_basis(phis, self.order)
        flat = coefficients.reshape(coefficients.shape[0], -1)
        return (basis @ flat).reshape((basis.shape[0],) + coefficients.shape[1:])


class PerturbationConfig(BaseModel):
    """二阶 SDE 扰动参数；留空的项按周期 T 取默认值。"""

    model_config = ConfigDict(extra="forbid")

    alpha: Optional[float] = Field(default=None, gt=0, description="阻尼系数，默认 2/T")
    beta: Optional[float] = Field(default=None, gt=0, description="刚度系数，默认 (2π/T)²")
    eta: Optional[float] = Field(default=None, ge=0, description="噪声幅值，默认按 target_rms 标定")
    target_rms: float = Field(default=0.1, ge=0, description="δ 的目标稳态均方根（rad）")

    def resolve(self, period: float) -> tuple[float, float, float]:
        alpha = self.alpha if self.alpha is not None else 2.0 / period
        beta = self.beta if self.beta is not None else (TWO_PI / period) ** 2
        eta = self.eta if self.eta is not None else calibrated_eta(alpha, beta, self.target_rms)
        return alpha, beta, eta


def calibrated_eta(alpha: float, beta: float, rms: float) -> float:
    """给出使 δ 的稳态均方根等于 rms 的 η。

    阻尼振子 δ̈ + αδ̇ + βδ = η·Ẇ 的稳态方差为 η² / (2αβ)。
    """
    return rms * math.sqrt(2.0 * alpha * beta)


@dataclass
class PerturbationState:
    """SDE 扰动的可变状态，单一所有者顺序推进。"""

    delta: np.ndarray
    delta_dot: np.ndarray
    alpha: float
    beta: float
    eta: float
    rng_seed: int = 0
    rng: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        self.delta = np.array(self.delta, dtype=float)
        self.delta_dot = np.array(self.delta_dot, dtype=float)
        if not (self.alpha > 0 and self.beta > 0):
            raise ValueError("alpha and beta must be positive for mean reversion")
        if self.eta < 0:
            raise ValueError(f"eta must be non-negative, got {self.eta}")
        self.rng = make_rng(self.rng_seed)

    @classmethod
    def create(
        cls,
        n_joints: int,
        alpha: float,
        beta: float,
        eta: float,
        rng_seed: int = 0,
    ) -> "PerturbationState":
        return cls(np.zeros(n_joints), np.zeros(n_joints), alpha, beta, eta, rng_seed)


def step_perturbation(state: PerturbationState, dt: float) -> PerturbationState:
    """Euler-Maruyama 推进一步：

        δ̇ ← δ̇ − (αδ̇ + βδ)dt + η·√dt·z
        δ ← δ + δ̇·dt

    原地更新并返回同一个状态对象；给定种子时结果逐位可复现。
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    z = state.rng.standard_normal(state.delta.shape)
    state.delta_dot = (
        state.delta_dot
        - (state.alpha * state.delta_dot + state.beta * state.delta) * dt
        + state.eta * math.sqrt(dt) * z
    )
    state.delta = state.delta + state.delta_dot * dt
    return state


__all__ = [
    "TWO_PI",
    "Gait",
    "PhaseWindowGrid",
    "PerturbationConfig",
    "PerturbationState",
    "FourierSmoother",
    "fourier_basis",
    "fourier_basis_derivative",
    "nominal_shape",
    "nominal_shape_many",
    "seed_gait",
    "circular_distance",
    "window_centers",
    "covering_windows",
    "calibrated_eta",
    "step_perturbation",
]
