# -*- coding: utf-8 -*-
"""相位窗口化的递归最小二乘（RLS）自适应几何模型。

每个相位窗口 m、每个体速度分量 k 各有一个带遗忘因子的 RLS 滤波器，
回归向量为 [1, δ, δ̇, δ⊗δ̇]，维度 1 + 2d + d²。各窗口的权重沿相位用
截断 Fourier 级数平滑后得到可在任意相位查询的线性化联络模型。

同一窗口内 K 个输出的协方差递推与目标值无关，因此共享同一个 P；
这与 K 个输入相同回归量的独立滤波器完全等价。
"""

import json
import logging
import math
from pathlib import Path
from typing import Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .errors import (
    DimensionMismatchError,
    NonFiniteInputError,
    ResultsIOError,
    UnfittedModelError,
)
from .gait import (
    FourierSmoother,
    Gait,
    PhaseWindowGrid,
    covering_windows,
    nominal_shape_many,
)
from .se2 import BodyVelocity

logger = logging.getLogger(__name__)

N_OUTPUTS = 3
DEFAULT_P0 = 1e3
SNAPSHOT_VERSION = 1

# 协方差对角元超过 P0 的这一倍数即视为发散
_COVARIANCE_BLOWUP = 1e6

LAMBDA_SLOW = 0.99
LAMBDA_RAPID = 0.7

# 遗忘时协方差回归的上限；λ = 1 时不起作用
DEFAULT_P_MAX = 10.0


def regressor_length(d: int) -> int:
    return 1 + 2 * d + d * d


def build_regressor(delta: np.ndarray, delta_dot: np.ndarray) -> np.ndarray:
    """回归向量 [1, δ, δ̇, δ⊗δ̇]（外积按行优先展开）。

    常数块对应 C_k，δ 块对应 B_k，δ̇ 块对应 A_k(θ)，外积块对应 ∂A_k/∂r。
    """
    delta = np.asarray(delta, dtype=float)
    delta_dot = np.asarray(delta_dot, dtype=float)
    if delta.shape != delta_dot.shape or delta.ndim != 1:
        raise DimensionMismatchError(
            f"delta {delta.shape} and delta_dot {delta_dot.shape} must be equal-length vectors"
        )
    return np.concatenate(([1.0], delta, delta_dot, np.outer(delta, delta_dot).ravel()))


def build_regressors(deltas: np.ndarray, delta_dots: np.ndarray) -> np.ndarray:
    """build_regressor 的批量版本，返回 (N, 1+2d+d²)。"""
    deltas = np.atleast_2d(np.asarray(deltas, dtype=float))
    delta_dots = np.atleast_2d(np.asarray(delta_dots, dtype=float))
    if deltas.shape != delta_dots.shape:
        raise DimensionMismatchError(
            f"deltas {deltas.shape} and delta_dots {delta_dots.shape} differ"
        )
    n, d = deltas.shape
    outer = np.einsum("ni,nj->nij", deltas, delta_dots).reshape(n, d * d)
    return np.hstack((np.ones((n, 1)), deltas, delta_dots, outer))


class ModelConfig(BaseModel):
    """自适应模型与批量模型共享的超参数。"""

    model_config = ConfigDict(extra="forbid")

    m_windows: int = Field(default=16, ge=2, description="相位窗口数 M")
    window_overlap: float = Field(default=2.0, gt=1.0, description="窗口宽度 / 间距")
    smoothing_order: int = Field(default=4, ge=0, description="权重沿相位的 Fourier 阶数")
    lambda_rls: float = Field(default=LAMBDA_SLOW, gt=0, le=1, description="RLS 遗忘因子")
    p0: float = Field(default=DEFAULT_P0, gt=0, description="初始协方差 P₀ = p0·I")
    p_max: Optional[float] = Field(
        default=DEFAULT_P_MAX,
        gt=0,
        description="遗忘因子 < 1 时未激励方向上协方差的稳态上限，None 表示纯指数遗忘",
    )

    def grid(self) -> PhaseWindowGrid:
        spacing = 2.0 * math.pi / self.m_windows
        return PhaseWindowGrid(self.m_windows, self.window_overlap * spacing)


class RlsFilter:
    """带遗忘因子的指数加权 RLS 滤波器，可同时估计共享回归量的多个输出。

    p_max 为 None 时是纯指数遗忘。给定 p_max 且 λ < 1 时，每步遗忘掉的
    (1 − λ) 份信息由以当前估计为中心、精度 1/p_max 的先验补回：

        R ← λR + (1 − λ)/p_max · I + x xᵀ

    未被激励的方向上 P 收敛到 p_max 而不是按 1/λ 无界增长。
    """

    def __init__(
        self,
        n_params: int,
        n_outputs: int = 1,
        lambda_rls: float = LAMBDA_SLOW,
        p0: float = DEFAULT_P0,
        p_max: Optional[float] = None,
    ):
        if not 0 < lambda_rls <= 1:
            raise ValueError(f"lambda_rls must be in (0, 1], got {lambda_rls}")
        if p_max is not None and not p_max > 0:
            raise ValueError(f"p_max must be positive, got {p_max}")
        self.n_params = n_params
        self.n_outputs = n_outputs
        self.lambda_rls = lambda_rls
        self.p0 = p0
        self.p_max = p_max
        self.weights = np.zeros((n_outputs, n_params))
        self.covariance = p0 * np.eye(n_params)
        self.n_updates = 0
        self.n_resets = 0

    @property
    def bounded(self) -> bool:
        return self.p_max is not None and self.lambda_rls < 1.0

    def reset_covariance(self, reason: str) -> None:
        """把 P 重置为 P₀，保留权重。"""
        self.covariance = self.p0 * np.eye(self.n_params)
        self.n_resets += 1
        log = logger.warning if self.n_resets == 1 else logger.debug
        log("RLS covariance reset to P0 (%s); reset count %d", reason, self.n_resets)

    def _forgotten_covariance(self) -> np.ndarray:
        """遗忘一步后的协方差 P̃ = (λP⁻¹ + (1 − λ)/p_max · I)⁻¹。"""
        lam = self.lambda_rls
        if not self.bounded:
            return self.covariance / lam
        leak = (1.0 - lam) / self.p_max
        # P 与 λI + cP 可交换，P̃ = (λI + cP)⁻¹ P
        shrink = lam * np.eye(self.n_params) + leak * self.covariance
        forgotten = np.linalg.solve(shrink, self.covariance)
        return 0.5 * (forgotten + forgotten.T)

    def update(self, x: np.ndarray, y: Union[float, np.ndarray]) -> "RlsFilter":
        """一次 RLS 递推：

            g = P x / (λ + xᵀ P x)
            w ← w + g (y − wᵀx)
            P ← (P − g xᵀ P) / λ，并对称化

        有界遗忘时先得到 P̃，再以 g = P̃x / (1 + xᵀP̃x)、P ← P̃ − g xᵀP̃ 递推；
        p_max → ∞ 时两者一致。
        """
        x = np.asarray(x, dtype=float)
        y = np.atleast_1d(np.asarray(y, dtype=float))
        if x.shape != (self.n_params,) or y.shape != (self.n_outputs,):
            raise DimensionMismatchError(
                f"expected regressor ({self.n_params},) and target ({self.n_outputs},), "
                f"got {x.shape} and {y.shape}"
            )
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise NonFiniteInputError("RLS update received non-finite regressor or target")

        if self.bounded:
            covariance = self._bounded_step(x, y)
        else:
            covariance = self._exponential_step(x, y)
        self.covariance = 0.5 * (covariance + covariance.T)
        self.n_updates += 1

        diagonal = np.diag(self.covariance)
        if diagonal.max() > _COVARIANCE_BLOWUP * self.p0 or diagonal.min() <= 0:
            self.reset_covariance("covariance blow-up")
        return self

    def _exponential_step(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        lam = self.lambda_rls
        px = self.covariance @ x
        denominator = lam + x @ px
        # xᵀPx < 0 说明 P 失去正定性
        if not math.isfinite(denominator) or denominator < lam * (1.0 - 1e-9):
            self.reset_covariance("lost positive definiteness")
            px = self.covariance @ x
            denominator = lam + x @ px

        gain = px / denominator
        innovation = y - self.weights @ x
        self.weights = self.weights + np.outer(innovation, gain)
        return (self.covariance - np.outer(gain, px)) / lam

    def _bounded_step(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        try:
            forgotten = self._forgotten_covariance()
        except np.linalg.LinAlgError:
            self.reset_covariance("singular forgetting step")
            forgotten = self._forgotten_covariance()
        px = forgotten @ x
        denominator = 1.0 + x @ px
        if not math.isfinite(denominator) or denominator < 1.0 - 1e-9:
            self.reset_covariance("lost positive definiteness")
            forgotten = self._forgotten_covariance()
            px = forgotten @ x
            denominator = 1.0 + x @ px

        gain = px / denominator
        innovation = y - self.weights @ x
        self.weights = self.weights + np.outer(innovation, gain)
        return forgotten - np.outer(gain, px)


def rls_update(filt: RlsFilter, x: np.ndarray, y: Union[float, np.ndarray]) -> RlsFilter:
    """对 filt 做一次 RLS 更新并返回它。"""
    return filt.update(x, y)


class PhaseLinearPredictor:
    """基于窗口权重 (M, K, P) 的 Fourier 平滑线性化模型。

    子类提供 window_weights()；平滑系数按脏标记惰性重算。
    """

    def __init__(self, grid: PhaseWindowGrid, nominal: Gait, smoothing_order: int = 4):
        self.grid = grid
        self.nominal = nominal
        self.smoother = FourierSmoother(grid, smoothing_order)
        self._coefficients: Optional[np.ndarray] = None

    @property
    def shape_dim(self) -> int:
        return self.nominal.n_joints

    def window_weights(self) -> np.ndarray:
        raise NotImplementedError

    def empty_windows(self) -> list[int]:
        return []

    def is_fitted(self) -> bool:
        return not self.empty_windows()

    def _invalidate(self) -> None:
        self._coefficients = None

    def smoothed_coefficients(self) -> np.ndarray:
        empty = self.empty_windows()
        if empty:
            raise UnfittedModelError(empty)
        if self._coefficients is None:
            self._coefficients = self.smoother.fit(self.window_weights())
        return self._coefficients

    def smoothed_weights(self, phis: np.ndarray) -> np.ndarray:
        """在查询相位处的平滑权重，形状 (N, K, P)。"""
        return self.smoother.evaluate(self.smoothed_coefficients(), phis)

    def predict_many(self, phis: np.ndarray, r: np.ndarray, r_dot: np.ndarray) -> np.ndarray:
        """批量预测体速度，返回 (N, 3)。δ、δ̇ 相对于查询相位处的名义步态。"""
        phis = np.atleast_1d(np.asarray(phis, dtype=float))
        r = np.asarray(r, dtype=float).reshape(phis.size, -1)
        r_dot = np.asarray(r_dot, dtype=float).reshape(phis.size, -1)
        if r.shape[1] != self.shape_dim:
            raise DimensionMismatchError(
                f"model expects {self.shape_dim} joints, got {r.shape[1]}"
            )
        weights = self.smoothed_weights(phis)
        theta, theta_dot = nominal_shape_many(self.nominal, phis)
        regressors = build_regressors(r - theta, r_dot - theta_dot)
        return np.einsum("nkp,np->nk", weights, regressors)

    def predict(self, phi: float, r: np.ndarray, r_dot: np.ndarray) -> BodyVelocity:
        return BodyVelocity.from_array(self.predict_many(np.array([phi]), r, r_dot)[0])


class FilterBank(PhaseLinearPredictor):
    """M 个相位窗口 × K 个输出的 RLS 滤波器组。"""

    def __init__(
        self,
        grid: PhaseWindowGrid,
        nominal: Gait,
        lambda_rls: float = LAMBDA_SLOW,
        p0: float = DEFAULT_P0,
        smoothing_order: int = 4,
        p_max: Optional[float] = None,
    ):
        super().__init__(grid, nominal, smoothing_order)
        self.lambda_rls = lambda_rls
        self.p0 = p0
        self.p_max = p_max
        self.n_params = regressor_length(nominal.n_joints)
        self.filters = [
            RlsFilter(self.n_params, N_OUTPUTS, lambda_rls, p0, p_max)
            for _ in range(grid.m_windows)
        ]
        self.filter_updates = 0
        self._refresh_centers()

    @classmethod
    def from_config(cls, config: ModelConfig, nominal: Gait) -> "FilterBank":
        return cls(
            config.grid(),
            nominal,
            config.lambda_rls,
            config.p0,
            config.smoothing_order,
            config.p_max,
        )

    def _refresh_centers(self) -> None:
        self.center_shapes, self.center_velocities = nominal_shape_many(
            self.nominal, self.grid.centers
        )

    @property
    def update_counts(self) -> np.ndarray:
        return np.array([f.n_updates for f in self.filters])

    def window_weights(self) -> np.ndarray:
        return np.stack([f.weights for f in self.filters])

    def empty_windows(self) -> list[int]:
        return [m for m, f in enumerate(self.filters) if f.n_updates == 0]

    def ingest_sample(
        self,
        phi: float,
        r: np.ndarray,
        r_dot: np.ndarray,
        xi: Union[BodyVelocity, np.ndarray],
    ) -> list[int]:
        """用一个样本更新覆盖其相位的所有窗口。

        窗口 m 内的偏移取自窗口中心的名义形状：δ^m = r − θ^m，δ̇^m = ṙ − θ̇^m。

        返回：
            list[int]: 被更新的窗口下标
        """
        r = np.asarray(r, dtype=float)
        r_dot = np.asarray(r_dot, dtype=float)
        if r.shape != (self.shape_dim,) or r_dot.shape != (self.shape_dim,):
            raise DimensionMismatchError(
                f"bank expects {self.shape_dim} joints, got {r.shape} and {r_dot.shape}"
            )
        target = xi.as_array() if isinstance(xi, BodyVelocity) else np.asarray(xi, dtype=float)
        windows = covering_windows(self.grid, phi)
        for m in windows:
            x = build_regressor(r - self.center_shapes[m], r_dot - self.center_velocities[m])
            self.filters[m].update(x, target)
            self.filter_updates += N_OUTPUTS
        if windows:
            self._invalidate()
        return windows

    def ingest_many(self, phis, r, r_dot, xi) -> None:
        """按顺序逐个摄入样本（遗忘因子下样本顺序有意义）。"""
        for n in range(len(phis)):
            self.ingest_sample(phis[n], r[n], r_dot[n], xi[n])

    def rebase(self, new_gait: Gait) -> "FilterBank":
        """把模型迁移到新的名义步态，只更新零阶项。

        对每个窗口 m、输出 k：
            w'_k[0] = [1, Δθ, Δθ̇, Δθ⊗Δθ̇] · w_k
        其余权重块与协方差 P 保持不变。
        """
        if new_gait.n_joints != self.shape_dim:
            raise DimensionMismatchError(
                f"cannot rebase a {self.shape_dim}-joint bank onto a "
                f"{new_gait.n_joints}-joint gait"
            )
        new_shapes, new_velocities = nominal_shape_many(new_gait, self.grid.centers)
        for m, filt in enumerate(self.filters):
            x = build_regressor(
                new_shapes[m] - self.center_shapes[m],
                new_velocities[m] - self.center_velocities[m],
            )
            filt.weights[:, 0] = filt.weights @ x
        self.nominal = new_gait
        self._refresh_centers()
        self._invalidate()
        logger.debug("filter bank rebased onto new nominal gait")
        return self

    def constant_block_profile(self) -> np.ndarray:
        """各窗口常数块权重 (M, K)，即模型对名义步态上速度的估计。"""
        return self.window_weights()[:, :, 0].copy()

    def copy(self) -> "FilterBank":
        return snapshot_to_bank(bank_to_snapshot(self))


class FilterBankSnapshot(BaseModel):
    """FilterBank 的版本化快照（JSON）。"""

    format_version: int = SNAPSHOT_VERSION
    lambda_rls: float
    p0: float
    p_max: Optional[float] = None
    smoothing_order: int
    grid: dict
    nominal: dict
    weights: list
    covariances: list
    update_counts: list[int]
    filter_updates: int = 0


def bank_to_snapshot(bank: FilterBank) -> FilterBankSnapshot:
    return FilterBankSnapshot(
        lambda_rls=bank.lambda_rls,
        p0=bank.p0,
        p_max=bank.p_max,
        smoothing_order=bank.smoother.order,
        grid=bank.grid.to_dict(),
        nominal=bank.nominal.to_dict(),
        weights=[f.weights.tolist() for f in bank.filters],
        covariances=[f.covariance.tolist() for f in bank.filters],
        update_counts=[f.n_updates for f in bank.filters],
        filter_updates=bank.filter_updates,
    )


def snapshot_to_bank(snapshot: FilterBankSnapshot) -> FilterBank:
    if snapshot.format_version != SNAPSHOT_VERSION:
        raise ValueError(
            f"unsupported snapshot version {snapshot.format_version}, "
            f"expected {SNAPSHOT_VERSION}"
        )
    bank = FilterBank(
        PhaseWindowGrid(**snapshot.grid),
        Gait.from_dict(snapshot.nominal),
        snapshot.lambda_rls,
        snapshot.p0,
        snapshot.smoothing_order,
        snapshot.p_max,
    )
    for filt, weights, covariance, count in zip(
        bank.filters, snapshot.weights, snapshot.covariances, snapshot.update_counts
    ):
        filt.weights = np.asarray(weights, dtype=float)
        filt.covariance = np.asarray(covariance, dtype=float)
        filt.n_updates = count
    bank.filter_updates = snapshot.filter_updates
    return bank


def save_snapshot(bank: FilterBank, path: Union[str, Path]) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(bank_to_snapshot(bank).model_dump_json(), encoding="utf-8")
    except OSError as exc:
        raise ResultsIOError(path, str(exc)) from exc
    return path


def load_snapshot(path: Union[str, Path]) -> FilterBank:
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ResultsIOError(path, str(exc)) from exc
    return snapshot_to_bank(FilterBankSnapshot.model_validate(payload))


class PhaseProfilePredictor:
    """只依赖相位的零阶模型 ξ_T：各窗口的平均体速度沿相位平滑。"""

    def __init__(self, grid: PhaseWindowGrid, smoothing_order: int = 4):
        self.grid = grid
        self.smoother = FourierSmoother(grid, smoothing_order)
        self._coefficients: Optional[np.ndarray] = None

    def window_values(self) -> np.ndarray:
        raise NotImplementedError

    def empty_windows(self) -> list[int]:
        return []

    def is_fitted(self) -> bool:
        return not self.empty_windows()

    def _invalidate(self) -> None:
        self._coefficients = None

    def predict_many(self, phis: np.ndarray, r=None, r_dot=None) -> np.ndarray:
        """忽略 (r, ṙ)，返回 (N, 3)。"""
        empty = self.empty_windows()
        if empty:
            raise UnfittedModelError(empty)
        if self._coefficients is None:
            self._coefficients = self.smoother.fit(self.window_values())
        return self.smoother.evaluate(self._coefficients, np.atleast_1d(phis))

    def predict(self, phi: float, r=None, r_dot=None) -> BodyVelocity:
        return BodyVelocity.from_array(self.predict_many(np.array([phi]))[0])


class PhaseAverageTracker(PhaseProfilePredictor):
    """ξ_T 的递归形式：每个窗口一个常数回归量的 RLS。"""

    def __init__(
        self,
        grid: PhaseWindowGrid,
        lambda_rls: float = 1.0,
        p0: float = DEFAULT_P0,
        smoothing_order: int = 4,
    ):
        super().__init__(grid, smoothing_order)
        self.filters = [RlsFilter(1, N_OUTPUTS, lambda_rls, p0) for _ in range(grid.m_windows)]
        self._unit = np.ones(1)

    def window_values(self) -> np.ndarray:
        return np.stack([f.weights[:, 0] for f in self.filters])

    def empty_windows(self) -> list[int]:
        return [m for m, f in enumerate(self.filters) if f.n_updates == 0]

    def ingest_sample(self, phi: float, xi: Union[BodyVelocity, np.ndarray]) -> list[int]:
        target = xi.as_array() if isinstance(xi, BodyVelocity) else np.asarray(xi, dtype=float)
        windows = covering_windows(self.grid, phi)
        for m in windows:
            self.filters[m].update(self._unit, target)
        if windows:
            self._invalidate()
        return windows

    def reseed(self, values: np.ndarray) -> None:
        """用给定的窗口取值 (M, K) 重新初始化，协方差回到 P₀。"""
        values = np.asarray(values, dtype=float)
        for filt, value in zip(self.filters, values):
            filt.weights[:, 0] = value
            filt.covariance = filt.p0 * np.eye(1)
            filt.n_updates = max(filt.n_updates, 1)
        self._invalidate()


__all__ = [
    "N_OUTPUTS",
    "DEFAULT_P0",
    "LAMBDA_SLOW",
    "LAMBDA_RAPID",
    "ModelConfig",
    "RlsFilter",
    "FilterBank",
    "FilterBankSnapshot",
    "PhaseLinearPredictor",
    "PhaseProfilePredictor",
    "PhaseAverageTracker",
    "regressor_length",
    "build_regressor",
    "build_regressors",
    "rls_update",
    "bank_to_snapshot",
    "snapshot_to_bank",
    "save_snapshot",
    "load_snapshot",
]
