# -*- coding: utf-8 -*-
"""批量基线模型：按相位窗口做普通最小二乘，以及零阶相位平均模型 ξ_T。"""

import csv
import io
import logging
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Optional, Union

import numpy as np

from .adaptive_model import (
    N_OUTPUTS,
    PhaseLinearPredictor,
    PhaseProfilePredictor,
    build_regressors,
    regressor_length,
)
from .errors import (
    DimensionMismatchError,
    RankDeficiencyError,
    ResultsIOError,
    UnfittedModelError,
)
from .gait import TWO_PI, Gait, PhaseWindowGrid, nominal_shape_many
from .records import write_header
from .swimmer import TrajectorySegment

logger = logging.getLogger(__name__)

# 窗口设计矩阵条件数超过此值时发出 DegenerateRegressionWarning
DEGENERATE_CONDITION = 1e8


class DegenerateRegressionWarning(UserWarning):
    """回归设计矩阵几乎奇异（例如没有偏离极限环的激励）。"""


def csv_columns(d: int) -> list[str]:
    return (
        ["t", "phi"]
        + [f"r_{j + 1}" for j in range(d)]
        + [f"rdot_{j + 1}" for j in range(d)]
        + ["xi_x", "xi_y", "xi_theta"]
    )


@dataclass
class SampleStore:
    """只追加的 (t, φ, r, ṙ, ξ) 样本集合。"""

    shape_dim: int
    _rows: list[np.ndarray] = field(default_factory=list, repr=False)

    def __len__(self) -> int:
        return len(self._rows)

    def __iter__(self) -> Iterator[np.ndarray]:
        return iter(self._rows)

    @property
    def width(self) -> int:
        return 2 + 2 * self.shape_dim + N_OUTPUTS

    def append(self, t: float, phi: float, r, r_dot, xi) -> None:
        r = np.asarray(r, dtype=float)
        r_dot = np.asarray(r_dot, dtype=float)
        xi = np.asarray(xi, dtype=float)
        if r.shape != (self.shape_dim,) or r_dot.shape != (self.shape_dim,) or xi.shape != (3,):
            raise DimensionMismatchError(
                f"sample does not match a {self.shape_dim}-joint store"
            )
        if not 0 <= phi < TWO_PI:
            raise ValueError(f"phase must lie in [0, 2π), got {phi}")
        self._rows.append(np.concatenate(([t, phi], r, r_dot, xi)))

    def extend_from_record(self, segment: TrajectorySegment) -> "SampleStore":
        """追加一段仿真轨迹的全部样本。"""
        for n in range(len(segment.t)):
            self.append(segment.t[n], segment.phi[n], segment.r[n], segment.r_dot[n], segment.xi[n])
        return self

    def as_array(self) -> np.ndarray:
        if not self._rows:
            return np.empty((0, self.width))
        return np.vstack(self._rows)

    def columns(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """拆分为 (t, φ, r, ṙ, ξ)。"""
        data = self.as_array()
        d = self.shape_dim
        return (
            data[:, 0],
            data[:, 1],
            data[:, 2 : 2 + d],
            data[:, 2 + d : 2 + 2 * d],
            data[:, 2 + 2 * d :],
        )

    def slice_cycles(self, n_cycles: int, steps_per_cycle: int) -> "SampleStore":
        """前 n_cycles 个周期的样本组成的新存储（共享行数组）。"""
        subset = SampleStore(self.shape_dim)
        subset._rows = self._rows[: n_cycles * steps_per_cycle]
        return subset

    def to_csv(self, path: Union[str, Path], header: Optional[dict] = None) -> Path:
        """写出 CSV；header 中的键值写成开头的 `# key: value` 注释行。"""
        path = Path(path)
        buffer = io.StringIO()
        write_header(buffer, header)
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(csv_columns(self.shape_dim))
        for row in self._rows:
            writer.writerow([repr(float(v)) for v in row])
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(buffer.getvalue(), encoding="utf-8")
        except OSError as exc:
            raise ResultsIOError(path, str(exc)) from exc
        return path

    @classmethod
    def from_csv(cls, path: Union[str, Path]) -> "SampleStore":
        path = Path(path)
        try:
            lines = path.read_text(encoding="utf-8").splitlines()
        except OSError as exc:
            raise ResultsIOError(path, str(exc)) from exc
        reader = csv.reader(line for line in lines if not line.startswith("#"))
        header = next(reader, None)
        if header is None:
            raise ResultsIOError(path, "missing column header")
        d = sum(1 for name in header if name.startswith("r_"))
        if header != csv_columns(d):
            raise ResultsIOError(path, f"unexpected columns {header}")
        store = cls(d)
        for row in reader:
            values = np.array([float(v) for v in row])
            store.append(values[0], values[1], values[2 : 2 + d], values[2 + d : 2 + 2 * d], values[2 + 2 * d :])
        return store


class BatchModel(PhaseLinearPredictor):
    """逐窗口 OLS 权重，与 FilterBank 使用相同的平滑与预测。"""

    def __init__(
        self,
        grid: PhaseWindowGrid,
        nominal: Gait,
        weights: np.ndarray,
        smoothing_order: int = 4,
    ):
        super().__init__(grid, nominal, smoothing_order)
        self.weights = np.asarray(weights, dtype=float)

    def window_weights(self) -> np.ndarray:
        return self.weights


def fit_batch(
    store: SampleStore,
    grid: PhaseWindowGrid,
    nominal: Gait,
    smoothing_order: int = 4,
) -> BatchModel:
    """逐窗口用 SVD 最小二乘拟合 ξ_k ~ [1, δ^m, δ̇^m, δ^m⊗δ̇^m]·w_k。

    偏移取自窗口中心的名义形状，与 FilterBank.ingest_sample 一致。

    异常：
        RankDeficiencyError: 某窗口样本数少于参数个数

    设计矩阵秩亏或病态时发出 DegenerateRegressionWarning，并返回最小范数解。
    """
    if store.shape_dim != nominal.n_joints:
        raise DimensionMismatchError(
            f"store has {store.shape_dim} joints, gait has {nominal.n_joints}"
        )
    _, phis, r, r_dot, xi = store.columns()
    n_params = regressor_length(store.shape_dim)
    membership = grid.membership(phis)
    center_r, center_r_dot = nominal_shape_many(nominal, grid.centers)

    weights = np.empty((grid.m_windows, N_OUTPUTS, n_params))
    for m in range(grid.m_windows):
        rows = membership[:, m]
        n_samples = int(rows.sum())
        if n_samples < n_params:
            raise RankDeficiencyError(m, n_samples, n_params)
        design = build_regressors(r[rows] - center_r[m], r_dot[rows] - center_r_dot[m])
        solution, _, rank, singular = np.linalg.lstsq(design, xi[rows], rcond=None)
        condition = singular[0] / singular[-1] if singular[-1] > 0 else np.inf
        if rank < n_params or condition > DEGENERATE_CONDITION:
            # 秩亏时 lstsq 给出最小范数解
            warnings.warn(
                f"window {m} design matrix is degenerate "
                f"(rank {rank} of {n_params}, condition {condition:.3g})",
                DegenerateRegressionWarning,
                stacklevel=2,
            )
        weights[m] = solution.T
    logger.debug("batch model fitted on %d samples", len(store))
    return BatchModel(grid, nominal, weights, smoothing_order)


class PhaseAverageModel(PhaseProfilePredictor):
    """各窗口 ξ 的样本均值，沿相位平滑。"""

    def __init__(self, grid: PhaseWindowGrid, means: np.ndarray, smoothing_order: int = 4):
        super().__init__(grid, smoothing_order)
        self.means = np.asarray(means, dtype=float)

    def window_values(self) -> np.ndarray:
        return self.means


def fit_phase_average(
    store: SampleStore,
    grid: PhaseWindowGrid,
    smoothing_order: int = 4,
) -> PhaseAverageModel:
    """零阶相位平均模型 ξ_T。

    异常：
        UnfittedModelError: 存在没有样本的窗口
    """
    _, phis, _, _, xi = store.columns()
    membership = grid.membership(phis)
    counts = membership.sum(axis=0)
    empty = [int(m) for m in np.flatnonzero(counts == 0)]
    if empty:
        raise UnfittedModelError(empty)
    means = (membership.T.astype(float) @ xi) / counts[:, None]
    return PhaseAverageModel(grid, means, smoothing_order)


__all__ = [
    "DEGENERATE_CONDITION",
    "DegenerateRegressionWarning",
    "SampleStore",
    "BatchModel",
    "PhaseAverageModel",
    "csv_columns",
    "fit_batch",
    "fit_phase_average",
]
