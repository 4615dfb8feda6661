# -*- coding: utf-8 -*-
"""试验记录 TrialRecord：逐样本行、逐迭代行，以及可增量追加的 CSV 输出。"""

import csv
import json
import logging
from pathlib import Path
from typing import Literal, Optional, TextIO, Union

import numpy as np
from pydantic import BaseModel, Field

from .errors import ResultsIOError

logger = logging.getLogger(__name__)

Outcome = Literal["optimized", "gate_never_passed", "running"]


def step_columns(d: int) -> list[str]:
    return (
        ["t", "phi"]
        + [f"r_{j + 1}" for j in range(d)]
        + [f"rdot_{j + 1}" for j in range(d)]
        + ["xi_x", "xi_y", "xi_theta"]
        + ["xid_x", "xid_y", "xid_theta"]
        + ["xit_x", "xit_y", "xit_theta"]
        + ["gamma"]
    )


ITERATION_COLUMNS = [
    "iteration",
    "cycles_consumed",
    "gamma",
    "predicted_objective",
    "realized_displacement",
    "nominal_displacement",
    "stepped",
    "coefficients",
]


class IterationRow(BaseModel):
    """一次优化迭代的汇总。"""

    iteration: int = Field(ge=0)
    cycles_consumed: int = Field(ge=0, description="截至本迭代结束累计消耗的周期数")
    gamma: Optional[float] = Field(default=None, description="门控时刻的 Γ")
    predicted_objective: Optional[float] = None
    realized_displacement: float = Field(description="本迭代扰动周期的平均每周期位移")
    nominal_displacement: float = Field(description="名义步态无噪声评估的每周期位移")
    stepped: bool = False
    coefficients: list[list[float]]

    def csv_row(self) -> list[str]:
        return [
            str(self.iteration),
            str(self.cycles_consumed),
            _fmt(self.gamma),
            _fmt(self.predicted_objective),
            _fmt(self.realized_displacement),
            _fmt(self.nominal_displacement),
            str(int(self.stepped)),
            json.dumps(self.coefficients),
        ]


def _fmt(value: Optional[float]) -> str:
    return "" if value is None else repr(float(value))


def write_header(handle: TextIO, header: Optional[dict]) -> None:
    """结果 CSV 共用的注释头：每个键一行 `# key: value`，非字符串值写成排序键的 JSON。"""
    for key, value in (header or {}).items():
        text = value if isinstance(value, str) else json.dumps(value, sort_keys=True)
        handle.write(f"# {key}: {text}\n")


class TrialRecord:
    """一次试验的只追加记录。

    给定 step_path / iteration_path 时，每一行写入后立即刷新到磁盘，
    中途崩溃也能保留已完成的部分。
    """

    def __init__(
        self,
        shape_dim: int,
        step_path: Optional[Union[str, Path]] = None,
        iteration_path: Optional[Union[str, Path]] = None,
        header: Optional[dict] = None,
    ):
        self.shape_dim = shape_dim
        self.header = dict(header or {})
        self.steps: list[np.ndarray] = []
        self.iterations: list[IterationRow] = []
        self.outcome: Outcome = "running"
        self._step_sink = self._open(step_path, step_columns(shape_dim))
        self._iteration_sink = self._open(iteration_path, ITERATION_COLUMNS)

    def _open(self, path, columns):
        if path is None:
            return None
        path = Path(path)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            handle = path.open("w", encoding="utf-8", newline="")
            write_header(handle, self.header)
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(columns)
            handle.flush()
        except OSError as exc:
            raise ResultsIOError(path, str(exc)) from exc
        return path, handle, writer

    @staticmethod
    def _emit(sink, rows) -> None:
        if sink is None:
            return
        path, handle, writer = sink
        try:
            writer.writerows(rows)
            handle.flush()
        except OSError as exc:
            raise ResultsIOError(path, str(exc)) from exc

    @property
    def cycles_consumed(self) -> int:
        return self.iterations[-1].cycles_consumed if self.iterations else 0

    def add_steps(
        self,
        t: np.ndarray,
        phi: np.ndarray,
        r: np.ndarray,
        r_dot: np.ndarray,
        xi: np.ndarray,
        xi_d: np.ndarray,
        xi_t: np.ndarray,
        gamma: np.ndarray,
    ) -> None:
        """追加一批逐样本行；未定义的 ξ_D、ξ_T、Γ 用 NaN 表示。"""
        block = np.column_stack((t, phi, r, r_dot, xi, xi_d, xi_t, gamma))
        self.steps.extend(block)
        self._emit(
            self._step_sink,
            ([("" if np.isnan(v) else repr(float(v))) for v in row] for row in block),
        )

    def add_iteration(self, row: IterationRow) -> None:
        if row.cycles_consumed < self.cycles_consumed:
            raise ValueError("cycles consumed must not decrease between iterations")
        self.iterations.append(row)
        self._emit(self._iteration_sink, [row.csv_row()])

    def step_array(self) -> np.ndarray:
        if not self.steps:
            return np.empty((0, len(step_columns(self.shape_dim))))
        return np.vstack(self.steps)

    def gamma_series(self) -> np.ndarray:
        return self.step_array()[:, -1]

    def cycles_to_final_gait(self) -> int:
        """最后一次步态更新时已消耗的周期数；从未更新时为 0。"""
        stepped = [row.cycles_consumed for row in self.iterations if row.stepped]
        return stepped[-1] if stepped else 0

    def relative_improvement(self) -> Optional[float]:
        """末次名义步态相对种子步态的无噪声位移提升比例。"""
        if not self.iterations:
            return None
        first = self.iterations[0].nominal_displacement
        last = self.iterations[-1].nominal_displacement
        if first == 0:
            return None
        return (last - first) / abs(first)

    def summary(self) -> dict:
        return {
            "outcome": self.outcome,
            "iterations": len(self.iterations),
            "cycles_consumed": self.cycles_consumed,
            "cycles_to_final_gait": self.cycles_to_final_gait(),
            "seed_displacement": self.iterations[0].nominal_displacement if self.iterations else None,
            "final_displacement": self.iterations[-1].nominal_displacement if self.iterations else None,
            "relative_improvement": self.relative_improvement(),
        }

    def close(self) -> None:
        """写入汇总行并关闭文件。"""
        if self._iteration_sink is not None:
            path, handle, _ = self._iteration_sink
            try:
                write_header(handle, {"summary": self.summary()})
            except OSError as exc:
                raise ResultsIOError(path, str(exc)) from exc
        for sink in (self._step_sink, self._iteration_sink):
            if sink is not None:
                sink[1].close()
        self._step_sink = None
        self._iteration_sink = None

    def __enter__(self) -> "TrialRecord":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


__all__ = [
    "Outcome",
    "IterationRow",
    "TrialRecord",
    "ITERATION_COLUMNS",
    "step_columns",
    "write_header",
]
