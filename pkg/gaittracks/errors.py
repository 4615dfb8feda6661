# -*- coding: utf-8 -*-
"""gaittracks 的异常层级。

CLI 根据异常类型映射退出码：
    ConfigError -> 2
    NumericalError / ModelError -> 3
    ResultsIOError -> 4
"""

from pathlib import Path
from typing import Optional, Union


class GaitTracksError(Exception):
    """所有 gaittracks 异常的基类。"""


class ConfigError(GaitTracksError, ValueError):
    """配置无效（未知字段、越界参数、无法解析的配置文件）。"""


class NumericalError(GaitTracksError, ArithmeticError):
    """数值计算失败。"""


class NumericalSingularityError(NumericalError):
    """力平衡矩阵 ω_ξ 病态（条件数超过阈值）。"""

    def __init__(self, condition_number: float, threshold: float):
        self.condition_number = condition_number
        self.threshold = threshold
        super().__init__(
            f"force-balance matrix is ill-conditioned: cond={condition_number:.3e} "
            f"exceeds {threshold:.1e}"
        )


class NonFiniteInputError(NumericalError, ValueError):
    """估计器收到 NaN 或 inf。"""


class ModelError(GaitTracksError):
    """模型生命周期错误。"""


class UnfittedModelError(ModelError):
    """在没有数据的窗口上请求预测。"""

    def __init__(self, empty_windows: list[int]):
        self.empty_windows = list(empty_windows)
        super().__init__(
            f"model has no data in phase windows {self.empty_windows}"
        )


class RankDeficiencyError(ModelError):
    """批量回归在某个相位窗口内欠定。"""

    def __init__(self, window: int, n_samples: int, n_params: int):
        self.window = window
        self.n_samples = n_samples
        self.n_params = n_params
        super().__init__(
            f"phase window {window} is underdetermined: "
            f"{n_samples} samples for {n_params} regressors"
        )


class DimensionMismatchError(ModelError, ValueError):
    """形状维度与模型不一致。"""


class ResultsIOError(GaitTracksError, OSError):
    """结果文件读写失败。"""

    def __init__(self, path: Union[str, Path], reason: Optional[str] = None):
        self.path = Path(path)
        message = f"results I/O failed for {self.path}"
        if reason:
            message = f"{message}: {reason}"
        super().__init__(message)


__all__ = [
    "GaitTracksError",
    "ConfigError",
    "NumericalError",
    "NumericalSingularityError",
    "NonFiniteInputError",
    "ModelError",
    "UnfittedModelError",
    "RankDeficiencyError",
    "DimensionMismatchError",
    "ResultsIOError",
]
