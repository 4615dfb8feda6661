# -*- coding: utf-8 -*-
"""SVG 图表输出（matplotlib Agg 后端）。

固定 svg.hashsalt 并去掉日期元数据，相同输入得到逐字节相同的文件。
CSV 才是结果的权威来源，图表只用于查看。
"""

import json
import logging
from pathlib import Path
from typing import Mapping, Sequence, Union

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from ..errors import ResultsIOError  # noqa: E402

logger = logging.getLogger(__name__)

_RC = {"svg.hashsalt": "gaittracks", "svg.fonttype": "none", "figure.dpi": 100}


def save_svg(fig, path: Union[str, Path], config: dict) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with matplotlib.rc_context(_RC):
            fig.savefig(
                path,
                format="svg",
                metadata={"Date": None, "Description": json.dumps(config, sort_keys=True)},
            )
    except OSError as exc:
        raise ResultsIOError(path, str(exc)) from exc
    finally:
        plt.close(fig)
    logger.debug("wrote %s", path)
    return path


def accuracy_boxplot(
    path: Union[str, Path],
    checkpoints: Sequence[int],
    series: Mapping[str, Sequence[Sequence[float]]],
    config: dict,
) -> Path:
    """每个检查点一组箱线图，须线取 5/95 分位。"""
    fig, ax = plt.subplots(figsize=(8, 4.5))
    n_series = len(series)
    width = 0.8 / max(n_series, 1)
    positions = np.arange(len(checkpoints), dtype=float)
    for i, (label, groups) in enumerate(series.items()):
        data = [np.asarray(g, dtype=float)[~np.isnan(np.asarray(g, dtype=float))] for g in groups]
        offset = (i - (n_series - 1) / 2) * width
        box = ax.boxplot(
            data,
            positions=positions + offset,
            widths=width * 0.9,
            whis=(5, 95),
            showfliers=False,
            patch_artist=True,
        )
        color = f"C{i}"
        for patch in box["boxes"]:
            patch.set_facecolor(color)
            patch.set_alpha(0.6)
        ax.plot([], [], color=color, linewidth=6, alpha=0.6, label=label)
    ax.set_xticks(positions, [str(c) for c in checkpoints])
    ax.set_xlabel("training cycles")
    ax.set_ylabel("holdout Γ")
    ax.axhline(0.0, color="grey", linewidth=0.5)
    ax.legend(loc="lower right")
    return save_svg(fig, path, config)


def error_timeseries(
    path: Union[str, Path],
    time: np.ndarray,
    series: Mapping[str, np.ndarray],
    switch_times: Sequence[float],
    config: dict,
) -> Path:
    """各模型的中位对数预测误差随时间变化，竖线标出阻力比切换时刻。"""
    fig, ax = plt.subplots(figsize=(9, 4.5))
    for i, (label, values) in enumerate(series.items()):
        ax.plot(time, values, color=f"C{i}", linewidth=0.8, label=label)
    for t in switch_times:
        ax.axvline(t, color="black", linestyle="--", linewidth=0.8)
    ax.set_xlabel("time (periods)")
    ax.set_ylabel("log prediction error")
    ax.legend(loc="upper right")
    return save_svg(fig, path, config)


def progress_plot(
    path: Union[str, Path],
    cycles: np.ndarray,
    bands: Mapping[str, np.ndarray],
    config: dict,
) -> Path:
    """相对提升的分位带：bands[label] 的形状为 (len(cycles), 5)。"""
    fig, ax = plt.subplots(figsize=(8, 4.5))
    for i, (label, table) in enumerate(bands.items()):
        table = np.asarray(table, dtype=float)
        color = f"C{i}"
        ax.fill_between(cycles, table[:, 0], table[:, 4], color=color, alpha=0.15, linewidth=0)
        ax.fill_between(cycles, table[:, 1], table[:, 3], color=color, alpha=0.3, linewidth=0)
        ax.plot(cycles, table[:, 2], color=color, label=label)
    ax.set_xlabel("cycles of experience")
    ax.set_ylabel("relative improvement")
    ax.axhline(0.0, color="grey", linewidth=0.5)
    ax.legend(loc="upper left")
    return save_svg(fig, path, config)


__all__ = ["save_svg", "accuracy_boxplot", "error_timeseries", "progress_plot"]
