# -*- coding: utf-8 -*-
"""试验分发与结果落盘。

试验之间互不依赖：workers > 1 时用进程池并行，结果顺序与任务顺序一致；
每个结果文件开头都写入完整配置与种子，使输出自描述。
"""

import csv
import io
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Callable, Iterable, Optional, Sequence, TypeVar, Union

import numpy as np

from ..errors import ResultsIOError
from ..records import write_header

logger = logging.getLogger(__name__)

R = TypeVar("R")

PERCENTILES = (5, 25, 50, 75, 95)


def _call(packed):
    fn, args = packed
    return fn(*args)


def run_trials(
    fn: Callable[..., R],
    tasks: Sequence[tuple],
    workers: int = 1,
) -> list[R]:
    """对每个参数元组调用 fn，按任务顺序返回结果。

    fn 必须是模块级函数，以便在子进程中反序列化。
    """
    if workers <= 1 or len(tasks) <= 1:
        return [fn(*args) for args in tasks]
    logger.info("dispatching %d trials to %d worker processes", len(tasks), workers)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_call, [(fn, args) for args in tasks]))


def header_lines(config: dict, seed: Union[int, Sequence[int]]) -> dict:
    return {"config": config, "seed": seed}


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "" if np.isnan(value) else repr(float(value))
    return str(value)


def write_csv(
    path: Union[str, Path],
    columns: Sequence[str],
    rows: Iterable[Sequence[Any]],
    header: Optional[dict] = None,
) -> Path:
    """写出带 `# key: value` 注释头的 CSV；NaN 与 None 写成空单元格。"""
    path = Path(path)
    buffer = io.StringIO()
    write_header(buffer, header)
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(buffer.getvalue(), encoding="utf-8")
    except OSError as exc:
        raise ResultsIOError(path, str(exc)) from exc
    logger.debug("wrote %s", path)
    return path


def write_json(path: Union[str, Path], payload: dict) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    except OSError as exc:
        raise ResultsIOError(path, str(exc)) from exc
    return path


def percentile_row(values: Sequence[float]) -> list[Optional[float]]:
    """忽略 NaN 的 5/25/50/75/95 分位数；全为 NaN 时返回 None。"""
    data = np.asarray(values, dtype=float)
    data = data[~np.isnan(data)]
    if data.size == 0:
        return [None] * len(PERCENTILES)
    return [float(v) for v in np.percentile(data, PERCENTILES)]


def ensure_dir(path: Union[str, Path]) -> Path:
    path = Path(path)
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ResultsIOError(path, str(exc)) from exc
    return path


__all__ = [
    "PERCENTILES",
    "run_trials",
    "header_lines",
    "write_csv",
    "write_json",
    "percentile_row",
    "ensure_dir",
]
