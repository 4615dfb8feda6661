# -*- coding: utf-8 -*-
"""可复现的随机数生成器。

所有随机性都来自 numpy 的 Philox 4x64 计数器型生成器（`numpy.random.Philox`），
其输出序列与平台无关。每个试验由 (seed, stream) 确定一个独立的子流。
"""

import numpy as np

RNG_ALGORITHM = "numpy.random.Philox (4x64-10)"


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """为 (seed, *stream) 构造一个独立、可复现的生成器。

    参数：
        seed: 实验种子（u64）
        stream: 子流编号，例如 (trial_index, role)

    返回：
        np.random.Generator: 基于 Philox 的生成器
    """
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    sequence = np.random.SeedSequence(entropy=seed, spawn_key=tuple(stream))
    return np.random.Generator(np.random.Philox(sequence))


def derive_seed(seed: int, *stream: int) -> int:
    """从 (seed, *stream) 派生一个 u64 子种子，用于跨进程传递。"""
    sequence = np.random.SeedSequence(entropy=seed, spawn_key=tuple(stream))
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


__all__ = ["RNG_ALGORITHM", "make_rng", "derive_seed"]
