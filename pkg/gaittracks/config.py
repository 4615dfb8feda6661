# -*- coding: utf-8 -*-
"""gaittracks 的运行时配置模块。

本模块集中了与实验内容无关的运行时参数（日志、并行度、输出目录），
从环境变量加载值，并提供合理的默认值。实验本身的参数见
`gaittracks.experiments.settings`。

环境变量：
    GAITTRACKS_LOG_LEVEL: 日志级别（默认：INFO）
                          选项：DEBUG, INFO, WARNING, ERROR, CRITICAL
    GAITTRACKS_ENABLE_LOGFIRE: 启用 logfire 日志（默认：false）
    LOGFIRE_TOKEN: logfire 令牌，仅在存在时才上传日志
    GAITTRACKS_WORKERS: 并行试验的进程数（默认：1）
    GAITTRACKS_OUTPUT_DIR: 结果输出目录（默认：./results）

使用方法：
    from gaittracks.config import load_settings

    settings = load_settings()
    print(settings.log_level)
"""

import os
from dataclasses import dataclass
from typing import Optional

import dotenv

VALID_LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


@dataclass
class GaitTracksSettings:
    """gaittracks 的运行时配置数据类。

    所有值都从环境变量加载，并带有合理的默认值。
    """

    # ============================================================================
    # Logging Configuration
    # ============================================================================
    log_level: str = "INFO"
    enable_logfire: bool = False
    logfire_token: Optional[str] = None

    # ============================================================================
    # Execution Configuration
    # ============================================================================
    workers: int = 1
    output_dir: str = "./results"

    def __post_init__(self):
        """初始化后验证配置。"""
        if self.log_level.upper() not in VALID_LOG_LEVELS:
            raise ValueError(
                f"Invalid log_level: {self.log_level}. "
                f"Must be one of: {', '.join(VALID_LOG_LEVELS)}"
            )
        self.log_level = self.log_level.upper()

        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")

    def to_dict(self) -> dict:
        """将配置转换为字典（令牌被屏蔽）。"""
        return {
            "log_level": self.log_level,
            "enable_logfire": self.enable_logfire,
            "logfire_token": "***" if self.logfire_token else None,
            "workers": self.workers,
            "output_dir": self.output_dir,
        }


def _parse_bool(value: Optional[str], default: bool = False) -> bool:
    """从环境变量字符串解析布尔值。"""
    if value is None:
        return default
    return value.lower() in ("true", "1", "yes", "on", "t")


def _parse_int(value: Optional[str], default: int) -> int:
    """从环境变量字符串解析整数值，失败时返回默认值。"""
    if value is None:
        return default
    try:
        return int(value)
    except (ValueError, TypeError):
        return default


def load_settings() -> GaitTracksSettings:
    """从环境变量（以及 .env 文件）加载运行时配置。

    返回：
        GaitTracksSettings: 验证过的配置对象

    异常：
        ValueError: 如果环境变量取值无效
    """
    dotenv.load_dotenv()
    return GaitTracksSettings(
        log_level=os.getenv("GAITTRACKS_LOG_LEVEL", "INFO"),
        enable_logfire=_parse_bool(os.getenv("GAITTRACKS_ENABLE_LOGFIRE"), False),
        logfire_token=os.getenv("LOGFIRE_TOKEN"),
        workers=_parse_int(os.getenv("GAITTRACKS_WORKERS"), 1),
        output_dir=os.getenv("GAITTRACKS_OUTPUT_DIR", "./results"),
    )


__all__ = [
    "GaitTracksSettings",
    "load_settings",
]
