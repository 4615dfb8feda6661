import logging

import logfire
from rich.logging import RichHandler

from .config import GaitTracksSettings


def configure_logfire(settings: GaitTracksSettings) -> None:
    """配置 logfire 与标准库 logging。

    'if-token-present' 表示如果没有配置令牌，不会发送日志信息；
    控制台输出交给 rich。
    """
    logfire.configure(
        token=settings.logfire_token,
        send_to_logfire="if-token-present" if settings.enable_logfire else False,
        console=False,
    )

    handlers: list[logging.Handler] = [RichHandler(rich_tracebacks=True)]
    if settings.enable_logfire:
        handlers.append(logfire.LogfireLoggingHandler())

    logging.basicConfig(
        level=settings.log_level,
        format="%(message)s",
        handlers=handlers,
        force=True,
    )
