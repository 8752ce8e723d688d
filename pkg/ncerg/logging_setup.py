"""
Logging Setup

CLI 用のコンソールログ設定 (ライブラリ側はハンドラを設定しない)
"""

import logging
import sys

import coloredlogs

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def resolve_level(verbose: bool = False, quiet: bool = False) -> int:
    """--verbose は DEBUG, --quiet は WARNING, それ以外は INFO"""
    if verbose:
        return logging.DEBUG
    if quiet:
        return logging.WARNING
    return logging.INFO


def setup_logging(verbose: bool = False, quiet: bool = False) -> int:
    """
    ncerg ロガーに色付きのコンソール出力を設定

    CSV/JSON を stdout に書くため、ログは stderr に出す

    Args:
        verbose: DEBUG レベル
        quiet: WARNING レベル

    Returns:
        int: 設定したログレベル
    """
    level = resolve_level(verbose, quiet)
    coloredlogs.install(
        level=level,
        logger=logging.getLogger("ncerg"),
        fmt=LOG_FORMAT,
        stream=sys.stderr,
    )
    return level
