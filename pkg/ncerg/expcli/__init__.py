"""
Experiment CLI

設定駆動の実験ランナーと結果表 (CSV / JSON) の出力
"""

from .config import (
    Budgets,
    ElementSpec,
    ExperimentConfig,
    dump_config,
    load_config,
    parse_config,
    resolve_seed,
    save_config,
)
from .emit import OutputFormat, ResultRow, emit, render, rows_from_csv, rows_from_json
from .runner import Command, ExperimentRunner, any_failed, run

__all__ = [
    "Budgets",
    "Command",
    "ElementSpec",
    "ExperimentConfig",
    "ExperimentRunner",
    "OutputFormat",
    "ResultRow",
    "any_failed",
    "dump_config",
    "emit",
    "load_config",
    "parse_config",
    "render",
    "resolve_seed",
    "rows_from_csv",
    "rows_from_json",
    "run",
    "save_config",
]
