"""
Experiment Config

実験設定 (TOML / YAML / JSON) の読み込み・検証・書き出し
"""

import json
import logging
import os
import re
import sys
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

import tomli_w
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from ncerg.algebra import AlgebraShape, Operator, OperatorKind, operator_from_json
from ncerg.errors import ConfigError, NcergError
from ncerg.ergodic import DEFAULT_SCHEDULE
from ncerg.kernels import KernelRecipe
from ncerg.rearrangement import NormId

logger = logging.getLogger(__name__)

SEED_ENV = "NCERG_SEED"
SEED_LIMIT = 2**64
DEFAULT_NORMS = ("L1", "Linf", "L1capLinf", "L1plusLinf")

_TOML_POSITION = re.compile(r"\(at line (?P<line>\d+), column (?P<column>\d+)\)")


class ElementSpec(BaseModel):
    """
    初期元: 乱数 (kind, seed, rank) か明示的な作用素 JSON (operator)

    kind を省略すると psd、seed を省略すると試行ごとのシードから導出する
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: OperatorKind | None = None
    seed: int | None = Field(default=None, ge=0, lt=SEED_LIMIT)
    rank: int | None = Field(default=None, ge=0)
    operator: dict[str, Any] | None = None

    @model_validator(mode="after")
    def _one_source(self) -> "ElementSpec":
        if self.operator is not None:
            if self.kind is not None or self.seed is not None or self.rank is not None:
                raise ValueError("an explicit operator takes no kind, seed or rank")
            try:
                operator_from_json(self.operator)
            except NcergError as e:
                raise ValueError(str(e)) from e
        elif self.operator_kind is OperatorKind.PROJECTION and self.rank is None:
            raise ValueError("projection elements need a 'rank'")
        return self

    @property
    def operator_kind(self) -> OperatorKind:
        return self.kind if self.kind is not None else OperatorKind.PSD

    @property
    def explicit(self) -> Operator | None:
        return operator_from_json(self.operator) if self.operator is not None else None


class Budgets(BaseModel):
    """n_max, epsilon, bound, tol (すべて正)"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    n_max: int = Field(default=4, ge=1)
    epsilon: float = Field(default=0.1, gt=0, allow_inf_nan=False)
    bound: float = Field(default=0.5, gt=0, allow_inf_nan=False)
    tol: float = Field(default=1e-9, gt=0, allow_inf_nan=False)


class ExperimentConfig(BaseModel):
    """
    一つの実験の完全な記述

    同じ設定からは同じ出力が得られる (乱数はすべて seed から導出)
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    experiment: str = Field(min_length=1)
    seed: int = Field(ge=0, lt=SEED_LIMIT)
    shape: list[tuple[int, float]] = Field(min_length=1)
    kernel: KernelRecipe
    element: ElementSpec = Field(default_factory=ElementSpec)
    norms: list[str] = Field(default_factory=lambda: list(DEFAULT_NORMS), min_length=1)
    schedule: list[int] = Field(default_factory=lambda: list(DEFAULT_SCHEDULE), min_length=1)
    budgets: Budgets = Field(default_factory=Budgets)
    trials: int = Field(default=1, ge=1)
    workers: int = Field(default=1, ge=1)

    @field_validator("shape")
    @classmethod
    def _valid_shape(cls, pairs: list[tuple[int, float]]) -> list[tuple[int, float]]:
        try:
            AlgebraShape.from_pairs(pairs)
        except ValidationError as e:
            raise ValueError(f"invalid shape {pairs}: {e.error_count()} problem(s)") from e
        return pairs

    @field_validator("norms")
    @classmethod
    def _known_norms(cls, norms: list[str]) -> list[str]:
        unknown = []
        for text in norms:
            try:
                NormId.parse(text)
            except NcergError:
                unknown.append(text)
        if unknown:
            raise ValueError(f"unknown norms: {', '.join(unknown)}")
        return norms

    @field_validator("schedule")
    @classmethod
    def _increasing_schedule(cls, schedule: list[int]) -> list[int]:
        if schedule[0] < 1:
            raise ValueError(f"schedule entries must be >= 1, got {schedule[0]}")
        if any(b <= a for a, b in zip(schedule, schedule[1:], strict=False)):
            raise ValueError(f"schedule must be strictly increasing: {schedule}")
        return schedule

    @property
    def algebra_shape(self) -> AlgebraShape:
        return AlgebraShape.from_pairs(self.shape)

    @property
    def norm_ids(self) -> list[NormId]:
        return [NormId.parse(text) for text in self.norms]


def _location(error: dict[str, Any]) -> str:
    return ".".join(str(part) for part in error["loc"]) or "<root>"


def validate_document(document: Any) -> ExperimentConfig:
    """
    辞書を検証して ExperimentConfig にする

    Args:
        document: 読み込んだ設定

    Returns:
        ExperimentConfig: 検証済み設定

    Raises:
        ConfigError: 全ての違反を列挙
    """
    if not isinstance(document, dict):
        raise ConfigError([f"config must be a table, got {type(document).__name__}"])
    try:
        return ExperimentConfig.model_validate(document)
    except ValidationError as e:
        raise ConfigError([f"{_location(err)}: {err['msg']}" for err in e.errors()]) from e


def parse_config(text: str) -> ExperimentConfig:
    """
    TOML テキストから設定を作成

    Args:
        text: TOML テキスト

    Returns:
        ExperimentConfig: 検証済み設定

    Raises:
        ConfigError: 構文エラー (行・列付き) または意味的な違反の一覧
    """
    try:
        document = tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        match = _TOML_POSITION.search(str(e))
        line = int(match.group("line")) if match else None
        column = int(match.group("column")) if match else None
        raise ConfigError([f"TOML syntax error: {e}"], line, column) from e
    return validate_document(document)


def config_to_document(config: ExperimentConfig) -> dict[str, Any]:
    return config.model_dump(mode="json", exclude_none=True)


def dump_config(config: ExperimentConfig) -> str:
    """Serialize to TOML; parse_config(dump_config(c)) == c"""
    return tomli_w.dumps(config_to_document(config))


def load_config(path: Path) -> ExperimentConfig:
    """
    設定ファイルを読み込み (拡張子で形式を判定)

    Args:
        path: .toml / .yaml / .yml / .json

    Returns:
        ExperimentConfig: 検証済み設定
    """
    try:
        content = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError([f"cannot read {path}: {e}"]) from e

    suffix = path.suffix.lower()
    if suffix in [".yaml", ".yml"]:
        try:
            document = yaml.safe_load(content)
        except yaml.YAMLError as e:
            mark = getattr(e, "problem_mark", None)
            line = mark.line + 1 if mark is not None else None
            column = mark.column + 1 if mark is not None else None
            raise ConfigError([f"YAML syntax error: {e}"], line, column) from e
        config = validate_document(document)
    elif suffix == ".json":
        try:
            document = json.loads(content)
        except json.JSONDecodeError as e:
            raise ConfigError([f"JSON syntax error: {e.msg}"], e.lineno, e.colno) from e
        config = validate_document(document)
    else:
        config = parse_config(content)
    logger.info(f"Loaded experiment '{config.experiment}' from {path}")
    return config


def save_config(path: Path, config: ExperimentConfig) -> None:
    """拡張子に合わせて TOML / YAML / JSON で保存"""
    document = config_to_document(config)
    suffix = path.suffix.lower()
    if suffix in [".yaml", ".yml"]:
        text = yaml.dump(document, default_flow_style=False, allow_unicode=True, sort_keys=False)
    elif suffix == ".json":
        text = json.dumps(document, indent=2, ensure_ascii=False)
    else:
        text = tomli_w.dumps(document)
    path.write_text(text, encoding="utf-8")


def resolve_seed(
    config: ExperimentConfig,
    cli_seed: int | None = None,
    environ: dict[str, str] | None = None,
) -> ExperimentConfig:
    """
    シードの優先順位: CLI フラグ > 環境変数 NCERG_SEED > 設定ファイル

    Args:
        config: 設定
        cli_seed: --seed の値
        environ: 環境変数 (省略時は os.environ)

    Returns:
        ExperimentConfig: seed を差し替えた設定
    """
    env = os.environ if environ is None else environ
    if cli_seed is not None:
        seed, source = cli_seed, "--seed"
    elif env.get(SEED_ENV):
        try:
            seed, source = int(env[SEED_ENV]), SEED_ENV
        except ValueError as e:
            raise ConfigError([f"{SEED_ENV} must be an integer, got '{env[SEED_ENV]}'"]) from e
    else:
        return config
    if not 0 <= seed < SEED_LIMIT:
        raise ConfigError([f"seed must be an unsigned 64-bit integer, got {seed} ({source})"])
    logger.debug(f"Seed {seed} taken from {source}")
    return config.model_copy(update={"seed": seed})
