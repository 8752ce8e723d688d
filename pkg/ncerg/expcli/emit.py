"""
Result Emitter

ResultRow の CSV / JSON 出力と --dump 用の中間生成物の書き出し
"""

import csv
import io
import json
import logging
import math
import sys
from collections.abc import Sequence
from enum import Enum
from pathlib import Path
from typing import Any, Literal, TextIO

from pydantic import BaseModel, ConfigDict, field_validator

from ncerg.errors import EmitError

logger = logging.getLogger(__name__)

CSV_HEADER = ("experiment", "command", "level", "metric", "value", "verdict")

Verdict = Literal["pass", "fail", "n/a"]


class OutputFormat(str, Enum):
    CSV = "csv"
    JSON = "json"


class ResultRow(BaseModel):
    """One measured number; value is always finite"""

    model_config = ConfigDict(frozen=True)

    experiment: str
    command: str
    level: int
    metric: str
    value: float
    verdict: Verdict = "n/a"

    @field_validator("value")
    @classmethod
    def _finite(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError(f"row values must be finite, got {value}")
        return value


def _format_value(value: float) -> str:
    # repr is the shortest string that round-trips
    return repr(float(value))


def rows_to_csv(rows: Sequence[ResultRow]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer)
    writer.writerow(CSV_HEADER)
    for row in rows:
        writer.writerow(
            [row.experiment, row.command, row.level, row.metric, _format_value(row.value), row.verdict]
        )
    return buffer.getvalue()


def rows_to_json(rows: Sequence[ResultRow]) -> str:
    return json.dumps([row.model_dump() for row in rows], indent=2, ensure_ascii=False) + "\n"


def rows_from_csv(text: str) -> list[ResultRow]:
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != CSV_HEADER:
        raise ValueError(f"unexpected CSV header: {reader.fieldnames}")
    return [ResultRow.model_validate(record) for record in reader]


def rows_from_json(text: str) -> list[ResultRow]:
    return [ResultRow.model_validate(record) for record in json.loads(text)]


def render(rows: Sequence[ResultRow], fmt: OutputFormat | str) -> str:
    fmt = OutputFormat(fmt)
    return rows_to_csv(rows) if fmt is OutputFormat.CSV else rows_to_json(rows)


def emit(
    rows: Sequence[ResultRow],
    fmt: OutputFormat | str,
    destination: Path | None = None,
    stream: TextIO | None = None,
) -> None:
    """
    結果を書き出し

    Args:
        rows: 結果行
        fmt: csv または json
        destination: 出力先ファイル (省略時は stream)
        stream: 出力ストリーム (省略時は stdout)

    Raises:
        EmitError: 書き込み失敗 (パス付き)
    """
    text = render(rows, fmt)
    if destination is None:
        (stream or sys.stdout).write(text)
        return
    try:
        destination.parent.mkdir(parents=True, exist_ok=True)
        # newline="" keeps the CRLF row terminators untouched
        with destination.open("w", encoding="utf-8", newline="") as handle:
            handle.write(text)
    except OSError as e:
        raise EmitError(str(destination), str(e)) from e
    logger.info(f"Wrote {len(rows)} rows to {destination}")


def dump_artifact(directory: Path, name: str, document: dict[str, Any]) -> Path:
    """
    中間生成物を directory/name.json に保存

    Args:
        directory: --dump で指定したディレクトリ
        name: ファイル名 (拡張子なし)
        document: JSON 化できる辞書

    Returns:
        Path: 書き出したファイル
    """
    path = directory / f"{name}.json"
    try:
        directory.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(document, sort_keys=True) + "\n", encoding="utf-8")
    except (OSError, TypeError, ValueError) as e:
        raise EmitError(str(path), str(e)) from e
    logger.debug(f"Dumped artifact {path}")
    return path
