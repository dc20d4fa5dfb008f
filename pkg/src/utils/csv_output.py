import csv
from collections.abc import Iterable, Mapping
from enum import Enum
from fractions import Fraction
import hashlib
import io
import json
from pathlib import Path
import sys

from pydantic import BaseModel

from src.constants.scenarios import CSV_SCHEMA_VERSION


def format_value(value: object) -> str:
    """
    CSV text of a cell: floats to 6 significant digits, fractions as a/b, enums by value.
    """
    match value:
        case None:
            return ""
        case bool():
            return "true" if value else "false"
        case Fraction():
            return str(value)
        case Enum():
            return str(value.value)
        case float():
            return f"{value:.6g}"
        case _:
            return str(value)


def config_hash(config: BaseModel) -> str:
    payload = json.dumps(config.model_dump(mode="json"), sort_keys=True)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


def provenance(config: BaseModel, seed: int | None) -> dict[str, object]:
    return {
        "schema_version": CSV_SCHEMA_VERSION,
        "config_hash": config_hash(config),
        "seed": seed,
    }


def render_csv(rows: Iterable[Mapping[str, object]], columns: list[str]) -> str:
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({column: format_value(row.get(column)) for column in columns})
    return buffer.getvalue()


def write_csv(
    rows: Iterable[Mapping[str, object]],
    columns: list[str],
    out: str | Path | None = None,
) -> str:
    """
    Write rows to `out`, or to stdout when no path is given.

    Returns:
        The CSV text that was written
    """
    text = render_csv(rows, columns)
    if out is None:
        sys.stdout.write(text)
    else:
        path = Path(out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8", newline="")
    return text
