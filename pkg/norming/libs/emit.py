"""
Report emission: JSON, CSV and rich tables.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from typing import Any, Dict, Iterable, List, Literal, Tuple

from pydantic import BaseModel, ConfigDict, Field
from rich.table import Table

from norming.libs import constants

EmitFormat = Literal["table", "json", "csv"]


class Document(BaseModel):
    """
    Base for every externally visible schema; carries the schema version tag.
    """

    model_config = ConfigDict(populate_by_name=True, ser_json_inf_nan="constants")

    schema_tag: str = Field(default=constants.SCHEMA, alias="schema")

    def to_json(self) -> str:
        """Canonical JSON text"""
        return self.model_dump_json(indent=2, by_alias=True)


class Provenance(BaseModel):
    """Inputs a derived number was computed from, with a stable digest"""

    model_config = ConfigDict(ser_json_inf_nan="constants")

    inputs: Dict[str, Any]
    sha256: str

    @classmethod
    def of(cls, **inputs: Any) -> Provenance:
        canonical = json.dumps(_jsonable(inputs), sort_keys=True, separators=(",", ":"))
        return cls(inputs=inputs, sha256=hashlib.sha256(canonical.encode("utf-8")).hexdigest())


def _jsonable(value: Any) -> Any:
    if isinstance(value, BaseModel):
        return value.model_dump(mode="json", by_alias=True)
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, float) and not math.isfinite(value):
        return repr(value)
    if hasattr(value, "tolist"):
        return value.tolist()
    return value


def flatten(data: Any, prefix: str = "") -> List[Tuple[str, Any]]:
    """Nested dicts/lists to dotted (key, value) pairs"""
    if isinstance(data, dict):
        items: List[Tuple[str, Any]] = []
        for key, value in data.items():
            items.extend(flatten(value, f"{prefix}.{key}" if prefix else str(key)))
        return items
    if isinstance(data, list):
        if all(not isinstance(v, (dict, list)) for v in data):
            return [(prefix, json.dumps(data))]
        items = []
        for i, value in enumerate(data):
            items.extend(flatten(value, f"{prefix}.{i}"))
        return items
    return [(prefix, data)]


def _format_value(value: Any) -> str:
    if isinstance(value, float):
        return repr(value)
    return "" if value is None else str(value)


def to_csv(document: Document) -> str:
    """CSV rendering; gallery cases get one row per measured quantity"""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    data = document.model_dump(mode="python", by_alias=True)
    if "rows" in data and "name" in data:
        writer.writerow(constants.CSV_COLUMNS["gallery"])
        for row in data["rows"]:
            writer.writerow(
                [data["name"]]
                + [_format_value(row.get(col)) for col in constants.CSV_COLUMNS["gallery"][1:]]
            )
    else:
        writer.writerow(constants.CSV_COLUMNS["report"])
        for key, value in flatten(data):
            writer.writerow([key, _format_value(value)])
    return buffer.getvalue()


def tabulate_key_values(values: Iterable[Tuple[str, Any]], title: str = "") -> Table:
    table = Table(show_header=False, title=title or None, title_justify="left")
    table.add_column("Property")
    table.add_column("Value", justify="right")
    for key, value in values:
        value_str = "{:.6g}".format(value) if isinstance(value, float) else str(value)
        table.add_row(key, value_str)
    return table


def to_table(document: Document) -> Table:
    """Human readable rendering of scalar fields (polynomials and long lists are summarized)"""
    data = document.model_dump(mode="python", by_alias=True)
    if "rows" in data and "name" in data:
        table = Table(title=f"gallery: {data['name']}", title_justify="left")
        for column in constants.CSV_COLUMNS["gallery"][1:]:
            table.add_column(column)
        for row in data["rows"]:
            table.add_row(*[_format_value(row.get(col)) for col in constants.CSV_COLUMNS["gallery"][1:]])
        return table
    values = []
    for key, value in flatten(data):
        if isinstance(value, str) and len(value) > 80:
            value = value[:77] + "..."
        values.append((key, value))
    return tabulate_key_values(values, title=type(document).__name__)


def render(document: Document, fmt: EmitFormat) -> Any:
    """Render to a string (json, csv) or a rich renderable (table)"""
    if fmt == "json":
        return document.to_json()
    if fmt == "csv":
        return to_csv(document)
    return to_table(document)
