"""Structured reports and input files.

Reports are JSON documents with a top-level ``"schema": 1``.  Exact
rationals are written as ``"p/q"`` strings; floats are written as JSON
numbers with 17 significant digits so they round-trip bit for bit.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import math
from fractions import Fraction
from typing import Any, TextIO

from .errors import TwoStageError
from .pi_model import PI_NAMES, PiVector
from .ustat import TwoStageData

SCHEMA = 1


class InputError(TwoStageError, ValueError):
    """Malformed input file; the message names the line."""


def render_value(v: Any, as_float: bool = False) -> Any:
    """Map a result value to a JSON-ready object (floats stay floats)."""
    if isinstance(v, bool) or v is None:
        return v
    if isinstance(v, Fraction):
        return float(v) if as_float else str(v)
    if isinstance(v, int):
        return v
    if isinstance(v, float):
        return v
    if isinstance(v, enum.Enum):
        return v.value
    if isinstance(v, dict):
        return {str(k): render_value(x, as_float) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [render_value(x, as_float) for x in v]
    if hasattr(v, "item"):  # numpy scalar
        return render_value(v.item(), as_float)
    return v


def _encode(obj: Any, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, float):
        if math.isnan(obj) or math.isinf(obj):
            return "null"
        text = format(obj, ".17g")
        return text if any(ch in text for ch in ".eE") else text + ".0"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(k)}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        items = [f"{pad}{_encode(v, indent, level + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    return json.dumps(obj)


def dumps(report: dict, indent: int = 2) -> str:
    return _encode(report, indent, 0) + "\n"


def parse_number(v: Any):
    """Inverse of ``render_value`` for scalars: "p/q" strings become Fractions."""
    if isinstance(v, str):
        try:
            return Fraction(v)
        except (ValueError, ZeroDivisionError) as exc:
            raise InputError(f"not a number: {v!r}") from exc
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return float(v)
    raise InputError(f"not a number: {v!r}")


def read_pi_file(stream: TextIO) -> PiVector:
    """A JSON object mapping each of the 13 pi names to a value.

    A report containing a ``"pi"`` section is accepted too.
    """
    try:
        doc = json.load(stream)
    except json.JSONDecodeError as exc:
        raise InputError(f"line {exc.lineno}: invalid JSON ({exc.msg})") from exc
    if isinstance(doc, dict) and "pi" in doc and isinstance(doc["pi"], dict):
        doc = doc["pi"]
    if not isinstance(doc, dict):
        raise InputError("pi file must hold a JSON object")
    missing = [k for k in PI_NAMES if k not in doc]
    if missing:
        raise InputError(f"pi file is missing {missing}")
    return PiVector.from_mapping({k: parse_number(doc[k]) for k in PI_NAMES})


def read_moments_report(stream: TextIO) -> dict:
    """Moments section of a report written by the ``moments`` command."""
    try:
        doc = json.load(stream)
    except json.JSONDecodeError as exc:
        raise InputError(f"line {exc.lineno}: invalid JSON ({exc.msg})") from exc
    if not isinstance(doc, dict) or doc.get("schema") != SCHEMA or "moments" not in doc:
        raise InputError("not a schema-1 moments report")
    return doc


def read_trial_csv(stream: TextIO) -> TwoStageData:
    """Parse ``group,stage,value`` rows into a two-stage dataset."""
    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        raise InputError("line 1: empty file, expected header group,stage,value")
    if [h.strip().lower() for h in header] != ["group", "stage", "value"]:
        raise InputError(f"line 1: expected header group,stage,value, got {','.join(header)}")
    cells = {("x", 1): [], ("y", 1): [], ("x", 2): [], ("y", 2): []}
    for row in reader:
        line = reader.line_num
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 3:
            raise InputError(f"line {line}: expected 3 fields, got {len(row)}")
        group, stage, value = (c.strip() for c in row)
        group = group.lower()
        if group not in ("x", "y"):
            raise InputError(f"line {line}: group must be x or y, got {group!r}")
        if stage not in ("1", "2"):
            raise InputError(f"line {line}: stage must be 1 or 2, got {stage!r}")
        try:
            number = float(value)
        except ValueError:
            raise InputError(f"line {line}: value is not a decimal number: {value!r}")
        if not math.isfinite(number):
            raise InputError(f"line {line}: value must be finite")
        cells[(group, int(stage))].append(number)
    if not cells[("x", 1)] or not cells[("y", 1)]:
        raise InputError("need at least one stage-1 observation in each group")
    return TwoStageData(cells[("x", 1)], cells[("y", 1)], cells[("x", 2)], cells[("y", 2)])


def read_trial_text(text: str) -> TwoStageData:
    return read_trial_csv(io.StringIO(text))
