"""
JSON and CSV emitters for command output

Floats are written with 17 significant digits and keys are sorted so that
two runs with the same inputs produce identical bytes.
"""
import csv
import math
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, Sequence, Union
import numpy as np
import orjson
from pydantic import BaseModel

JSON_OPTIONS = orjson.OPT_SORT_KEYS | orjson.OPT_INDENT_2


def _prepare(value: Any) -> Any:
    if isinstance(value, BaseModel):
        return _prepare(value.model_dump(mode="python"))
    if isinstance(value, dict):
        return {str(k): _prepare(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_prepare(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_prepare(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if not math.isfinite(value):
            return None
        return orjson.Fragment(format(value, ".17g"))
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, Enum):
        return value.value
    return value


def dumps(value: Any) -> bytes:
    """Serialize to sorted, indented JSON bytes with a trailing newline"""
    return orjson.dumps(_prepare(value), option=JSON_OPTIONS) + b"\n"


def format_float(value: float) -> str:
    """17 significant digits, empty for non-finite values"""
    return format(float(value), ".17g") if math.isfinite(value) else ""


def write_csv(path: Union[str, Path], header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    """Write rows with floats formatted like the JSON output"""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_float(v) if isinstance(v, float) else v for v in row])
