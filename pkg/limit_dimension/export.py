"""
Deterministic output writers.

Floats are written with repr so re-reading gives the same doubles, JSON keys
are sorted, and nothing time-dependent goes into a file. Re-running a config
reproduces its outputs byte for byte.
"""
import csv
import hashlib
import io
import json
import math
import platform
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Iterable, Sequence

import numpy as np
import scipy

from . import __version__

PACKAGE_NAME = "limit_dimension"


def format_cell(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, Enum):
        return str(value.value)
    return str(value)


def csv_text(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_cell(v) for v in row])
    return buffer.getvalue()


def to_jsonable(value: Any) -> Any:
    """Plain JSON types; non-finite floats become the strings "inf", "-inf", "nan"."""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isfinite(value):
            return value
        return "nan" if math.isnan(value) else ("inf" if value > 0 else "-inf")
    if isinstance(value, complex):
        return [to_jsonable(value.real), to_jsonable(value.imag)]
    if value is None or isinstance(value, str):
        return value
    return str(value)


def json_text(record: Dict[str, Any]) -> str:
    return json.dumps(to_jsonable(record), sort_keys=True, indent=2, allow_nan=False) + "\n"


def config_digest(raw: Dict[str, Any]) -> str:
    """sha256 of the canonical JSON form of a config document"""
    canonical = json.dumps(to_jsonable(raw), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def content_digest(*texts: str) -> str:
    digest = hashlib.sha256()
    for text in texts:
        digest.update(text.encode("utf-8"))
    return digest.hexdigest()


def provenance() -> Dict[str, str]:
    return {
        "package": PACKAGE_NAME,
        "version": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "python": platform.python_version(),
    }


def write_text(path: Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(text)
    return path


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    return write_text(path, csv_text(header, rows))


def write_json(path: Path, record: Dict[str, Any]) -> Path:
    return write_text(path, json_text(record))
