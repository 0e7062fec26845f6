"""
Shared output helpers for the simulator tools.
Every file the command line produces goes through here so that the CSV
and JSON formatting rules live in one place.
"""
import json
import logging
import math
from pathlib import Path

import pandas as pd

log = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"


def safe_name(value) -> str:
    """
    Turn an arbitrary label into something usable inside a file name.

    Args:
        value: Label (number or string)

    Returns:
        Sanitized string with only alphanumerics, '-', '_' and '.'
    """
    text = format(value, ".6g") if isinstance(value, float) else str(value)
    cleaned = "".join(c for c in text if c.isalnum() or c in (" ", "-", "_", ".")).strip()
    return cleaned.replace(" ", "_")


def write_table(rows, path: Path, columns: list) -> Path:
    """
    Write a table as CSV: comma separated, header row, LF line endings,
    floats with 17 significant digits.

    Args:
        rows: DataFrame, list of dicts or dict of columns
        path: Destination file
        columns: Column names in their fixed output order
    """
    frame = rows if isinstance(rows, pd.DataFrame) else pd.DataFrame(rows)
    frame = frame.reindex(columns=columns)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    log.info("Wrote %s (%d rows)", path, len(frame))
    return path


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if hasattr(value, "item") and not isinstance(value, (str, bytes)):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def write_json(payload: dict, path: Path) -> Path:
    """Write a JSON document with sorted keys; non-finite floats become null."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as file:
        json.dump(_jsonable(payload), file, indent=2, sort_keys=True)
        file.write("\n")
    log.info("Wrote %s", path)
    return path


def write_workbook(sheets: dict, path: Path) -> Path:
    """
    Write several tables into one Excel workbook, one sheet per entry.

    Args:
        sheets: {sheet name: DataFrame or list of dicts}
        path: Destination .xlsx file
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with pd.ExcelWriter(path, engine="openpyxl") as writer:
        for sheet_name, rows in sheets.items():
            frame = rows if isinstance(rows, pd.DataFrame) else pd.DataFrame(rows)
            if frame.empty:
                log.warning("No data for sheet '%s'", sheet_name)
                continue
            frame.to_excel(writer, sheet_name=sheet_name, index=False)
            log.info("Created '%s' sheet with %d rows", sheet_name, len(frame))
    return path
