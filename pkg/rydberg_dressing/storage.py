# storage.py
# Handles writing result tables (CSV) and optional gnuplot scripts

import csv
import logging
import math
import os
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from . import __version__
from .utils import format_float

logger = logging.getLogger(__name__)

GENERATED_BY = f"rydberg_dressing {__version__}"


def _cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        if math.isnan(value):
            return "nan"
        return format_float(value)
    return str(value)


def write_csv(path, columns: Sequence[str], rows: Iterable[Sequence], meta: Optional[Mapping] = None) -> Path:
    """Write a table atomically: LF endings, a `# generated-by` header and fixed float format."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    try:
        with open(tmp, "w", newline="", encoding="utf-8") as file:
            file.write(f"# generated-by: {GENERATED_BY}\n")
            for key, value in (meta or {}).items():
                file.write(f"# {key}: {_cell(value)}\n")
            writer = csv.writer(file, lineterminator="\n")
            writer.writerow(columns)
            for row in rows:
                writer.writerow([_cell(v) for v in row])
        os.replace(tmp, path)
    finally:
        if tmp.exists():
            tmp.unlink()
    logger.debug("Wrote %s", path)
    return path


def write_columns(path, table: Mapping[str, Sequence], meta: Optional[Mapping] = None) -> Path:
    """Write equally long named columns."""
    names = list(table)
    length = {len(table[name]) for name in names}
    if len(length) > 1:
        raise ValueError(f"columns have different lengths: {sorted(length)}")
    rows = zip(*(table[name] for name in names))
    return write_csv(path, names, rows, meta)


def write_gnuplot(csv_path, x: str, ys: Sequence[str], columns: Sequence[str], logx: bool = False) -> Path:
    """Plot script next to a CSV; plotting itself is left to gnuplot."""
    csv_path = Path(csv_path)
    script = csv_path.with_suffix(".gp")
    index = {name: i + 1 for i, name in enumerate(columns)}
    lines = [
        "set datafile separator ','",
        "set key autotitle columnhead",
        f"set xlabel '{x}'",
    ]
    if logx:
        lines.append("set logscale x")
    plots = [f"'{csv_path.name}' using {index[x]}:{index[y]} with lines title '{y}'" for y in ys]
    lines.append("plot " + ", \\\n     ".join(plots))
    script.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return script
