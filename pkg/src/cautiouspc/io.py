"""CSV data, tier files and tabular outputs."""

from __future__ import annotations

import csv
import math
from typing import Iterable, Sequence

import numpy as np

from .graph import SepsetMap

MISSING = {"", "NA", "na", "NaN", "nan"}


def read_data_csv(path) -> tuple[list[str], np.ndarray]:
    """Numeric CSV with a header row; empty fields and ``NA`` become ``nan``."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty file")
    names = [h.strip() for h in rows[0]]
    if len(set(names)) != len(names):
        raise ValueError(f"{path}: duplicate column names")
    out = np.empty((len(rows) - 1, len(names)))
    for r, row in enumerate(rows[1:]):
        if len(row) != len(names):
            raise ValueError(f"{path}: row {r + 2} has {len(row)} fields, expected {len(names)}")
        for c, cell in enumerate(row):
            cell = cell.strip()
            if cell in MISSING:
                out[r, c] = math.nan
                continue
            try:
                out[r, c] = float(cell)
            except ValueError:
                raise ValueError(f"{path}: non-numeric value {cell!r} in column {names[c]!r}") from None
    return names, out


def write_data_csv(path, names: Sequence[str], data: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names)
        for row in np.asarray(data, dtype=float):
            w.writerow(["NA" if math.isnan(v) else repr(float(v)) for v in row])


def resolve_columns(spec: Iterable[str], names: Sequence[str]) -> list[int]:
    """Map column names (or integer positions) to indices."""
    index = {n: k for k, n in enumerate(names)}
    out = []
    for s in spec:
        s = s.strip()
        if not s:
            continue
        if s in index:
            out.append(index[s])
        elif s.isdigit() and int(s) < len(names):
            out.append(int(s))
        else:
            raise ValueError(f"unknown column {s!r}")
    return out


def read_tiers(path, names: Sequence[str]) -> list[list[int]]:
    """One tier per non-comment line, earliest first; entries comma separated."""
    tiers = []
    with open(path) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if line:
                tiers.append(resolve_columns(line.split(","), names))
    return tiers


def write_rows(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def write_sepsets(path, seps: SepsetMap) -> None:
    with open(path, "w", newline="") as fh:
        csv.writer(fh).writerows(seps.to_csv_rows())
