"""The two household datasets used in the worked examples, plus CSV I/O."""

from __future__ import annotations

import csv
import io
import math

from .errors import DatasetError
from .model import Dataset

# Table 1: household size (x) and total disposable income in k$ (y); y11 is
# left free and defaults to 85, the start of the threshold sweep.
TABLE1_X = (1.0, 1.0, 2.0, 3.0, 3.0, 3.0, 3.0, 3.0, 3.0, 3.0,
            3.0, 4.0, 4.0, 4.0, 4.0, 5.0, 5.0, 5.0, 6.0, 6.0)
TABLE1_Y = (20.8, 9.6, 38.6, 74.1, 108.8, 98.7, 44.8, 77.2, 93.2, 107.2,
            None, 93.6, 113.7, 123.5, 93.5, 148.1, 147.1, 154.0, 149.5, 173.5)
TABLE1_FREE_INDEX = 10  # zero-based position of y11

# Table 2: weekly income (x) and weekly food expenditure (y), in dollars.
TABLE2_X = (102.9, 144.9, 155.8, 176.5, 177.4, 182.2, 197.9, 199.2, 211.3, 215.9,
            216.0, 216.7, 220.3, 222.8, 229.0, 250.0, 250.2, 275.4, 342.4, 696.4)
TABLE2_Y = (31.7, 68.4, 54.4, 53.5, 78.4, 66.4, 64.1, 44.6, 99.0, 53.3,
            67.3, 68.6, 63.0, 100.6, 82.2, 113.4, 6.1, 76.6, 92.7, 41.1)
TABLE2_OUTLIERS = (16, 19)  # zero-based rows of (250.2, 6.1) and (696.4, 41.1)

DATASET_NAMES = ("table1", "table2")


def table1(y11: float = 85.0) -> Dataset:
    y = list(TABLE1_Y)
    y[TABLE1_FREE_INDEX] = float(y11)
    return Dataset(TABLE1_X, y)


def table2() -> Dataset:
    return Dataset(TABLE2_X, TABLE2_Y)


def load_named(name: str, y11: float = 85.0) -> Dataset:
    if name == "table1":
        return table1(y11)
    if name == "table2":
        return table2()
    raise DatasetError(f"unknown dataset {name!r}; expected one of {DATASET_NAMES}")


class CsvParseError(DatasetError):
    def __init__(self, message, line=None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


def parse_csv(text: str) -> Dataset:
    """Parse ``x,y`` CSV text (header required). Errors carry 1-based line numbers."""
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or all(not r for r in rows):
        raise CsvParseError("empty input")
    header = [h.strip().lower() for h in rows[0]]
    if header != ["x", "y"]:
        raise CsvParseError(f"expected header 'x,y', got {','.join(rows[0])!r}", line=1)
    xs, ys = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 2:
            raise CsvParseError(f"expected 2 fields, got {len(row)}", line=lineno)
        try:
            x, y = float(row[0]), float(row[1])
        except ValueError:
            raise CsvParseError(f"non-numeric field in {row!r}", line=lineno) from None
        if not (math.isfinite(x) and math.isfinite(y)):
            raise CsvParseError("non-finite value", line=lineno)
        if x == 0:
            raise CsvParseError(f"x = 0 is not allowed (row {len(xs) + 1})", line=lineno)
        xs.append(x)
        ys.append(y)
    if not xs:
        raise CsvParseError("no data rows")
    return Dataset(xs, ys)


def read_csv(path) -> Dataset:
    with open(path, encoding="utf-8") as fh:
        return parse_csv(fh.read())


def to_csv(data: Dataset) -> str:
    # repr is the shortest round-tripping form, so 20.8 prints as 20.8
    lines = ["x,y"]
    lines += [f"{float(x)!r},{float(y)!r}" for x, y in zip(data.x, data.y)]
    return "\n".join(lines) + "\n"
