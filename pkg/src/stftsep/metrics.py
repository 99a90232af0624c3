"""Metrics CSV schemas and writers.

Two stable schemas, header row first, fields never reordered:

    training:  epoch,train_loss,train_accuracy,test_accuracy,wall_clock_seconds,batch_size
    benchmark: path,n,shape,macs,mean_seconds,stddev_seconds,status

Floats are written with repr (shortest round-trip form), so identical
runs produce identical files apart from the wall-clock column.
"""

from __future__ import annotations

import csv
import io

TRAIN_FIELDS = ("epoch", "train_loss", "train_accuracy", "test_accuracy",
                "wall_clock_seconds", "batch_size")
BENCH_FIELDS = ("path", "n", "shape", "macs", "mean_seconds",
                "stddev_seconds", "status")


def format_shape(shape) -> str:
    return "x".join(str(int(d)) for d in shape)


def parse_shape(text: str):
    dims = tuple(int(d) for d in text.lower().split("x"))
    if len(dims) != 4 or min(dims) < 1:
        raise ValueError(f"shape must be BxCxHxW with positive dims, got {text!r}")
    return dims


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def rows_to_csv(fields, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(fields)
    for row in rows:
        writer.writerow([_cell(row.get(f)) for f in fields])
    return buf.getvalue()


def write_rows(path, fields, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(rows_to_csv(fields, rows))


def read_rows(path):
    """CSV back to a list of field -> string dicts (values stay text)."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))
