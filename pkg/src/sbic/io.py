"""CSV ingestion and report writing.

Label files carry ``task,worker,label`` rows with labels 1 / -1; gold
files carry ``task,label``.  External identifiers are interned to dense
0-based indices in first-appearance order, with the name maps kept on
the matrix for writing reports back out.  All floats are written with
repr-stable precision so identical runs produce identical bytes.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .model import LabelFormatError, LabelMatrix, LabelRecord, Prediction

_FLOAT_FMT = ".10g"


def _fmt(value: float) -> str:
    return format(float(value), _FLOAT_FMT)


def _parse_label(text: str, where: str) -> int:
    text = text.strip()
    if text in ("1", "+1"):
        return 1
    if text == "-1":
        return -1
    raise LabelFormatError(f"{where}: label must be 1 or -1, got {text!r}")


def _check_header(row: list[str], expected: tuple[str, ...], where: str) -> None:
    got = tuple(c.strip().lower() for c in row)
    if got != expected:
        raise LabelFormatError(
            f"{where}: expected header {','.join(expected)!r}, got {','.join(row)!r}"
        )


def read_labels_csv(path) -> LabelMatrix:
    """Load a label stream, interning task/worker names to dense indices."""
    path = Path(path)
    task_index: dict[str, int] = {}
    worker_index: dict[str, int] = {}
    records: list[LabelRecord] = []
    with path.open(newline="", encoding="utf-8-sig") as handle:
        reader = csv.reader(handle)
        rows = iter(reader)
        header = next(rows, None)
        if header is None:  # entirely empty file: treat as an empty stream
            return LabelMatrix([], num_tasks=0, num_workers=0, task_names=(), worker_names=())
        _check_header(header, ("task", "worker", "label"), f"{path}:1")
        for lineno, row in enumerate(rows, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise LabelFormatError(f"{path}:{lineno}: expected 3 columns, got {len(row)}")
            task_name, worker_name, label_text = (c.strip() for c in row)
            task = task_index.setdefault(task_name, len(task_index))
            worker = worker_index.setdefault(worker_name, len(worker_index))
            label = _parse_label(label_text, f"{path}:{lineno}")
            records.append(LabelRecord(task=task, worker=worker, label=label))
    return LabelMatrix(
        records,
        num_tasks=len(task_index),
        num_workers=len(worker_index),
        task_names=tuple(task_index),
        worker_names=tuple(worker_index),
    )


def read_gold_csv(path) -> dict[str, int]:
    """Load ground-truth classes keyed by task name."""
    path = Path(path)
    gold: dict[str, int] = {}
    with path.open(newline="", encoding="utf-8-sig") as handle:
        reader = csv.reader(handle)
        rows = iter(reader)
        header = next(rows, None)
        if header is None:
            return gold
        _check_header(header, ("task", "label"), f"{path}:1")
        for lineno, row in enumerate(rows, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise LabelFormatError(f"{path}:{lineno}: expected 2 columns, got {len(row)}")
            name = row[0].strip()
            if name in gold:
                raise LabelFormatError(f"{path}:{lineno}: duplicate gold entry for {name!r}")
            gold[name] = _parse_label(row[1], f"{path}:{lineno}")
    return gold


def align_gold(
    matrix: LabelMatrix, gold: dict[str, int]
) -> tuple[np.ndarray, np.ndarray, list[str]]:
    """Match gold entries to matrix task indices.

    Returns (task indices, true classes, warnings); gold rows naming
    unknown tasks are excluded with a warning, and matrix tasks without
    gold simply do not appear.
    """
    names = matrix.task_names
    if names is None:
        names = tuple(str(k) for k in range(matrix.num_tasks))
    position = {name: k for k, name in enumerate(names)}
    indices: list[int] = []
    classes: list[int] = []
    notes: list[str] = []
    for name, label in gold.items():
        at = position.get(name)
        if at is None:
            notes.append(f"gold task {name!r} does not appear in the labels; excluded")
            continue
        indices.append(at)
        classes.append(label)
    return (
        np.asarray(indices, dtype=np.intp),
        np.asarray(classes, dtype=np.int8),
        notes,
    )


def write_predictions_csv(path, matrix: LabelMatrix, prediction: Prediction) -> None:
    """``task,label[,log_odds]`` rows, tasks written under their external names."""
    names = matrix.task_names
    if names is None:
        names = tuple(str(k) for k in range(matrix.num_tasks))
    with Path(path).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        if prediction.log_odds is not None:
            writer.writerow(["task", "label", "log_odds"])
            for name, cls, z in zip(names, prediction.classes, prediction.log_odds):
                writer.writerow([name, int(cls), _fmt(z)])
        else:
            writer.writerow(["task", "label"])
            for name, cls in zip(names, prediction.classes):
                writer.writerow([name, int(cls)])


def write_curve_csv(path, points) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["R", "error_mean", "ci_low", "ci_high", "runs"])
        for p in points:
            writer.writerow([p.R, _fmt(p.error_mean), _fmt(p.ci_low), _fmt(p.ci_high), p.runs])


def write_bound_csv(path, r_grid, values) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["R", "bound"])
        for r_value, bound in zip(r_grid, values):
            writer.writerow([int(r_value), _fmt(bound)])


def write_timing_csv(path, rows) -> None:
    """Rows of (R, algo, mean_ms, std_ms)."""
    with Path(path).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["R", "algo", "mean_ms", "std_ms"])
        for r_value, algo, mean_ms, std_ms in rows:
            writer.writerow([int(r_value), algo, _fmt(mean_ms), _fmt(std_ms)])
