"""Core domain types for binary crowd labelling.

Tasks and workers are dense 0-based indices; labels are +1/-1.  Missing
(task, worker) pairs are simply absent from the sparse store -- there is
no 0 sentinel anywhere.  Probabilities are carried as log-odds wherever
possible, which keeps the streaming updates additive and underflow-free.
"""

from __future__ import annotations

from dataclasses import dataclass
import math
from typing import Iterable, Sequence

import numpy as np
from scipy.special import expit as _sp_expit, logit as _sp_logit


class ConfigError(ValueError):
    """Invalid configuration (non-positive prior, empty task set, ...)."""


class DuplicateLabelError(ValueError):
    """The same (task, worker) pair appeared twice in one stream."""


class LabelFormatError(ValueError):
    """A label outside {+1, -1}, or otherwise malformed label data."""


def expit(z):
    """Logistic function 1 / (1 + exp(-z)).

    Accepts scalars or arrays; saturates smoothly at extreme arguments
    (expit(40) == 1.0 in float64, no overflow).
    """
    return _sp_expit(z)


def logit(p):
    """Inverse of :func:`expit`: log(p / (1 - p))."""
    return _sp_logit(p)


@dataclass(frozen=True)
class Prior:
    """Beta(alpha, beta) prior on worker accuracy plus class prior q = P(y = +1)."""

    alpha: float
    beta: float
    q: float = 0.5

    def __post_init__(self):
        if not (self.alpha > 0.0 and self.beta > 0.0):
            raise ConfigError(
                f"prior requires alpha > 0 and beta > 0, got ({self.alpha}, {self.beta})"
            )
        if not (0.0 < self.q < 1.0):
            raise ConfigError(f"class prior q must lie in (0, 1), got {self.q}")

    @property
    def mean_accuracy(self) -> float:
        return self.alpha / (self.alpha + self.beta)


def prior_log_odds(prior: Prior) -> float:
    """log(q / (1 - q)), the log-odds every task starts from."""
    return math.log(prior.q / (1.0 - prior.q))


@dataclass(frozen=True)
class LabelRecord:
    """One observed label: worker ``worker`` put ``label`` on ``task`` at time ``seq``."""

    task: int
    worker: int
    label: int
    seq: int = 0  # 1-based arrival index; 0 means "assign on ingest"

    def __post_init__(self):
        if self.label not in (1, -1):
            raise LabelFormatError(f"label must be +1 or -1, got {self.label!r}")
        if self.task < 0 or self.worker < 0:
            raise LabelFormatError(
                f"task/worker indices must be non-negative, got ({self.task}, {self.worker})"
            )


class LabelMatrix:
    """Sparse task x worker store of +-1 labels with both index views.

    ``by_task[i]`` lists (worker, label) pairs on task i (the set N_i);
    ``by_worker[j]`` lists (task, label) pairs by worker j (the set M_j).
    Record order is preserved and flat numpy views are kept for the
    vectorised aggregators.  Instances are immutable after construction.
    """

    __slots__ = (
        "records",
        "num_tasks",
        "num_workers",
        "by_task",
        "by_worker",
        "task_ids",
        "worker_ids",
        "labels",
        "task_names",
        "worker_names",
    )

    def __init__(
        self,
        records: Sequence[LabelRecord],
        num_tasks: int | None = None,
        num_workers: int | None = None,
        task_names: Sequence[str] | None = None,
        worker_names: Sequence[str] | None = None,
    ):
        records = tuple(
            r if r.seq else LabelRecord(r.task, r.worker, r.label, seq=k + 1)
            for k, r in enumerate(records)
        )
        max_task = max((r.task for r in records), default=-1)
        max_worker = max((r.worker for r in records), default=-1)
        self.num_tasks = max_task + 1 if num_tasks is None else int(num_tasks)
        self.num_workers = max_worker + 1 if num_workers is None else int(num_workers)
        if max_task >= self.num_tasks or max_worker >= self.num_workers:
            raise ConfigError(
                f"record indices exceed declared shape "
                f"({self.num_tasks} tasks, {self.num_workers} workers)"
            )

        by_task: list[list[tuple[int, int]]] = [[] for _ in range(self.num_tasks)]
        by_worker: list[list[tuple[int, int]]] = [[] for _ in range(self.num_workers)]
        seen: set[tuple[int, int]] = set()
        for r in records:
            key = (r.task, r.worker)
            if key in seen:
                raise DuplicateLabelError(
                    f"duplicate label for (task={r.task}, worker={r.worker})"
                )
            seen.add(key)
            by_task[r.task].append((r.worker, r.label))
            by_worker[r.worker].append((r.task, r.label))

        self.records = records
        self.by_task = tuple(tuple(v) for v in by_task)
        self.by_worker = tuple(tuple(v) for v in by_worker)
        self.task_ids = np.fromiter((r.task for r in records), dtype=np.intp, count=len(records))
        self.worker_ids = np.fromiter(
            (r.worker for r in records), dtype=np.intp, count=len(records)
        )
        self.labels = np.fromiter((r.label for r in records), dtype=np.int8, count=len(records))
        self.task_names = tuple(task_names) if task_names is not None else None
        self.worker_names = tuple(worker_names) if worker_names is not None else None

    def __len__(self) -> int:
        return len(self.records)

    def permuted(self, order: Sequence[int]) -> "LabelMatrix":
        """Same labels in a new arrival order (seq reassigned)."""
        reordered = [self.records[k] for k in order]
        stripped = [LabelRecord(r.task, r.worker, r.label) for r in reordered]
        return LabelMatrix(
            stripped,
            num_tasks=self.num_tasks,
            num_workers=self.num_workers,
            task_names=self.task_names,
            worker_names=self.worker_names,
        )


def matrix_ingest(
    records: Iterable[LabelRecord | tuple],
    num_tasks: int | None = None,
    num_workers: int | None = None,
) -> LabelMatrix:
    """Build a :class:`LabelMatrix` from records or bare (task, worker, label) tuples."""
    normalised = [
        r if isinstance(r, LabelRecord) else LabelRecord(r[0], r[1], r[2]) for r in records
    ]
    return LabelMatrix(normalised, num_tasks=num_tasks, num_workers=num_workers)


@dataclass(frozen=True)
class GroundTruth:
    """Per-task true classes in {+1, -1}."""

    classes: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "classes", np.asarray(self.classes, dtype=np.int8))
        if self.classes.ndim != 1 or not np.all(np.abs(self.classes) == 1):
            raise LabelFormatError("ground-truth classes must be a 1-d array of +-1")


@dataclass(frozen=True)
class Prediction:
    """Per-task predicted classes, optionally with the log-odds behind them."""

    classes: np.ndarray
    log_odds: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "classes", np.asarray(self.classes, dtype=np.int8))
        if self.log_odds is not None:
            object.__setattr__(
                self, "log_odds", np.asarray(self.log_odds, dtype=np.float64)
            )


def prediction_from_log_odds(z: np.ndarray, tie_seed) -> Prediction:
    """sign(z) with exact zeros resolved by a seeded fair coin flip."""
    z = np.asarray(z, dtype=np.float64)
    classes = np.sign(z).astype(np.int8)
    ties = classes == 0
    if np.any(ties):
        rng = np.random.default_rng(tie_seed)
        classes[ties] = rng.choice(np.array([-1, 1], dtype=np.int8), size=int(ties.sum()))
    return Prediction(classes=classes, log_odds=z.copy())


def error_count(prediction: Prediction, truth: GroundTruth) -> int:
    """Number of misclassified tasks."""
    if prediction.classes.shape != truth.classes.shape:
        raise ConfigError("prediction and ground truth cover different task sets")
    return int(np.count_nonzero(prediction.classes != truth.classes))
