"""Task-assignment policies: round-robin and uncertainty sampling.

Both pick a task for the arriving worker among tasks that worker has not
labelled yet; ties are broken uniformly at random from the caller's
seeded stream, since a fresh system is all-tied and deterministic
tie-breaking would bias early sampling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import ConfigError


class ExhaustedWorkerError(RuntimeError):
    """The arriving worker has already labelled every task; skip them."""


@dataclass
class AssignmentContext:
    """What a policy sees at one time step.

    ``labeled_by_worker`` may be a set of task ids or a boolean mask;
    ``uncertainty`` is the active aggregator's per-task max-posterior
    confidence score (present only when the aggregator supplies one).
    """

    worker: int
    labeled_by_worker: object
    label_counts: np.ndarray
    uncertainty: np.ndarray | None = None


def _labelled_mask(ctx: AssignmentContext, num_tasks: int) -> np.ndarray:
    labelled = ctx.labeled_by_worker
    if isinstance(labelled, (set, frozenset)):
        mask = np.zeros(num_tasks, dtype=bool)
        if labelled:
            mask[np.fromiter(labelled, dtype=np.intp, count=len(labelled))] = True
        return mask
    return np.asarray(labelled, dtype=bool)


def _seeded_argmin(scores: np.ndarray, mask: np.ndarray, rng, worker: int) -> int:
    eligible = np.flatnonzero(~mask)
    if eligible.size == 0:
        raise ExhaustedWorkerError(f"worker {worker} has labelled every task")
    sub = scores[eligible]
    pool = eligible[sub == sub.min()]
    if pool.size == 1:
        return int(pool[0])
    rng = np.random.default_rng(rng)
    return int(pool[rng.integers(pool.size)])


def uni_next(ctx: AssignmentContext, rng) -> int:
    """Least-labelled eligible task (round-robin balancing)."""
    counts = np.asarray(ctx.label_counts)
    mask = _labelled_mask(ctx, counts.shape[0])
    return _seeded_argmin(counts, mask, rng, ctx.worker)


def us_next(ctx: AssignmentContext, rng) -> int:
    """Eligible task whose current max-posterior confidence is lowest."""
    if ctx.uncertainty is None:
        raise ConfigError("uncertainty sampling needs a per-task confidence score")
    scores = np.asarray(ctx.uncertainty)
    mask = _labelled_mask(ctx, scores.shape[0])
    return _seeded_argmin(scores, mask, rng, ctx.worker)
