"""Streaming log-odds aggregation in two variants.

The fast variant processes labels in arrival order: each label adds
``x * log(p_bar / (1 - p_bar))`` to its task's log-odds, where ``p_bar``
is the worker's posterior-mean accuracy

    p_bar = (sum over past labels of expit(x_h * z_h) + alpha) / (n + alpha + beta)

scored against the current log-odds.  The sorted variant keeps one view
of the log-odds per task and never applies a task's own labels inside
its view while streaming; those deferred labels are processed in a final
pass, by which point the worker estimates have matured.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import (
    ConfigError,
    DuplicateLabelError,
    LabelFormatError,
    LabelMatrix,
    LabelRecord,
    Prediction,
    Prior,
    expit,
    prediction_from_log_odds,
    prior_log_odds,
)


@dataclass(frozen=True)
class WorkerEstimate:
    """Posterior-mean accuracy p_bar and the number of history labels behind it."""

    p_bar: float
    support: int


def _weight(p_bar):
    """Per-label log-odds weight log(p_bar / (1 - p_bar))."""
    return np.log(p_bar) - np.log1p(-p_bar)


class FastSbic:
    """Single-pass streaming aggregator; O(L) work per label."""

    def __init__(self, prior: Prior, num_tasks: int):
        if num_tasks < 1:
            raise ConfigError(f"need at least one task, got {num_tasks}")
        self.prior = prior
        self.num_tasks = num_tasks
        self.z = np.full(num_tasks, prior_log_odds(prior), dtype=np.float64)
        self._hist_tasks: dict[int, list[int]] = {}
        self._hist_labels: dict[int, list[int]] = {}
        self._seen: set[tuple[int, int]] = set()

    def worker_estimate(self, worker: int, exclude_task: int | None = None) -> WorkerEstimate:
        """Accuracy estimate from the worker's history scored against current z.

        The history is taken before any pending label is appended;
        ``exclude_task`` additionally drops the label on that task.
        """
        tasks = self._hist_tasks.get(worker)
        alpha, beta = self.prior.alpha, self.prior.beta
        if not tasks:
            return WorkerEstimate(p_bar=alpha / (alpha + beta), support=0)
        t = np.asarray(tasks, dtype=np.intp)
        x = np.asarray(self._hist_labels[worker], dtype=np.float64)
        if exclude_task is not None:
            keep = t != exclude_task
            t, x = t[keep], x[keep]
        total = float(np.sum(expit(x * self.z[t])))
        n = len(t)
        return WorkerEstimate(p_bar=(total + alpha) / (n + alpha + beta), support=n)

    def update(self, task: int, worker: int, label: int) -> None:
        if label not in (1, -1):
            raise LabelFormatError(f"label must be +1 or -1, got {label!r}")
        if not 0 <= task < self.num_tasks:
            raise ConfigError(f"task {task} out of range")
        if (task, worker) in self._seen:
            raise DuplicateLabelError(f"duplicate label for (task={task}, worker={worker})")
        est = self.worker_estimate(worker)
        self.z[task] += label * _weight(est.p_bar)
        self._seen.add((task, worker))
        self._hist_tasks.setdefault(worker, []).append(task)
        self._hist_labels.setdefault(worker, []).append(label)

    def predict(self, tie_seed) -> Prediction:
        return prediction_from_log_odds(self.z, tie_seed)

    def uncertainty(self) -> np.ndarray:
        """Per-task max-posterior confidence expit(|z_i|); sampling targets its argmin."""
        return expit(np.abs(self.z))


def fast_offline(matrix: LabelMatrix, prior: Prior, tie_seed) -> Prediction:
    """Run the fast variant over a stored stream in record order."""
    state = FastSbic(prior, matrix.num_tasks)
    for r in matrix.records:
        state.update(r.task, r.worker, r.label)
    return state.predict(tie_seed)


class _Grow:
    """Append-only typed array with capacity doubling."""

    __slots__ = ("_data", "n")

    def __init__(self, dtype, cap: int = 16):
        self._data = np.zeros(cap, dtype=dtype)
        self.n = 0

    def _reserve(self, need: int) -> None:
        if need > len(self._data):
            newdata = np.zeros(max(need, 2 * len(self._data)), dtype=self._data.dtype)
            newdata[: self.n] = self._data[: self.n]
            self._data = newdata

    def append(self, value) -> int:
        self._reserve(self.n + 1)
        self._data[self.n] = value
        self.n += 1
        return self.n - 1

    def extend(self, values) -> None:
        m = len(values)
        self._reserve(self.n + m)
        self._data[self.n : self.n + m] = values
        self.n += m

    def ensure(self, size: int) -> None:
        """Grow (zero-filled) so that indices < size are addressable."""
        self._reserve(size)
        self.n = max(self.n, size)

    @property
    def view(self) -> np.ndarray:
        return self._data[: self.n]


class _PairBag:
    """Directed same-worker record pairs grouped by the source record's task.

    Entry (dst, src, term) caches term = expit(x_src * views[task(dst), task(src)]),
    one summand of dst's worker-estimate numerator.  When the column of
    task(src) changes, every entry in that task's bag is refreshed.
    """

    __slots__ = ("dst", "src", "term")

    def __init__(self):
        self.dst = _Grow(np.intp, 8)
        self.src = _Grow(np.intp, 8)
        self.term = _Grow(np.float64, 8)

    def append(self, dst: int, src: int, term: float) -> None:
        self.dst.append(dst)
        self.src.append(src)
        self.term.append(term)

    def extend(self, dst, src, term) -> None:
        self.dst.extend(dst)
        self.src.extend(src)
        self.term.extend(term)


class _OnlineCache:
    """Incrementally maintained final-pass log-odds for the sorted variant.

    Holds, per logged record, the current worker-estimate numerator (sum
    of expit terms over the worker's other labels, scored in the record's
    own view) and the resulting per-label weight, plus the aggregated
    log-odds vector.  Values track exactly what a from-scratch final pass
    would produce, up to float re-association.
    """

    def __init__(self, num_tasks: int, z0: float):
        self.z = np.full(num_tasks, z0, dtype=np.float64)
        self.rec_task = _Grow(np.intp)
        self.rec_worker = _Grow(np.intp)
        self.rec_label = _Grow(np.float64)
        self.rec_sum = _Grow(np.float64)
        self.rec_w = _Grow(np.float64)
        self.worker_recs: dict[int, list[int]] = {}
        self.worker_len = _Grow(np.float64)
        self.pairs = [_PairBag() for _ in range(num_tasks)]


class SortedSbic:
    """Deferred-label streaming aggregator with one log-odds view per task.

    ``include_current``: whether the just-arrived label's own agreement
    term enters the worker estimate used for the other views (the default
    follows the update rule literally; the alternative reading is kept
    for comparison runs).

    ``track_online``: additionally maintain the final-pass log-odds
    incrementally so :meth:`online_log_odds` is O(R * L) per update
    instead of O(T * L) -- required to drive uncertainty sampling at a
    sane cost.  :meth:`finalize` always recomputes from scratch.
    """

    def __init__(
        self,
        prior: Prior,
        num_tasks: int,
        include_current: bool = True,
        track_online: bool = False,
    ):
        if num_tasks < 1:
            raise ConfigError(f"need at least one task, got {num_tasks}")
        self.prior = prior
        self.num_tasks = num_tasks
        self.include_current = include_current
        z0 = prior_log_odds(prior)
        self.views = np.full((num_tasks, num_tasks), z0, dtype=np.float64)
        self.log: list[LabelRecord] = []
        self._hist_tasks: dict[int, list[int]] = {}
        self._hist_labels: dict[int, list[int]] = {}
        self._seen: set[tuple[int, int]] = set()
        self._cache = _OnlineCache(num_tasks, z0) if track_online else None

    def update(self, task: int, worker: int, label: int) -> None:
        if label not in (1, -1):
            raise LabelFormatError(f"label must be +1 or -1, got {label!r}")
        if not 0 <= task < self.num_tasks:
            raise ConfigError(f"task {task} out of range")
        if (task, worker) in self._seen:
            raise DuplicateLabelError(f"duplicate label for (task={task}, worker={worker})")

        alpha, beta = self.prior.alpha, self.prior.beta
        ht = self._hist_tasks.setdefault(worker, [])
        hl = self._hist_labels.setdefault(worker, [])
        if self.include_current:
            cols = np.asarray(ht + [task], dtype=np.intp)
            xs = np.asarray(hl + [label], dtype=np.float64)
        else:
            cols = np.asarray(ht, dtype=np.intp)
            xs = np.asarray(hl, dtype=np.float64)

        m = self.num_tasks
        if len(cols):
            terms = expit(self.views[:, cols] * xs)  # (m, n); row k scores in view k
            excl = terms.sum(axis=1)
            cnt = np.full(m, float(len(cols)))
            # a history label on task k itself is excluded from view k's estimate
            excl[cols] -= terms[cols, np.arange(len(cols))]
            cnt[cols] -= 1.0
        else:
            excl = np.zeros(m)
            cnt = np.zeros(m)
        p_bar = (excl + alpha) / (cnt + alpha + beta)
        w = _weight(p_bar)

        own = self.views[task, task]
        self.views[:, task] += label * w
        self.views[task, task] = own  # a task's own view defers its labels

        ht.append(task)
        hl.append(label)
        self.log.append(LabelRecord(task, worker, label, seq=len(self.log) + 1))
        self._seen.add((task, worker))
        if self._cache is not None:
            self._refresh_cache(task, worker, label)

    def _refresh_cache(self, task: int, worker: int, label: int) -> None:
        cache = self._cache
        alpha, beta = self.prior.alpha, self.prior.beta
        affected: list[np.ndarray] = []

        # Column `task` of the views moved: refresh every cached term whose
        # source record sits on it (records of workers that labelled `task`).
        bag = cache.pairs[task]
        dst = bag.dst.view
        if len(dst):
            src = bag.src.view
            new_terms = expit(cache.rec_label.view[src] * self.views[cache.rec_task.view[dst], task])
            cache.rec_sum.view[dst] += new_terms - bag.term.view
            bag.term.view[:] = new_terms
            affected.append(dst.copy())

        # The new record exchanges agreement terms with its worker's older ones.
        r_new = cache.rec_task.append(task)
        cache.rec_worker.append(worker)
        cache.rec_label.append(float(label))
        cache.rec_sum.append(0.0)
        cache.rec_w.append(0.0)
        own = cache.worker_recs.setdefault(worker, [])
        if own:
            own_arr = np.asarray(own, dtype=np.intp)
            own_tasks = cache.rec_task.view[own_arr]
            own_labels = cache.rec_label.view[own_arr]
            to_old = expit(label * self.views[own_tasks, task])
            from_old = expit(own_labels * self.views[task, own_tasks])
            cache.rec_sum.view[own_arr] += to_old
            cache.rec_sum.view[r_new] = from_old.sum()
            bag.extend(own_arr, np.full(len(own_arr), r_new, dtype=np.intp), to_old)
            for pos, old_task in enumerate(own_tasks):
                cache.pairs[old_task].append(r_new, int(own_arr[pos]), float(from_old[pos]))
            affected.append(own_arr)
        own.append(r_new)
        cache.worker_len.ensure(worker + 1)
        cache.worker_len.view[worker] += 1.0
        affected.append(np.array([r_new], dtype=np.intp))

        aff = np.concatenate(affected)
        support = cache.worker_len.view[cache.rec_worker.view[aff]] - 1.0
        p_bar = (cache.rec_sum.view[aff] + alpha) / (support + alpha + beta)
        w_new = _weight(p_bar)
        tasks_aff = cache.rec_task.view[aff]
        delta = cache.rec_label.view[aff] * (w_new - cache.rec_w.view[aff])
        np.add.at(cache.z, tasks_aff, delta)
        cache.rec_w.view[aff] = w_new

    def finalize_log_odds(self) -> np.ndarray:
        """Final-pass log-odds recomputed from scratch off the views and log.

        Each logged label (i, j, x) contributes x * log(p/(1-p)) to z_i,
        with p the worker-j estimate scored in view i over the worker's
        full history minus its label on i itself.
        """
        z = np.full(self.num_tasks, prior_log_odds(self.prior), dtype=np.float64)
        alpha, beta = self.prior.alpha, self.prior.beta
        for worker, ht in self._hist_tasks.items():
            t = np.asarray(ht, dtype=np.intp)
            x = np.asarray(self._hist_labels[worker], dtype=np.float64)
            scored = expit(self.views[np.ix_(t, t)] * x[None, :])  # row r: view of task t_r
            sums = scored.sum(axis=1) - np.diagonal(scored)
            p_bar = (sums + alpha) / (len(t) - 1 + alpha + beta)
            np.add.at(z, t, x * _weight(p_bar))
        return z

    def finalize(self, tie_seed) -> Prediction:
        """Process all deferred labels; re-runnable at any time, never mutates state."""
        return prediction_from_log_odds(self.finalize_log_odds(), tie_seed)

    def online_log_odds(self) -> np.ndarray:
        """Current final-pass log-odds; cached when ``track_online`` is set."""
        if self._cache is not None:
            return self._cache.z.copy()
        return self.finalize_log_odds()

    def uncertainty(self) -> np.ndarray:
        return expit(np.abs(self.online_log_odds()))


def sorted_offline(
    matrix: LabelMatrix,
    prior: Prior,
    tie_seed,
    include_current: bool = True,
) -> Prediction:
    """Stream a stored dataset through the sorted variant, then finalize once."""
    state = SortedSbic(prior, matrix.num_tasks, include_current=include_current)
    for r in matrix.records:
        state.update(r.task, r.worker, r.label)
    return state.finalize(tie_seed)
