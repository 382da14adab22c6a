"""A uniform online interface over every aggregator, plus offline runners.

The simulator and CLI address algorithms by name.  Online adapters expose
``observe`` / ``uncertainty`` / ``finish``; offline runners consume a
stored :class:`~sbic.model.LabelMatrix`.  Confidence scores follow each
algorithm's own posterior notion: vote-sum magnitude for majority,
expit(|z|) for the log-odds methods, max(mu, 1-mu) for the mean-field and
Monte-Carlo ones.
"""

from __future__ import annotations

import numpy as np

from . import baselines
from .model import ConfigError, LabelMatrix, Prediction, Prior
from .streaming import FastSbic, SortedSbic, fast_offline, sorted_offline

ALGORITHMS = ("maj", "em", "amf", "kos", "gibbs", "pf", "fast-sbic", "sorted-sbic")

# iteration counts used when the caller does not override them
DEFAULT_ITERS = {"em": 50, "amf": 50, "kos": 5}
DEFAULT_GIBBS_STEPS = 500
DEFAULT_PARTICLES = 50


class MajorityOnline:
    def __init__(self, num_tasks: int):
        self.votes = np.zeros(num_tasks)

    def observe(self, task: int, worker: int, label: int) -> None:
        self.votes[task] += label

    def uncertainty(self) -> np.ndarray:
        return np.abs(self.votes)

    def finish(self, matrix: LabelMatrix, tie_seed) -> Prediction:
        from .model import prediction_from_log_odds

        return prediction_from_log_odds(self.votes, tie_seed)


class FastSbicOnline:
    def __init__(self, prior: Prior, num_tasks: int):
        self.state = FastSbic(prior, num_tasks)

    def observe(self, task: int, worker: int, label: int) -> None:
        self.state.update(task, worker, label)

    def uncertainty(self) -> np.ndarray:
        return self.state.uncertainty()

    def finish(self, matrix: LabelMatrix, tie_seed) -> Prediction:
        return self.state.predict(tie_seed)


class SortedSbicOnline:
    def __init__(self, prior: Prior, num_tasks: int, include_current: bool = True):
        self.state = SortedSbic(
            prior, num_tasks, include_current=include_current, track_online=True
        )

    def observe(self, task: int, worker: int, label: int) -> None:
        self.state.update(task, worker, label)

    def uncertainty(self) -> np.ndarray:
        return self.state.uncertainty()

    def finish(self, matrix: LabelMatrix, tie_seed) -> Prediction:
        return self.state.finalize(tie_seed)


class MeanFieldOnlineAdapter:
    def __init__(self, prior: Prior, num_tasks: int, mode: str, iterations: int, **kw):
        self.prior = prior
        self.mode = mode
        self.iterations = iterations
        self.state = baselines.MeanFieldOnline(prior, num_tasks, mode=mode, **kw)

    def observe(self, task: int, worker: int, label: int) -> None:
        self.state.observe(task, worker, label)

    def uncertainty(self) -> np.ndarray:
        return self.state.uncertainty()

    def finish(self, matrix: LabelMatrix, tie_seed) -> Prediction:
        # final predictions are recomputed from scratch at full iteration count
        return baselines.amf_run(
            matrix, self.prior, iterations=self.iterations, mode=self.mode, tie_seed=tie_seed
        )


class KosOnline:
    """Re-runs the power iteration on the data collected so far at each query.

    There is no cheap incremental form, which is exactly why this method
    is a poor fit for adaptive collection; the adapter exists so the
    comparison can still be made.
    """

    def __init__(self, num_tasks: int, iterations: int, tie_seed):
        self.num_tasks = num_tasks
        self.iterations = iterations
        self.tie_seed = tie_seed
        self._records: list[tuple[int, int, int]] = []

    def _matrix(self) -> LabelMatrix:
        from .model import matrix_ingest

        return matrix_ingest(self._records, num_tasks=self.num_tasks)

    def observe(self, task: int, worker: int, label: int) -> None:
        self._records.append((task, worker, label))

    def uncertainty(self) -> np.ndarray:
        pred = baselines.kos_run(self._matrix(), self.iterations, self.tie_seed)
        return np.abs(pred.log_odds)

    def finish(self, matrix: LabelMatrix, tie_seed) -> Prediction:
        return baselines.kos_run(matrix, self.iterations, tie_seed)


class ParticleFilterOnline:
    def __init__(self, prior: Prior, num_tasks: int, num_particles: int, seed):
        self.pf = baselines.ParticleFilter(
            prior, num_tasks, num_particles=num_particles, seed=seed
        )

    def observe(self, task: int, worker: int, label: int) -> None:
        self.pf.observe(task, worker, label)

    def uncertainty(self) -> np.ndarray:
        return self.pf.uncertainty()

    def finish(self, matrix: LabelMatrix, tie_seed) -> Prediction:
        return self.pf.predict(tie_seed)


def make_online(algo: str, prior: Prior, num_tasks: int, seed, options: dict | None = None):
    """Build the streaming adapter for ``algo``; raises for algorithms without one."""
    opts = dict(options or {})
    if algo == "maj":
        return MajorityOnline(num_tasks)
    if algo == "fast-sbic":
        return FastSbicOnline(prior, num_tasks)
    if algo == "sorted-sbic":
        return SortedSbicOnline(
            prior, num_tasks, include_current=opts.get("include_current", True)
        )
    if algo in ("amf", "em"):
        return MeanFieldOnlineAdapter(
            prior,
            num_tasks,
            mode=algo,
            iterations=opts.get("iters", DEFAULT_ITERS[algo]),
            inner_iterations=opts.get("inner_iters", 4),
            warm_start=opts.get("warm_start", True),
        )
    if algo == "kos":
        return KosOnline(num_tasks, opts.get("iters", DEFAULT_ITERS["kos"]), tie_seed=seed)
    if algo == "pf":
        return ParticleFilterOnline(
            prior, num_tasks, opts.get("particles", DEFAULT_PARTICLES), seed
        )
    if algo == "gibbs":
        raise ConfigError(
            "gibbs keeps no online posterior; use 'pf' with the us policy"
        )
    raise ConfigError(f"unknown algorithm {algo!r}")


def run_offline(
    algo: str, matrix: LabelMatrix, prior: Prior, seed, options: dict | None = None
) -> Prediction:
    """Run ``algo`` over a stored dataset (in record order where order matters)."""
    opts = dict(options or {})
    if algo == "maj":
        return baselines.majority_vote(matrix, tie_seed=seed)
    if algo in ("amf", "em"):
        return baselines.amf_run(
            matrix,
            prior,
            iterations=opts.get("iters", DEFAULT_ITERS[algo]),
            mode=algo,
            tie_seed=seed,
        )
    if algo == "kos":
        return baselines.kos_run(matrix, opts.get("iters", DEFAULT_ITERS["kos"]), tie_seed=seed)
    if algo == "gibbs":
        return baselines.gibbs_run(
            matrix, prior, steps=opts.get("steps", DEFAULT_GIBBS_STEPS), seed=seed
        )
    if algo == "pf":
        return baselines.particle_filter_run(
            matrix, prior, num_particles=opts.get("particles", DEFAULT_PARTICLES), seed=seed
        )
    if algo == "fast-sbic":
        return fast_offline(matrix, prior, tie_seed=seed)
    if algo == "sorted-sbic":
        return sorted_offline(
            matrix, prior, tie_seed=seed, include_current=opts.get("include_current", True)
        )
    raise ConfigError(f"unknown algorithm {algo!r}")
