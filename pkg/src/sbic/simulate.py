"""Synthetic-crowd generation and the empirical error / timing protocol.

A run draws a crowd of |N| = |M| R / L workers with Beta-distributed
accuracies, sets every true class to +1, and streams R |M| labels: each
worker shows up for L consecutive steps (session arrival; an interleaved
mode exists for sensitivity checks), the policy picks the task, and the
label is correct with the worker's accuracy.  Curve estimation repeats
runs until enough of them contain at least one error, pooling errors
over all runs, with Agresti-Coull intervals on the pooled estimate.
"""

from __future__ import annotations

import dataclasses
import math
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from .model import (
    ConfigError,
    GroundTruth,
    LabelMatrix,
    LabelRecord,
    Prior,
    error_count,
)
from .online import ALGORITHMS, make_online, run_offline
from .policies import AssignmentContext, uni_next, us_next

POLICIES = ("uni", "us")
ARRIVALS = ("sessions", "interleaved")


@dataclass(frozen=True)
class SyntheticConfig:
    """Parameters of one synthetic run; the prior both draws the crowd and
    is handed to the aggregator (pass a different ``crowd_prior`` to split them)."""

    num_tasks: int
    labels_per_task: int
    labels_per_worker: int
    prior: Prior
    policy: str = "uni"
    aggregator: str = "maj"
    seed: int = 0
    arrival: str = "sessions"
    crowd_prior: Prior | None = None
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.num_tasks < 1:
            raise ConfigError("need at least one task")
        if self.labels_per_task < 1:
            raise ConfigError("labels per task (R) must be >= 1")
        if self.labels_per_worker < 1:
            raise ConfigError("labels per worker (L) must be >= 1")
        if self.labels_per_worker > self.num_tasks:
            raise ConfigError(
                f"labels per worker (L={self.labels_per_worker}) cannot exceed "
                f"the number of tasks ({self.num_tasks})"
            )
        if (self.num_tasks * self.labels_per_task) % self.labels_per_worker:
            raise ConfigError(
                "|M| * R must be divisible by L so the crowd size is integral"
            )
        if self.policy not in POLICIES:
            raise ConfigError(f"unknown policy {self.policy!r}")
        if self.aggregator not in ALGORITHMS:
            raise ConfigError(f"unknown aggregator {self.aggregator!r}")
        if self.arrival not in ARRIVALS:
            raise ConfigError(f"unknown arrival mode {self.arrival!r}")

    @property
    def num_workers(self) -> int:
        return (self.num_tasks * self.labels_per_task) // self.labels_per_worker

    @property
    def num_labels(self) -> int:
        return self.num_tasks * self.labels_per_task

    def drawing_prior(self) -> Prior:
        return self.crowd_prior if self.crowd_prior is not None else self.prior


@dataclass(frozen=True)
class RunResult:
    errors: int
    total: int
    wall_time: float


@dataclass(frozen=True)
class CurvePoint:
    R: int
    error_mean: float
    ci_low: float
    ci_high: float
    runs: int
    error_runs: int = 0
    total_errors: int = 0
    truncated: bool = False


def agresti_coull(k: int, n: int, confidence: float = 0.99) -> tuple[float, float]:
    """Adjusted-count binomial interval, clamped to [0, 1].

    With z the two-sided normal quantile: n~ = n + z^2,
    p~ = (k + z^2/2) / n~, half-width z * sqrt(p~ (1-p~) / n~).
    """
    if n < 1 or not 0 <= k <= n:
        raise ConfigError(f"need 0 <= k <= n with n >= 1, got k={k}, n={n}")
    if not 0.0 < confidence < 1.0:
        raise ConfigError(f"confidence must lie in (0, 1), got {confidence}")
    z = float(norm.ppf(0.5 * (1.0 + confidence)))
    n_adj = n + z * z
    p_adj = (k + z * z / 2.0) / n_adj
    half = z * math.sqrt(p_adj * (1.0 - p_adj) / n_adj)
    return max(0.0, p_adj - half), min(1.0, p_adj + half)


def _arrival_sequence(cfg: SyntheticConfig, rng: np.random.Generator) -> np.ndarray:
    order = rng.permutation(cfg.num_workers)
    if cfg.arrival == "sessions":
        return np.repeat(order, cfg.labels_per_worker)
    return rng.permutation(np.repeat(order, cfg.labels_per_worker))


def generate_run(
    cfg: SyntheticConfig, aggregator=None
) -> tuple[list[LabelRecord], GroundTruth]:
    """Stream one synthetic collection; feeds ``aggregator`` live when given.

    Under uncertainty sampling an aggregator is required, since the
    policy consumes its confidence scores; the caller may also pass one
    under round-robin to exercise online behaviour.
    """
    root = np.random.SeedSequence(cfg.seed)
    crowd_ss, policy_ss, agg_ss = root.spawn(3)
    crowd_rng = np.random.default_rng(crowd_ss)
    policy_rng = np.random.default_rng(policy_ss)

    if cfg.policy == "us" and aggregator is None:
        aggregator = make_online(
            cfg.aggregator, cfg.prior, cfg.num_tasks, agg_ss, cfg.options
        )

    prior = cfg.drawing_prior()
    accuracies = crowd_rng.beta(prior.alpha, prior.beta, size=cfg.num_workers)
    arrivals = _arrival_sequence(cfg, crowd_rng)
    label_noise = crowd_rng.random(cfg.num_labels)

    counts = np.zeros(cfg.num_tasks, dtype=np.int64)
    done_masks: dict[int, np.ndarray] = {}
    records: list[LabelRecord] = []
    for t, worker in enumerate(arrivals):
        worker = int(worker)
        mask = done_masks.get(worker)
        if mask is None:
            mask = np.zeros(cfg.num_tasks, dtype=bool)
            done_masks[worker] = mask
        ctx = AssignmentContext(
            worker=worker,
            labeled_by_worker=mask,
            label_counts=counts,
            uncertainty=aggregator.uncertainty() if cfg.policy == "us" else None,
        )
        task = uni_next(ctx, policy_rng) if cfg.policy == "uni" else us_next(ctx, policy_rng)
        label = 1 if label_noise[t] < accuracies[worker] else -1  # truth is +1 everywhere
        records.append(LabelRecord(task=task, worker=worker, label=label, seq=t + 1))
        counts[task] += 1
        mask[task] = True
        if aggregator is not None:
            aggregator.observe(task, worker, label)

    truth = GroundTruth(np.ones(cfg.num_tasks, dtype=np.int8))
    return records, truth


def run_once(cfg: SyntheticConfig) -> RunResult:
    """One full collection-plus-inference run, wall-clock timed."""
    start = time.perf_counter()
    # children 0-2 match the ones generate_run derives from the same seed
    _, _, agg_ss, tie_ss = np.random.SeedSequence(cfg.seed).spawn(4)
    if cfg.policy == "us":
        aggregator = make_online(cfg.aggregator, cfg.prior, cfg.num_tasks, agg_ss, cfg.options)
        records, truth = generate_run(cfg, aggregator)
        matrix = LabelMatrix(records, num_tasks=cfg.num_tasks, num_workers=cfg.num_workers)
        prediction = aggregator.finish(matrix, tie_ss)
    else:
        records, truth = generate_run(cfg)
        matrix = LabelMatrix(records, num_tasks=cfg.num_tasks, num_workers=cfg.num_workers)
        prediction = run_offline(cfg.aggregator, matrix, cfg.prior, tie_ss, cfg.options)
    wall = time.perf_counter() - start
    return RunResult(errors=error_count(prediction, truth), total=cfg.num_tasks, wall_time=wall)


def _run_seed(cfg: SyntheticConfig, run_index: int) -> int:
    # one integer seed per (base seed, R, run index); stable under parallelism
    ss = np.random.SeedSequence(
        entropy=(cfg.seed, cfg.labels_per_task, run_index)
    )
    return int(ss.generate_state(1)[0])


def _indexed_run(payload: tuple[SyntheticConfig, int]) -> tuple[int, int]:
    cfg, run_index = payload
    result = run_once(dataclasses.replace(cfg, seed=_run_seed(cfg, run_index)))
    return result.errors, result.total


def estimate_error_curve(
    cfg: SyntheticConfig,
    r_grid,
    target: int = 1000,
    max_runs: int = 200_000,
    confidence: float = 0.99,
    workers: int = 1,
    progress=None,
) -> list[CurvePoint]:
    """Pooled error estimate per R, repeating runs until ``target`` of them
    contain at least one error (or ``max_runs`` is hit, which flags the point).

    The estimate pools errors over every run, clean ones included; the
    stop rule only counts runs with errors.  Results depend only on
    (cfg.seed, R, run index), so any worker count reproduces them.
    """
    if target < 1:
        raise ConfigError("target error-run count must be >= 1")
    points = []
    for r_value in r_grid:
        point_cfg = dataclasses.replace(cfg, labels_per_task=int(r_value))
        total_errors = 0
        total_preds = 0
        error_runs = 0
        runs = 0
        if workers > 1:
            batch = max(4 * workers, 8)
            with ProcessPoolExecutor(max_workers=workers) as pool:
                while error_runs < target and runs < max_runs:
                    take = min(batch, max_runs - runs)
                    jobs = [(point_cfg, runs + k) for k in range(take)]
                    for errors, total in pool.map(_indexed_run, jobs):
                        # reduce strictly in seed order so parallelism is invisible
                        total_errors += errors
                        total_preds += total
                        error_runs += errors > 0
                        runs += 1
                        if error_runs >= target:
                            break
        else:
            while error_runs < target and runs < max_runs:
                errors, total = _indexed_run((point_cfg, runs))
                total_errors += errors
                total_preds += total
                error_runs += errors > 0
                runs += 1
        truncated = error_runs < target
        if truncated:
            warnings.warn(
                f"R={r_value}: stopped at max_runs={max_runs} with only "
                f"{error_runs}/{target} error runs; estimate is noisier",
                stacklevel=2,
            )
        ci_low, ci_high = agresti_coull(total_errors, total_preds, confidence)
        points.append(
            CurvePoint(
                R=int(r_value),
                error_mean=total_errors / total_preds,
                ci_low=ci_low,
                ci_high=ci_high,
                runs=runs,
                error_runs=error_runs,
                total_errors=total_errors,
                truncated=truncated,
            )
        )
        if progress is not None:
            progress(points[-1])
    return points


@dataclass(frozen=True)
class TimingResult:
    mean_ms: float
    std_ms: float
    times_ms: tuple[float, ...]


def timing_harness(cfg: SyntheticConfig, repeats: int = 10) -> TimingResult:
    """Mean/std wall time of full runs (collection + inference), warm-up excluded."""
    if repeats < 1:
        raise ConfigError("repeats must be >= 1")
    run_once(dataclasses.replace(cfg, seed=_run_seed(cfg, 0)))  # warm-up, discarded
    times = []
    for k in range(1, repeats + 1):
        result = run_once(dataclasses.replace(cfg, seed=_run_seed(cfg, k)))
        times.append(result.wall_time * 1e3)
    times_arr = np.asarray(times)
    return TimingResult(
        mean_ms=float(times_arr.mean()),
        std_ms=float(times_arr.std()),
        times_ms=tuple(times),
    )
