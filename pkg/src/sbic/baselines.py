"""Comparison aggregators: majority vote, mean-field variational inference
(posterior-mean and posterior-mode flavours), power iteration on the label
matrix, collapsed Gibbs sampling, and a sequential particle filter.

All are deterministic given (matrix, seed).  Where a sampler's conditionals
are needed they follow from the one-coin generative model: worker accuracy
is Beta-conjugate given the class assignments, and class assignments are
independent given the accuracies, so both blocks update in closed form.
"""

from __future__ import annotations

import logging

import numpy as np

from .model import (
    ConfigError,
    DuplicateLabelError,
    LabelMatrix,
    Prediction,
    Prior,
    expit,
    prediction_from_log_odds,
    prior_log_odds,
)

logger = logging.getLogger(__name__)

_P_EPS = 1e-12  # keep sampled accuracies strictly inside (0, 1) for the log-odds


def majority_vote(matrix: LabelMatrix, tie_seed) -> Prediction:
    """Sign of the per-task vote sum; ties broken by a seeded coin flip.

    The raw vote sums ride along as ``log_odds`` so their magnitude can
    serve as a confidence score for uncertainty sampling.
    """
    votes = np.bincount(
        matrix.task_ids, weights=matrix.labels, minlength=matrix.num_tasks
    )
    return prediction_from_log_odds(votes, tie_seed)


def _mean_field_params(prior: Prior, mode: str) -> tuple[float, float]:
    if mode == "amf":
        return prior.alpha, prior.beta
    if mode == "em":
        # shifting both prior counts down by one turns the posterior mean
        # into the posterior mode, which needs both to stay positive
        if prior.alpha <= 1.0 or prior.beta <= 1.0:
            raise ConfigError(
                f"em mode needs alpha > 1 and beta > 1, got ({prior.alpha}, {prior.beta})"
            )
        return prior.alpha - 1.0, prior.beta - 1.0
    raise ConfigError(f"unknown mean-field mode {mode!r}")


def _task_log_odds(matrix: LabelMatrix, p_bar: np.ndarray, w_q: float) -> np.ndarray:
    log_w = np.log(p_bar) - np.log1p(-p_bar)
    return w_q + np.bincount(
        matrix.task_ids,
        weights=matrix.labels * log_w[matrix.worker_ids],
        minlength=matrix.num_tasks,
    )


def _worker_step(
    matrix: LabelMatrix, mu: np.ndarray, a_bar: float, b_bar: float, n_j: np.ndarray
) -> np.ndarray:
    agree = np.where(matrix.labels > 0, mu[matrix.task_ids], 1.0 - mu[matrix.task_ids])
    sums = np.bincount(matrix.worker_ids, weights=agree, minlength=matrix.num_workers)
    return (sums + a_bar) / (n_j + a_bar + b_bar)


def amf_run(
    matrix: LabelMatrix,
    prior: Prior,
    iterations: int = 50,
    mode: str = "amf",
    tie_seed=0,
) -> Prediction:
    """Alternating full sweeps of worker and task updates.

    Worker estimates start at their prior mean; each iteration recomputes
    the task posteriors from the current estimates and then the estimates
    from the posteriors.  A final task sweep produces the returned
    log-odds, so ``iterations=0`` is a weighted vote under the prior.
    """
    if iterations < 0:
        raise ConfigError("iterations must be >= 0")
    a_bar, b_bar = _mean_field_params(prior, mode)
    n_j = np.bincount(matrix.worker_ids, minlength=matrix.num_workers).astype(np.float64)
    w_q = prior_log_odds(prior)
    p_bar = np.full(matrix.num_workers, a_bar / (a_bar + b_bar))
    for _ in range(iterations):
        mu = expit(_task_log_odds(matrix, p_bar, w_q))
        p_bar = _worker_step(matrix, mu, a_bar, b_bar, n_j)
    return prediction_from_log_odds(_task_log_odds(matrix, p_bar, w_q), tie_seed)


class MeanFieldOnline:
    """Warm-started mean-field updates for use while labels are arriving.

    After each new label, runs ``inner_iterations`` full sweeps over all
    observed data starting from the current worker estimates (or from the
    prior when ``warm_start`` is off), then one more task sweep so the
    stored posteriors match the estimates.  On a fresh state a single
    step therefore reproduces an offline run with the same iteration
    count over the one-record dataset.
    """

    def __init__(
        self,
        prior: Prior,
        num_tasks: int,
        mode: str = "amf",
        inner_iterations: int = 4,
        warm_start: bool = True,
    ):
        if num_tasks < 1:
            raise ConfigError(f"need at least one task, got {num_tasks}")
        self.prior = prior
        self.mode = mode
        self.inner_iterations = inner_iterations
        self.warm_start = warm_start
        self._a_bar, self._b_bar = _mean_field_params(prior, mode)
        self._w_q = prior_log_odds(prior)
        self.num_tasks = num_tasks
        self.num_workers = 0
        self._tasks: list[int] = []
        self._workers: list[int] = []
        self._labels: list[int] = []
        self._seen: set[tuple[int, int]] = set()
        self._p_bar = np.empty(0)
        self.log_odds = np.full(num_tasks, self._w_q)

    def _prior_mean(self) -> float:
        return self._a_bar / (self._a_bar + self._b_bar)

    def observe(self, task: int, worker: int, label: int) -> None:
        if (task, worker) in self._seen:
            raise DuplicateLabelError(f"duplicate label for (task={task}, worker={worker})")
        self._seen.add((task, worker))
        self._tasks.append(task)
        self._workers.append(worker)
        self._labels.append(label)
        if worker >= self.num_workers:
            grown = np.full(worker + 1, self._prior_mean())
            grown[: self.num_workers] = self._p_bar[: self.num_workers]
            self._p_bar = grown
            self.num_workers = worker + 1
        self._resweep()

    def _resweep(self) -> None:
        t = np.asarray(self._tasks, dtype=np.intp)
        wk = np.asarray(self._workers, dtype=np.intp)
        x = np.asarray(self._labels, dtype=np.float64)
        n_j = np.bincount(wk, minlength=self.num_workers).astype(np.float64)
        p_bar = self._p_bar if self.warm_start else np.full(self.num_workers, self._prior_mean())

        def task_sweep(p):
            log_w = np.log(p) - np.log1p(-p)
            return self._w_q + np.bincount(
                t, weights=x * log_w[wk], minlength=self.num_tasks
            )

        for _ in range(self.inner_iterations):
            mu = expit(task_sweep(p_bar))
            agree = np.where(x > 0, mu[t], 1.0 - mu[t])
            sums = np.bincount(wk, weights=agree, minlength=self.num_workers)
            p_bar = (sums + self._a_bar) / (n_j + self._a_bar + self._b_bar)
        self._p_bar = p_bar
        self.log_odds = task_sweep(p_bar)

    def uncertainty(self) -> np.ndarray:
        return expit(np.abs(self.log_odds))

    def predict(self, tie_seed) -> Prediction:
        return prediction_from_log_odds(self.log_odds, tie_seed)


def kos_run(matrix: LabelMatrix, iterations: int, tie_seed) -> Prediction:
    """Power iteration alternating worker and task scores on the sparse matrix.

    Task scores start at the vote sums (so zero iterations reproduces
    majority voting) and are L2-normalised after each iteration to keep
    the values bounded; predictions are invariant to the norm used.
    """
    if iterations < 0:
        raise ConfigError("iterations must be >= 0")
    t, wk = matrix.task_ids, matrix.worker_ids
    x = matrix.labels.astype(np.float64)
    z = np.bincount(t, weights=x, minlength=matrix.num_tasks)
    for _ in range(iterations):
        w = np.bincount(wk, weights=x * z[t], minlength=matrix.num_workers)
        z = np.bincount(t, weights=x * w[wk], minlength=matrix.num_tasks)
        norm = float(np.linalg.norm(z))
        if norm > 0.0:
            z = z / norm
    return prediction_from_log_odds(z, tie_seed)


def _predict_from_marginals(marginals: np.ndarray, tie_seed) -> Prediction:
    """+1 where P(y = +1) > 1/2, -1 below, seeded coin flips at exactly 1/2."""
    classes = np.sign(marginals - 0.5).astype(np.int8)
    ties = classes == 0
    if np.any(ties):
        rng = np.random.default_rng(tie_seed)
        classes[ties] = rng.choice(np.array([-1, 1], dtype=np.int8), size=int(ties.sum()))
    return Prediction(classes=classes)


def gibbs_marginals(
    matrix: LabelMatrix, prior: Prior, steps: int = 500, seed=0
) -> np.ndarray:
    """Fraction of chain samples with y_i = +1, averaged over all steps.

    The chain alternates two conjugate blocks: accuracies p_j are Beta
    given the assignments (counting agreements), assignments y_i are
    independent Bernoulli given the accuracies.  No burn-in is discarded.
    """
    if steps < 1:
        raise ConfigError("steps must be >= 1")
    rng = np.random.default_rng(seed)
    t, wk = matrix.task_ids, matrix.worker_ids
    x = matrix.labels.astype(np.float64)
    num_tasks, num_workers = matrix.num_tasks, matrix.num_workers
    n_j = np.bincount(wk, minlength=num_workers).astype(np.float64)
    w_q = prior_log_odds(prior)

    y = np.where(rng.random(num_tasks) < prior.q, 1.0, -1.0)
    rng.beta(prior.alpha, prior.beta, size=num_workers)  # chain init draw for p
    tally = np.zeros(num_tasks, dtype=np.int64)
    for _ in range(steps):
        agree = (x == y[t]).astype(np.float64)
        k_j = np.bincount(wk, weights=agree, minlength=num_workers)
        p = rng.beta(prior.alpha + k_j, prior.beta + (n_j - k_j))
        p = np.clip(p, _P_EPS, 1.0 - _P_EPS)
        log_w = np.log(p) - np.log1p(-p)
        lo = w_q + np.bincount(t, weights=x * log_w[wk], minlength=num_tasks)
        y = np.where(rng.random(num_tasks) < expit(lo), 1.0, -1.0)
        tally += y > 0
    return tally / steps


def gibbs_run(
    matrix: LabelMatrix, prior: Prior, steps: int = 500, seed=0, tie_seed=None
) -> Prediction:
    """Predict from :func:`gibbs_marginals`; ties at a marginal of exactly 1/2."""
    marginals = gibbs_marginals(matrix, prior, steps=steps, seed=seed)
    return _predict_from_marginals(marginals, seed if tie_seed is None else tie_seed)


class ParticleFilter:
    """Sequential Monte-Carlo aggregator with worker accuracies collapsed out.

    Each particle is a full class-assignment vector drawn from the prior.
    A new label reweights every particle by its Beta-Bernoulli predictive
    probability given that particle's agreement history with the worker;
    every ``gibbs_every`` labels each particle takes a full collapsed
    Gibbs sweep and the weights reset to one.
    """

    def __init__(
        self,
        prior: Prior,
        num_tasks: int,
        num_particles: int = 50,
        seed=0,
        gibbs_every: int = 10,
    ):
        if num_tasks < 1:
            raise ConfigError(f"need at least one task, got {num_tasks}")
        if num_particles < 1:
            raise ConfigError("need at least one particle")
        self.prior = prior
        self.num_tasks = num_tasks
        self.num_particles = num_particles
        self.gibbs_every = gibbs_every
        self._rng = np.random.default_rng(seed)
        self._w_q = prior_log_odds(prior)
        self.y = np.where(
            self._rng.random((num_particles, num_tasks)) < prior.q, 1, -1
        ).astype(np.int8)
        self.weights = np.ones(num_particles)
        self._agree: dict[int, np.ndarray] = {}  # worker -> per-particle counts
        self._n_j: dict[int, int] = {}
        self._by_task: dict[int, list[tuple[int, int]]] = {}
        self._by_worker: dict[int, list[tuple[int, int]]] = {}
        self._seen: set[tuple[int, int]] = set()
        self.observed = 0
        self.prior_resets = 0  # diagnostic: weight-collapse fallbacks taken

    def observe(self, task: int, worker: int, label: int) -> None:
        if (task, worker) in self._seen:
            raise DuplicateLabelError(f"duplicate label for (task={task}, worker={worker})")
        alpha, beta = self.prior.alpha, self.prior.beta
        n = self._n_j.get(worker, 0)
        k = self._agree.get(worker)
        if k is None:
            k = np.zeros(self.num_particles)
        agrees = self.y[:, task] == label
        denom = n + alpha + beta
        self.weights = self.weights * np.where(
            agrees, (k + alpha) / denom, (n - k + beta) / denom
        )
        self._agree[worker] = k + agrees
        self._n_j[worker] = n + 1
        self._by_task.setdefault(task, []).append((worker, label))
        self._by_worker.setdefault(worker, []).append((task, label))
        self._seen.add((task, worker))
        self.observed += 1

        if self.gibbs_every and self.observed % self.gibbs_every == 0:
            self._sweep()
            self.weights = np.ones(self.num_particles)
        else:
            total = float(self.weights.sum())
            if total <= 0.0 or not np.isfinite(total):
                self._reset_from_prior()
            else:
                self.weights = self.weights * (self.num_particles / total)

    def _reset_from_prior(self) -> None:
        """All weights collapsed: redraw particles from the prior and rebuild counts."""
        self.prior_resets += 1
        logger.warning("particle weights collapsed; resampling particles from the prior")
        self.y = np.where(
            self._rng.random((self.num_particles, self.num_tasks)) < self.prior.q, 1, -1
        ).astype(np.int8)
        self.weights = np.ones(self.num_particles)
        for worker, pairs in self._by_worker.items():
            k = np.zeros(self.num_particles)
            for task, label in pairs:
                k += self.y[:, task] == label
            self._agree[worker] = k

    def _sweep(self) -> None:
        """One collapsed Gibbs pass over every task, all particles in lockstep."""
        alpha, beta = self.prior.alpha, self.prior.beta
        for task in range(self.num_tasks):
            pairs = self._by_task.get(task)
            lo = np.full(self.num_particles, self._w_q)
            if pairs:
                for worker, label in pairs:
                    k_minus = self._agree[worker] - (self.y[:, task] == label)
                    m = self._n_j[worker] - 1
                    lo += label * (
                        np.log(k_minus + alpha) - np.log(m - k_minus + beta)
                    )
            fresh = np.where(
                self._rng.random(self.num_particles) < expit(lo), 1, -1
            ).astype(np.int8)
            if pairs:
                for worker, label in pairs:
                    self._agree[worker] += (fresh == label).astype(np.float64) - (
                        self.y[:, task] == label
                    )
            self.y[:, task] = fresh

    def marginals(self) -> np.ndarray:
        """Weighted particle average of P(y_i = +1)."""
        total = float(self.weights.sum())
        if total <= 0.0:
            return np.full(self.num_tasks, self.prior.q)
        return (self.weights @ (self.y > 0)) / total

    def uncertainty(self) -> np.ndarray:
        m = self.marginals()
        return np.maximum(m, 1.0 - m)

    def predict(self, tie_seed) -> Prediction:
        return _predict_from_marginals(self.marginals(), tie_seed)


def particle_filter_run(
    matrix: LabelMatrix,
    prior: Prior,
    num_particles: int = 50,
    seed=0,
    gibbs_every: int = 10,
    tie_seed=None,
) -> Prediction:
    """Stream a stored dataset through a :class:`ParticleFilter` in record order."""
    pf = ParticleFilter(
        prior, matrix.num_tasks, num_particles=num_particles, seed=seed, gibbs_every=gibbs_every
    )
    for r in matrix.records:
        pf.observe(r.task, r.worker, r.label)
    return pf.predict(seed if tie_seed is None else tie_seed)
