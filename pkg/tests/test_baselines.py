"""Baseline aggregator tests, including the exhaustive-posterior oracle for
the samplers: on tiny instances the exact marginals come from enumerating
all class vectors with the worker accuracies integrated out analytically."""

import itertools
import math

import numpy as np
import pytest
from scipy.special import betaln

from sbic import (
    ConfigError,
    LabelMatrix,
    LabelRecord,
    ParticleFilter,
    Prior,
    amf_run,
    gibbs_marginals,
    gibbs_run,
    kos_run,
    majority_vote,
    matrix_ingest,
    particle_filter_run,
)
from sbic.baselines import MeanFieldOnline

from conftest import random_instance


def enumerate_posterior(matrix: LabelMatrix, prior: Prior) -> np.ndarray:
    """Exact P(y_i = +1 | X): sum over all 2^|M| class vectors, with each
    worker's accuracy integrated out through a Beta-binomial likelihood."""
    log_prior = {1: math.log(prior.q), -1: math.log(1.0 - prior.q)}
    log_norm = betaln(prior.alpha, prior.beta)
    weights = []
    assignments = list(itertools.product((1, -1), repeat=matrix.num_tasks))
    for y in assignments:
        log_w = sum(log_prior[value] for value in y)
        for worker in range(matrix.num_workers):
            pairs = matrix.by_worker[worker]
            agreements = sum(1 for task, label in pairs if label == y[task])
            log_w += (
                betaln(prior.alpha + agreements, prior.beta + len(pairs) - agreements)
                - log_norm
            )
        weights.append(log_w)
    weights = np.exp(np.asarray(weights) - max(weights))
    weights /= weights.sum()
    marginals = np.zeros(matrix.num_tasks)
    for w, y in zip(weights, assignments):
        marginals += w * (np.asarray(y) > 0)
    return marginals


class TestMajorityVote:
    def test_clear_majorities(self):
        m = matrix_ingest([(0, 0, 1), (0, 1, 1), (0, 2, -1)])
        assert majority_vote(m, 0).classes[0] == 1
        m = matrix_ingest([(0, 0, -1), (0, 1, -1), (0, 2, -1), (0, 3, 1)])
        assert majority_vote(m, 0).classes[0] == -1

    def test_vote_sums_exposed(self):
        m = matrix_ingest([(0, 0, 1), (0, 1, 1), (1, 0, -1)], num_tasks=3)
        pred = majority_vote(m, 0)
        np.testing.assert_array_equal(pred.log_odds, [2.0, -1.0, 0.0])

    def test_ties_seeded(self):
        m = matrix_ingest([(0, 0, 1), (0, 1, -1)])
        first = majority_vote(m, 11).classes[0]
        assert first == majority_vote(m, 11).classes[0]
        flips = {majority_vote(m, s).classes[0] for s in range(50)}
        assert flips == {-1, 1}


class TestMeanField:
    def test_zero_iterations_is_weighted_vote(self, prior43, rng):
        for _ in range(10):
            matrix = random_instance(rng, max_tasks=5, max_workers=6, max_labels_per_worker=4)
            amf = amf_run(matrix, prior43, iterations=0, tie_seed=5)
            maj = majority_vote(matrix, tie_seed=5)
            np.testing.assert_array_equal(amf.classes, maj.classes)

    def test_single_cell_fixed_point(self, prior43):
        matrix = matrix_ingest([(0, 0, 1)])
        pred = amf_run(matrix, prior43, iterations=50)
        assert pred.classes[0] == 1
        # mu(+1) = (0.5 * 4/7) / (0.5 * 4/7 + 0.5 * 3/7) = 4/7, stable
        from sbic import expit

        assert expit(pred.log_odds[0]) == pytest.approx(4 / 7, abs=1e-12)
        again = amf_run(matrix, prior43, iterations=7)
        np.testing.assert_allclose(again.log_odds, pred.log_odds, atol=1e-12)

    def test_symmetric_disagreement_stays_tied(self, prior43):
        matrix = matrix_ingest([(0, 0, 1), (0, 1, -1)])
        for iters in (0, 1, 10, 50):
            pred = amf_run(matrix, prior43, iterations=iters, tie_seed=3)
            assert pred.log_odds[0] == pytest.approx(0.0, abs=1e-12)

    def test_em_mode_offsets(self):
        matrix = matrix_ingest([(0, 0, 1)])
        pred = amf_run(matrix, Prior(4, 3, 0.5), iterations=50, mode="em")
        # fixed point now with shifted counts: weight log(p/(1-p)), p = (3/7... ) shifted
        from sbic import expit

        # mode offset: alpha_bar=3, beta_bar=2, prior mean 0.6; 1-cell fixed point keeps mu = p
        assert expit(pred.log_odds[0]) == pytest.approx(0.6, abs=1e-12)

    def test_em_requires_proper_mode(self):
        matrix = matrix_ingest([(0, 0, 1)])
        with pytest.raises(ConfigError):
            amf_run(matrix, Prior(2, 1, 0.5), iterations=5, mode="em")
        with pytest.raises(ConfigError):
            amf_run(matrix, Prior(1, 3, 0.5), iterations=5, mode="em")

    def test_label_flip_equivariance(self, prior43, rng):
        for _ in range(5):
            matrix = random_instance(rng, max_tasks=5, max_workers=5, max_labels_per_worker=3)
            flipped = LabelMatrix(
                [LabelRecord(r.task, r.worker, -r.label) for r in matrix.records],
                num_tasks=matrix.num_tasks,
                num_workers=matrix.num_workers,
            )
            pos = amf_run(matrix, prior43, iterations=20)
            neg = amf_run(flipped, prior43, iterations=20)
            np.testing.assert_allclose(neg.log_odds, -pos.log_odds, atol=1e-10)

    def test_online_first_label_matches_offline(self, prior43):
        online = MeanFieldOnline(prior43, num_tasks=3, inner_iterations=4)
        online.observe(1, 0, 1)
        matrix = matrix_ingest([(1, 0, 1)], num_tasks=3)
        offline = amf_run(matrix, prior43, iterations=4)
        np.testing.assert_allclose(online.log_odds, offline.log_odds, atol=1e-12)

    def test_online_zero_inner_iterations(self, prior43):
        online = MeanFieldOnline(prior43, num_tasks=2, inner_iterations=0)
        online.observe(0, 0, 1)
        # estimates untouched: posteriors reflect the prior-mean worker only
        matrix = matrix_ingest([(0, 0, 1)], num_tasks=2)
        offline = amf_run(matrix, prior43, iterations=0)
        np.testing.assert_allclose(online.log_odds, offline.log_odds, atol=1e-12)

    def test_online_duplicate_rejected(self, prior43):
        from sbic import DuplicateLabelError

        online = MeanFieldOnline(prior43, num_tasks=2)
        online.observe(0, 0, 1)
        with pytest.raises(DuplicateLabelError):
            online.observe(0, 0, -1)


class TestKos:
    def test_zero_iterations_is_majority(self, prior43, rng):
        for seed in range(10):
            matrix = random_instance(rng, max_tasks=5, max_workers=6, max_labels_per_worker=4)
            kos = kos_run(matrix, iterations=0, tie_seed=seed)
            maj = majority_vote(matrix, tie_seed=seed)
            np.testing.assert_array_equal(kos.classes, maj.classes)
            np.testing.assert_array_equal(kos.log_odds, maj.log_odds)

    def test_single_cell_stays_positive(self):
        matrix = matrix_ingest([(0, 0, 1)])
        for iters in (1, 5, 100):
            assert kos_run(matrix, iters, tie_seed=0).classes[0] == 1

    def test_disconnected_components_symmetric(self):
        # two identical 2-worker components on separate tasks
        records = [(0, 0, 1), (0, 1, 1), (1, 2, 1), (1, 3, 1)]
        matrix = matrix_ingest(records)
        pred = kos_run(matrix, 5, tie_seed=0)
        assert pred.log_odds[0] == pytest.approx(pred.log_odds[1], abs=1e-12)

    def test_empty_matrix_all_ties(self):
        matrix = matrix_ingest([], num_tasks=3)
        pred = kos_run(matrix, 5, tie_seed=1)
        np.testing.assert_array_equal(pred.log_odds, np.zeros(3))
        assert set(np.unique(pred.classes)) <= {-1, 1}

    def test_normalised_after_iterations(self, prior43, rng):
        matrix = random_instance(rng, max_tasks=5, max_workers=5, max_labels_per_worker=3)
        pred = kos_run(matrix, 5, tie_seed=0)
        assert np.linalg.norm(pred.log_odds) == pytest.approx(1.0, abs=1e-9)


class TestGibbs:
    def test_single_positive_label_marginal(self, prior43):
        # closed form: P(y=+1 | one +1 label) = q E[p] / (q E[p] + (1-q) E[1-p]) = 4/7
        matrix = matrix_ingest([(0, 0, 1)])
        marginal = gibbs_marginals(matrix, prior43, steps=20000, seed=2)[0]
        assert marginal == pytest.approx(4 / 7, abs=0.02)

    def test_empty_matrix_prior_band(self, prior43):
        matrix = matrix_ingest([], num_tasks=4)
        steps = 4000
        marginals = gibbs_marginals(matrix, prior43, steps=steps, seed=3)
        sigma = math.sqrt(0.25 / steps)
        # samples are correlated only through nothing here: iid Bernoulli(1/2)
        assert np.all(np.abs(marginals - 0.5) < 6 * sigma)

    def test_matches_enumeration_on_dense_3x3(self, prior43, rng):
        for seed in range(3):
            records = [
                (i, j, int(rng.choice([-1, 1]))) for i in range(3) for j in range(3)
            ]
            matrix = matrix_ingest(records)
            exact = enumerate_posterior(matrix, prior43)
            approx = gibbs_marginals(matrix, prior43, steps=20000, seed=seed)
            np.testing.assert_allclose(approx, exact, atol=0.05)

    def test_deterministic_given_seed(self, prior43, rng):
        matrix = random_instance(rng)
        one = gibbs_marginals(matrix, prior43, steps=200, seed=9)
        two = gibbs_marginals(matrix, prior43, steps=200, seed=9)
        np.testing.assert_array_equal(one, two)

    def test_step_validation(self, prior43):
        with pytest.raises(ConfigError):
            gibbs_run(matrix_ingest([(0, 0, 1)]), prior43, steps=0)


class TestParticleFilter:
    def test_first_label_weights(self, prior43):
        pf = ParticleFilter(prior43, num_tasks=2, num_particles=50, seed=0)
        agreeing = pf.y[:, 0] == 1
        pf.observe(0, 0, 1)
        np.testing.assert_allclose(pf.weights[agreeing] / pf.weights[agreeing].mean(), 1.0)
        # agreeing particles got 4/7, the rest 3/7 (up to the common renormaliser)
        ratio = pf.weights[agreeing][0] / pf.weights[~agreeing][0]
        assert ratio == pytest.approx((4 / 7) / (3 / 7), abs=1e-12)

    def test_weights_reset_after_sweep(self, prior43):
        pf = ParticleFilter(prior43, num_tasks=12, num_particles=20, seed=1, gibbs_every=10)
        rng = np.random.default_rng(0)
        for k in range(10):
            pf.observe(k, k, int(rng.choice([-1, 1])))
        np.testing.assert_array_equal(pf.weights, np.ones(20))

    def test_marginals_close_to_gibbs_on_3x3(self, prior43, rng):
        records = [(i, j, int(rng.choice([-1, 1]))) for i in range(3) for j in range(3)]
        matrix = matrix_ingest(records)
        exact = enumerate_posterior(matrix, prior43)
        pf = ParticleFilter(prior43, 3, num_particles=50, seed=4)
        for r in matrix.records:
            pf.observe(r.task, r.worker, r.label)
        np.testing.assert_allclose(pf.marginals(), exact, atol=0.1)

    def test_run_deterministic(self, prior43, rng):
        matrix = random_instance(rng)
        one = particle_filter_run(matrix, prior43, seed=6)
        two = particle_filter_run(matrix, prior43, seed=6)
        np.testing.assert_array_equal(one.classes, two.classes)

    def test_duplicate_rejected(self, prior43):
        from sbic import DuplicateLabelError

        pf = ParticleFilter(prior43, num_tasks=2, seed=0)
        pf.observe(0, 0, 1)
        with pytest.raises(DuplicateLabelError):
            pf.observe(0, 0, 1)


class TestDeterminism:
    def test_all_offline_runners_deterministic(self, prior43, rng):
        from sbic.online import run_offline

        matrix = random_instance(rng, max_tasks=4, max_workers=4, max_labels_per_worker=3)
        for algo in ("maj", "em", "amf", "kos", "gibbs", "pf", "fast-sbic", "sorted-sbic"):
            prior = Prior(4, 3, 0.5) if algo != "em" else Prior(4, 3, 0.5)
            one = run_offline(algo, matrix, prior, seed=13, options={"steps": 50})
            two = run_offline(algo, matrix, prior, seed=13, options={"steps": 50})
            np.testing.assert_array_equal(one.classes, two.classes)
