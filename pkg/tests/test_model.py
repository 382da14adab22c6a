"""Core type and primitive tests."""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sbic import (
    ConfigError,
    DuplicateLabelError,
    GroundTruth,
    LabelFormatError,
    LabelMatrix,
    LabelRecord,
    Prediction,
    Prior,
    error_count,
    expit,
    logit,
    matrix_ingest,
    prediction_from_log_odds,
    prior_log_odds,
)


class TestExpit:
    def test_symmetry_point(self):
        assert expit(0.0) == 0.5

    def test_saturation(self):
        assert abs(expit(50.0) - 1.0) < 1e-15

    def test_direct_value(self):
        # 1 / (1 + exp(-log(4/3))) = 4/7
        assert expit(math.log(4 / 3)) == pytest.approx(4 / 7, abs=1e-12)
        assert expit(0.287682) == pytest.approx(0.571429, abs=1e-6)

    def test_complement(self):
        z = np.linspace(-30, 30, 101)
        np.testing.assert_allclose(expit(z) + expit(-z), 1.0, atol=1e-12)

    @given(st.floats(min_value=-700, max_value=700))
    def test_complement_pointwise(self, z):
        assert expit(z) + expit(-z) == pytest.approx(1.0, abs=1e-12)
        assert 0.0 <= expit(z) <= 1.0

    def test_logit_roundtrip_grid(self):
        # Above z ~ 16, 1 - expit(z) collides with float64 spacing near 1.0
        # (absolute round-trip error ~1e-3 by z = 30), so the tight bound is
        # asserted on the representable range and a spacing-scaled bound on
        # the rest of the [-30, 30] grid.
        z = np.linspace(-30, 16, 1000)
        np.testing.assert_allclose(logit(expit(z)), z, atol=1e-9)
        z = np.linspace(-30, 30, 1000)
        p = expit(z)
        slack = np.spacing(1.0) / np.minimum(p, 1 - p)
        assert np.all(np.abs(logit(p) - z) <= 1e-9 + 4 * slack)

    def test_expit_logit_roundtrip_probability_side(self):
        p = np.linspace(1e-12, 1 - 1e-12, 1000)
        np.testing.assert_allclose(expit(logit(p)), p, atol=1e-12)

    def test_monotone(self):
        z = np.linspace(-20, 20, 500)
        assert np.all(np.diff(expit(z)) > 0)


class TestPriorLogOdds:
    def test_symmetric(self):
        assert prior_log_odds(Prior(4, 3, 0.5)) == 0.0

    def test_direct_value(self):
        assert prior_log_odds(Prior(1, 1, 0.9)) == pytest.approx(math.log(9), abs=1e-6)
        assert prior_log_odds(Prior(1, 1, 0.9)) == pytest.approx(2.197225, abs=1e-6)
        assert prior_log_odds(Prior(1, 1, 0.1)) == pytest.approx(-2.197225, abs=1e-6)

    @given(st.floats(min_value=1e-6, max_value=1 - 1e-6))
    def test_antisymmetry(self, q):
        assert prior_log_odds(Prior(2, 2, q)) == pytest.approx(
            -prior_log_odds(Prior(2, 2, 1 - q)), abs=1e-9
        )


class TestPrior:
    def test_rejects_bad_parameters(self):
        with pytest.raises(ConfigError):
            Prior(0.0, 3.0)
        with pytest.raises(ConfigError):
            Prior(4.0, -1.0)
        with pytest.raises(ConfigError):
            Prior(4.0, 3.0, q=1.0)
        with pytest.raises(ConfigError):
            Prior(4.0, 3.0, q=0.0)

    def test_mean(self):
        assert Prior(4, 3).mean_accuracy == pytest.approx(4 / 7)


class TestMatrixIngest:
    def test_empty(self):
        m = matrix_ingest([])
        assert len(m) == 0
        assert m.num_tasks == 0 and m.num_workers == 0

    def test_direct_construction(self):
        m = matrix_ingest([(0, 0, 1), (0, 1, -1)])
        assert m.by_task[0] == ((0, 1), (1, -1))
        assert m.by_worker[0] == ((0, 1),)
        assert m.by_worker[1] == ((0, -1),)

    def test_duplicate_pair_rejected(self):
        with pytest.raises(DuplicateLabelError, match=r"task=0, worker=0"):
            matrix_ingest([(0, 0, 1), (0, 0, 1)])

    def test_bad_label_rejected(self):
        with pytest.raises(LabelFormatError):
            matrix_ingest([(0, 0, 0)])
        with pytest.raises(LabelFormatError):
            matrix_ingest([(0, 0, 2)])

    def test_seq_assigned_in_order(self):
        m = matrix_ingest([(0, 0, 1), (1, 0, -1), (2, 1, 1)])
        assert [r.seq for r in m.records] == [1, 2, 3]

    def test_views_consistent_with_records(self):
        rng = np.random.default_rng(5)
        for _ in range(25):
            n_tasks, n_workers = rng.integers(1, 8), rng.integers(1, 8)
            pairs = [(i, j) for i in range(n_tasks) for j in range(n_workers)]
            rng.shuffle(pairs)
            chosen = pairs[: rng.integers(0, len(pairs) + 1)]
            records = [(i, j, int(rng.choice([-1, 1]))) for i, j in chosen]
            m = matrix_ingest(records, num_tasks=n_tasks, num_workers=n_workers)
            # rebuild both index views straight off the record list
            by_task = [[] for _ in range(n_tasks)]
            by_worker = [[] for _ in range(n_workers)]
            for r in m.records:
                by_task[r.task].append((r.worker, r.label))
                by_worker[r.worker].append((r.task, r.label))
            assert m.by_task == tuple(tuple(v) for v in by_task)
            assert m.by_worker == tuple(tuple(v) for v in by_worker)
            assert len(m) == sum(len(v) for v in m.by_task)
            assert len(m) == sum(len(v) for v in m.by_worker)

    def test_permuted_preserves_content(self):
        m = matrix_ingest([(0, 0, 1), (1, 0, -1), (2, 1, 1)])
        m2 = m.permuted([2, 0, 1])
        assert [(r.task, r.worker, r.label) for r in m2.records] == [
            (2, 1, 1),
            (0, 0, 1),
            (1, 0, -1),
        ]
        assert [r.seq for r in m2.records] == [1, 2, 3]


class TestPrediction:
    def test_tie_flips_are_seeded(self):
        z = np.zeros(6)
        one = prediction_from_log_odds(z, 42)
        two = prediction_from_log_odds(z, 42)
        np.testing.assert_array_equal(one.classes, two.classes)

    def test_tie_flips_are_fair(self):
        shares = [
            prediction_from_log_odds(np.zeros(1), seed).classes[0] for seed in range(400)
        ]
        assert 0.4 < np.mean(np.asarray(shares) > 0) < 0.6

    def test_sign_where_nonzero(self):
        pred = prediction_from_log_odds(np.array([0.3, -2.1]), 0)
        np.testing.assert_array_equal(pred.classes, [1, -1])

    def test_error_count(self):
        pred = Prediction(classes=np.array([1, -1, 1], dtype=np.int8))
        truth = GroundTruth(np.array([1, 1, 1]))
        assert error_count(pred, truth) == 1

    def test_ground_truth_validation(self):
        with pytest.raises(LabelFormatError):
            GroundTruth(np.array([1, 0, -1]))


def test_label_record_validation():
    with pytest.raises(LabelFormatError):
        LabelRecord(0, 0, 3)
    with pytest.raises(LabelFormatError):
        LabelRecord(-1, 0, 1)


def test_matrix_shape_check():
    with pytest.raises(ConfigError):
        LabelMatrix([LabelRecord(5, 0, 1)], num_tasks=3)
