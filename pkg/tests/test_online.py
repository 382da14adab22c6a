"""Online adapter and offline-runner registry tests."""

import numpy as np
import pytest

from sbic import ConfigError, Prior
from sbic.model import LabelMatrix
from sbic.online import ALGORITHMS, make_online, run_offline

from conftest import random_instance


@pytest.mark.parametrize("algo", [a for a in ALGORITHMS if a != "gibbs"])
def test_online_matches_offline_finish(algo, prior43, rng):
    """Streaming a dataset through the adapter finishes like the offline runner."""
    matrix = random_instance(rng, max_tasks=5, max_workers=5, max_labels_per_worker=4)
    adapter = make_online(algo, prior43, matrix.num_tasks, seed=3, options={})
    for r in matrix.records:
        adapter.observe(r.task, r.worker, r.label)
    online = adapter.finish(matrix, tie_seed=7)
    if algo in ("amf", "em", "maj", "kos", "fast-sbic", "sorted-sbic"):
        offline = run_offline(algo, matrix, prior43, seed=7, options={})
        np.testing.assert_array_equal(online.classes, offline.classes)


@pytest.mark.parametrize("algo", [a for a in ALGORITHMS if a != "gibbs"])
def test_uncertainty_shape_and_range(algo, prior43, rng):
    matrix = random_instance(rng, max_tasks=4, max_workers=4, max_labels_per_worker=3)
    adapter = make_online(algo, prior43, matrix.num_tasks, seed=5, options={})
    for r in matrix.records:
        adapter.observe(r.task, r.worker, r.label)
    scores = adapter.uncertainty()
    assert scores.shape == (matrix.num_tasks,)
    assert np.all(np.isfinite(scores))
    if algo not in ("maj", "kos"):  # those two report magnitudes, not probabilities
        assert np.all((scores >= 0.5 - 1e-12) & (scores <= 1.0 + 1e-12))
    else:
        assert np.all(scores >= 0.0)


def test_gibbs_has_no_online_adapter(prior43):
    with pytest.raises(ConfigError, match="online"):
        make_online("gibbs", prior43, 4, seed=0, options={})


def test_unknown_algorithm_rejected(prior43):
    with pytest.raises(ConfigError):
        make_online("te", prior43, 4, seed=0, options={})
    with pytest.raises(ConfigError):
        run_offline("te", LabelMatrix([], num_tasks=1, num_workers=1), prior43, 0)


def test_fresh_adapters_report_flat_scores(prior43):
    for algo in ("fast-sbic", "sorted-sbic", "amf"):
        adapter = make_online(algo, prior43, 3, seed=1, options={})
        np.testing.assert_allclose(adapter.uncertainty(), 0.5, atol=1e-12)
    maj = make_online("maj", prior43, 3, seed=1, options={})
    np.testing.assert_array_equal(maj.uncertainty(), np.zeros(3))
