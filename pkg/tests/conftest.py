import numpy as np
import pytest

from sbic import LabelMatrix, LabelRecord, Prior


def random_instance(rng, max_tasks=4, max_workers=4, max_labels_per_worker=3):
    """Small random label stream with no duplicate (task, worker) pairs."""
    num_tasks = int(rng.integers(1, max_tasks + 1))
    num_workers = int(rng.integers(1, max_workers + 1))
    cap = min(max_labels_per_worker, num_tasks)
    records = []
    for worker in range(num_workers):
        count = int(rng.integers(1, cap + 1))
        for task in rng.permutation(num_tasks)[:count]:
            records.append((int(task), worker, int(rng.choice([-1, 1]))))
    rng.shuffle(records)
    stream = [LabelRecord(t, w, x, seq=k + 1) for k, (t, w, x) in enumerate(records)]
    return LabelMatrix(stream, num_tasks=num_tasks, num_workers=num_workers)


@pytest.fixture
def prior43():
    return Prior(4.0, 3.0, 0.5)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
