"""CSV ingestion and report-writing tests."""

import numpy as np
import pytest

from sbic import LabelFormatError, Prediction
from sbic.io import (
    align_gold,
    read_gold_csv,
    read_labels_csv,
    write_curve_csv,
    write_predictions_csv,
)
from sbic.simulate import CurvePoint


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


class TestReadLabels:
    def test_basic_interning(self, tmp_path):
        path = write(
            tmp_path / "labels.csv",
            "task,worker,label\nq1,annie,1\nq2,annie,-1\nq1,bert,+1\n",
        )
        m = read_labels_csv(path)
        assert m.task_names == ("q1", "q2")
        assert m.worker_names == ("annie", "bert")
        assert [(r.task, r.worker, r.label) for r in m.records] == [
            (0, 0, 1),
            (1, 0, -1),
            (0, 1, 1),
        ]

    def test_bad_label_reports_line(self, tmp_path):
        path = write(tmp_path / "labels.csv", "task,worker,label\nq1,annie,2\n")
        with pytest.raises(LabelFormatError, match=r":2"):
            read_labels_csv(path)

    def test_bad_column_count_reports_line(self, tmp_path):
        path = write(tmp_path / "labels.csv", "task,worker,label\nq1,annie,1\nq2,bert\n")
        with pytest.raises(LabelFormatError, match=r":3"):
            read_labels_csv(path)

    def test_bad_header_rejected(self, tmp_path):
        path = write(tmp_path / "labels.csv", "item,annotator,vote\nq1,annie,1\n")
        with pytest.raises(LabelFormatError, match="header"):
            read_labels_csv(path)

    def test_header_only_is_empty(self, tmp_path):
        path = write(tmp_path / "labels.csv", "task,worker,label\n")
        m = read_labels_csv(path)
        assert len(m) == 0 and m.num_tasks == 0

    def test_fully_empty_file_is_empty(self, tmp_path):
        path = write(tmp_path / "labels.csv", "")
        assert len(read_labels_csv(path)) == 0

    def test_duplicate_pair_rejected(self, tmp_path):
        path = write(
            tmp_path / "labels.csv", "task,worker,label\nq1,annie,1\nq1,annie,1\n"
        )
        from sbic import DuplicateLabelError

        with pytest.raises(DuplicateLabelError):
            read_labels_csv(path)


class TestGold:
    def test_read_and_align(self, tmp_path):
        labels = write(
            tmp_path / "labels.csv", "task,worker,label\nq1,a,1\nq2,a,-1\nq3,b,1\n"
        )
        gold = write(tmp_path / "gold.csv", "task,label\nq2,-1\nq3,1\nq9,1\n")
        matrix = read_labels_csv(labels)
        parsed = read_gold_csv(gold)
        idx, classes, notes = align_gold(matrix, parsed)
        np.testing.assert_array_equal(idx, [1, 2])
        np.testing.assert_array_equal(classes, [-1, 1])
        assert len(notes) == 1 and "q9" in notes[0]

    def test_duplicate_gold_rejected(self, tmp_path):
        gold = write(tmp_path / "gold.csv", "task,label\nq1,1\nq1,-1\n")
        with pytest.raises(LabelFormatError, match="duplicate"):
            read_gold_csv(gold)


class TestWriters:
    def test_predictions_roundtrip_bytes(self, tmp_path):
        labels = write(tmp_path / "labels.csv", "task,worker,label\nq1,a,1\nq2,a,-1\n")
        matrix = read_labels_csv(labels)
        pred = Prediction(
            classes=np.array([1, -1], dtype=np.int8), log_odds=np.array([0.25, -1.5])
        )
        out1, out2 = tmp_path / "p1.csv", tmp_path / "p2.csv"
        write_predictions_csv(out1, matrix, pred)
        write_predictions_csv(out2, matrix, pred)
        assert out1.read_bytes() == out2.read_bytes()
        lines = out1.read_text().splitlines()
        assert lines[0] == "task,label,log_odds"
        assert lines[1] == "q1,1,0.25"

    def test_predictions_without_log_odds(self, tmp_path):
        labels = write(tmp_path / "labels.csv", "task,worker,label\nq1,a,1\n")
        matrix = read_labels_csv(labels)
        pred = Prediction(classes=np.array([1], dtype=np.int8))
        out = tmp_path / "p.csv"
        write_predictions_csv(out, matrix, pred)
        assert out.read_text().splitlines()[0] == "task,label"

    def test_curve_csv_schema(self, tmp_path):
        points = [CurvePoint(R=10, error_mean=0.125, ci_low=0.1, ci_high=0.15, runs=200)]
        out = tmp_path / "curve.csv"
        write_curve_csv(out, points)
        lines = out.read_text().splitlines()
        assert lines[0] == "R,error_mean,ci_low,ci_high,runs"
        assert lines[1] == "10,0.125,0.1,0.15,200"
