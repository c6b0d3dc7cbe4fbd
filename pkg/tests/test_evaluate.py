import csv

import numpy as np
import pytest

from graphshapley import ExplainOptions, Explanation, TargetNotInMotif
from graphshapley.datasets import GroundTruth
from graphshapley.evaluate import (explain_targets, motif_accuracy,
                                   noise_inclusion, write_accuracy_csv,
                                   write_histogram_csv, write_timing_csv)


def fake_explanation(target, phi_nodes, phi_features=None):
    return Explanation(base_value=0.1, phi_features=phi_features or {},
                       phi_nodes=phi_nodes, predicted_class=1,
                       full_prediction=0.9, isolated_prediction=0.5,
                       r_squared=0.99, num_samples=10, target=target)


def test_motif_accuracy_hand_case():
    truth = GroundTruth({10: (10, 11, 12, 13, 14), 11: (10, 11, 12, 13, 14)}, 5)
    # v=10: top-4 nodes hit 3 of the 4 motif peers
    e1 = fake_explanation(10, {11: 0.9, 12: 0.8, 5: 0.7, 13: 0.6, 14: 0.1})
    # v=11: top-4 hit all 4
    e2 = fake_explanation(11, {10: 0.9, 12: 0.8, 13: 0.7, 14: 0.6, 5: 0.1})
    report = motif_accuracy([e1, e2], truth)
    assert report.k == 4 and report.num_targets == 2
    assert report.hits == 7
    assert report.accuracy == pytest.approx(7 / 8)
    assert report.per_node == {10: 3, 11: 4}


def test_motif_accuracy_rejects_foreign_target():
    truth = GroundTruth({10: (10, 11)}, 2)
    with pytest.raises(TargetNotInMotif):
        motif_accuracy([fake_explanation(99, {1: 0.5})], truth)


def test_noise_inclusion_histogram():
    e1 = fake_explanation(0, {}, {0: 0.9, 1: 0.8, 50: 0.7})
    e2 = fake_explanation(1, {}, {50: 0.9, 51: 0.8, 2: 0.7})
    out = noise_inclusion([e1, e2], noisy_ids={50, 51}, k=3)
    assert out["histogram"] == {0: 0, 1: 1, 2: 1, 3: 0}
    assert out["mean"] == pytest.approx(1.5)
    with pytest.raises(ValueError):
        noise_inclusion([e1], {50}, k=0)


def test_explain_targets_parallel_matches_serial(trained_shapes):
    g, truth, model = trained_shapes
    targets = sorted(truth.motif_nodes)[:3]
    opts = ExplainOptions(num_samples=120, seed=0)
    serial = explain_targets(g, model, targets, opts, jobs=1)
    parallel = explain_targets(g, model, targets, opts, jobs=3)
    for a, b in zip(serial, parallel):
        assert a.target == b.target
        assert a.phi_nodes == b.phi_nodes


def test_csv_writers(tmp_path):
    acc = tmp_path / "a.csv"
    write_accuracy_csv(str(acc), [{"strategy": "random", "dataset": "d",
                                   "P": 100, "accuracy": "0.5"}])
    rows = list(csv.DictReader(open(acc)))
    assert rows[0]["strategy"] == "random" and rows[0]["accuracy"] == "0.5"

    hist = tmp_path / "h.csv"
    write_histogram_csv(str(hist), {0: 5, 1: 2})
    lines = open(hist).read().splitlines()
    assert lines[0] == "bucket,count" and lines[1] == "0,5"

    tim = tmp_path / "t.csv"
    write_timing_csv(str(tim), {100: 0.25})
    lines = open(tim).read().splitlines()
    assert lines[0] == "P,seconds" and lines[1].startswith("100,0.25")


def test_report_figures(tmp_path):
    from graphshapley import reports
    reports.plot_histogram({0: 3, 1: 1}, str(tmp_path / "h.png"))
    reports.plot_ablation({"random": 0.5, "smarterseparate": 0.9},
                          str(tmp_path / "a.png"))
    reports.plot_timing({100: 0.1, 400: 0.5}, str(tmp_path / "t.png"))
    reports.plot_explanation({1: 0.5, 2: -0.2}, {0: 0.1},
                             str(tmp_path / "e.png"))
    for name in ("h.png", "a.png", "t.png", "e.png"):
        data = (tmp_path / name).read_bytes()
        assert data[:8] == b"\x89PNG\r\n\x1a\n"
