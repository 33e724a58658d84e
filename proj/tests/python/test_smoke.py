import json
import os
from pathlib import Path

import numpy as np
import pytest

import dpgnet

FIXTURES = Path(os.environ.get("DPG_FIXTURES", Path(__file__).parents[1] / "fixtures"))

SMALL = {
    "classes": 3,
    "input_size": 32,
    "base_width": 2,
    "fc1_width": 16,
    "n_drdb": 1,
    "epochs": 2,
    "batch_size": 3,
    "chip_size": 32,
    "seed": 5,
}


def test_default_param_count_near_reference():
    n = dpgnet.param_count()
    assert n == 18085014
    assert abs(n - 17961536) / 17961536 < 0.02
    budget = dict(dpgnet.parameter_budget())
    assert sum(budget.values()) == n


def test_config_round_trip_and_strictness():
    c = dpgnet.default_config()
    assert dpgnet.normalize_config(c) == c
    with pytest.raises(dpgnet.ConfigError):
        dpgnet.param_count({"n_drbd": 3})
    with pytest.raises(ValueError):
        dpgnet.param_count({"input_size": 200})


def test_guided_triple_is_normalized():
    rng = np.random.default_rng(0)
    svh = (rng.normal(size=(40, 40)) + 1j * rng.normal(size=(40, 40))).astype(np.complex64)
    svv = 3 * svh + 0.5
    triple = dpgnet.guided_triple(svh, svv, 32)
    for img in triple:
        assert img.shape == (32, 32)
        assert img.max() <= 1.0 + 1e-6
        assert img.min() >= 0.0
    with pytest.raises(ValueError):
        dpgnet.guided_triple(svh, svv[:10], 32)


def test_fixture_predictions_give_reported_accuracy(tmp_path):
    r = dpgnet.evaluate(
        out=tmp_path,
        predictions=FIXTURES / "six_category_predictions.jsonl",
        classes=FIXTURES / "six_category_classes.json",
    )
    assert r["percent"] == "58.68"
    assert sum(map(sum, r["counts"])) == 1486


def test_synth_train_evaluate_round_trip(tmp_path):
    s = dpgnet.synth(tmp_path / "data", classes=3, per_class=4, config=SMALL)
    assert (s["chips"], s["train"], s["test"]) == (12, 6, 6)
    t = dpgnet.train(tmp_path / "data" / "train.jsonl", tmp_path / "run", config=SMALL)
    assert t["steps"] == 4
    assert all(np.isfinite(t["losses"]))
    r = dpgnet.evaluate(
        tmp_path / "data" / "train.jsonl",
        out=tmp_path / "eval",
        weights=tmp_path / "run" / "weights.dpgw",
        config=SMALL,
    )
    assert r["accuracy"] == pytest.approx(t["train_accuracy"])
    saved = json.loads((tmp_path / "run" / "config.json").read_text())
    assert saved == dpgnet.normalize_config(SMALL)


def test_ablate_n_drdb_rows(tmp_path):
    csv = dpgnet.ablate("n_drdb", out=tmp_path, config=SMALL)
    assert len(csv.strip().splitlines()) == 6
    assert "n_drdb" in dpgnet.ablation_axes
    with pytest.raises(dpgnet.ConfigError):
        dpgnet.ablate("depth", out=tmp_path, config=SMALL)
