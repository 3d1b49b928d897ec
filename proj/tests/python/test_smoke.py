import math
import pathlib

import numpy as np
import pytest

import chromabehave as cb


def four_player_game(c):
    a, b, d, e = (bool(c & (1 << i)) for i in range(4))
    return 3 * a + 1.5 * b + 0.5 * d + 2 * (a and b) - (b and d) + 4 * (a and d and e) + 0.25 * e


def test_feature_names():
    assert len(cb.FEATURE_NAMES) == 25
    assert "FPV" in cb.FEATURE_NAMES


def test_file_path_variance_two_siblings():
    assert cb.file_path_variance([("PC1", "/a/f1")]) == 0.0
    assert cb.file_path_variance([("PC1", "/a/f1"), ("PC1", "/a/f2")]) == pytest.approx(8 / 6)


def test_colorfulness_grey_and_red():
    grey = np.full((32, 32, 3), 90, dtype=np.uint8)
    assert cb.colorfulness(grey) == 0.0
    red = np.zeros((32, 32, 3), dtype=np.uint8)
    red[..., 0] = 255
    assert cb.colorfulness(red) == pytest.approx(0.3 * math.hypot(255, 127.5))
    with pytest.raises(ValueError):
        cb.colorfulness(np.zeros((4, 4, 3), dtype=np.uint8))


def test_point_biserial_and_errors():
    assert cb.point_biserial([0, 0, 1, 1], [0, 0, 1, 1]) == pytest.approx(1.0)
    with pytest.raises(cb.ChromabehaveError):
        cb.point_biserial([2, 2, 2], [0, 1, 0])


def test_shapley_exact_and_sampled():
    exact = cb.exact_shapley(four_player_game, 4)
    assert sum(exact) == pytest.approx(four_player_game(15) - four_player_game(0))
    rep = cb.attribute(four_player_game, 4, permutations=200, subsets=256, seed=3)
    for p, e in zip(rep["players"], exact):
        assert p["shapley"] == pytest.approx(e, rel=0.02)


def test_alert_reasons():
    assert cb.alert_reason(0.95) == "malicious"
    assert cb.alert_reason(0.45, 0.4) == "low_confidence"
    assert cb.alert_reason(0.10, 0.4) is None
    assert cb.confidence(0.95) == pytest.approx(0.9)


def test_conical_topic_model():
    docs = ["upload the secret files to wikileaks tonight", "wikileaks will publish the leaked secret memo"]
    words = {"the": 0.05, "to": 0.03, "will": 0.01, "files": 0.001, "tonight": 0.0005}
    model = cb.ConicalModel.fit("leak", docs, words)
    assert model.classify(docs[0])
    assert not model.classify("")


def test_generate_small_corpus(tmp_path: pathlib.Path):
    assert cb.derived_scenario_days(200, 120) == [7, 63, 2]
    summary = cb.generate_corpus(tmp_path / "corpus", n_users=40, n_days=30, seed=3)
    assert summary["users"] == 40
    assert summary["user_days"] == 40 * 30
    assert (tmp_path / "corpus" / "labels.csv").exists()
