import math

import numpy as np
import pytest

import kanfire


def test_basis_matches_cosine_form():
    for x in np.linspace(-1, 1, 11):
        values = kanfire.chebyshev_basis(float(x), 6)
        theta = math.acos(x)
        assert values == pytest.approx([math.cos(k * theta) for k in range(7)], abs=1e-12)


def test_metrics_from_labels():
    truth = np.array([0] * 6322 + [0] * 66 + [1] * 66 + [1] * 3546)
    pred = np.array([0] * 6322 + [1] * 66 + [0] * 66 + [1] * 3546)
    m = kanfire.metrics(truth, pred)
    assert m["confusion_matrix"] == [[6322, 66], [66, 3546]]
    assert round(m["overall_accuracy"], 4) == 0.9868
    assert round(m["kappa"], 4) == 0.9714
    assert round(m["f1_burned"], 4) == 0.9817


def test_hectares():
    assert kanfire.pixels_to_hectares(31536) == pytest.approx(315.36)


def test_morphology_removes_speck_and_labels_components():
    mask = np.zeros((20, 20), dtype=np.uint8)
    mask[4:12, 4:12] = 1
    mask[16, 16] = 1
    opened = kanfire.opening(mask)
    assert opened.sum() == 64
    assert kanfire.closing(opened).sum() == 64
    labels, sizes = kanfire.connected_components(mask)
    assert sizes == [64, 1]
    assert labels.shape == (20, 20)


def test_train_separable_data_and_round_trip(tmp_path):
    rng = np.random.default_rng(3)
    x = np.vstack([rng.normal(0, 0.5, (300, 4)), rng.normal(2, 0.5, (300, 4))])
    y = np.array([0] * 300 + [1] * 300, dtype=np.int32)
    model, best_epoch, epochs_run = kanfire.train(x, y, seed=5, hidden=[8], epochs=20, batch_size=64)
    assert model.layer_dims == [4, 8, 2]
    assert 1 <= best_epoch <= epochs_run <= 20
    pred = np.array(model.predict(x))
    assert (pred == y).mean() > 0.95

    path = tmp_path / "m.ckan"
    model.save(path)
    back = kanfire.Model.load(path)
    assert np.array_equal(back.logits(x), model.logits(x))


def test_errors_map_to_python_exceptions(tmp_path):
    with pytest.raises(kanfire.KanfireError):
        kanfire.Model.load(tmp_path / "missing.ckan")
    with pytest.raises(kanfire.InvalidArgument):
        kanfire.opening(np.zeros((3, 3), dtype=np.uint8), element="hex")
