import numpy as np
import pytest

from csiwater.csi import ClassLabel
from csiwater.learn import (
    LstmConfig,
    adaboost_train,
    knn_train,
    load_model,
    lstm_train,
    predict_batch,
    save_model,
    svm_train,
)


@pytest.fixture
def training_data():
    rng = np.random.default_rng(0)
    X = np.vstack([rng.normal(-1, 1, (15, 6)), rng.normal(1, 1, (15, 6))])
    y = [ClassLabel.CLEAN] * 15 + [ClassLabel.TOXIC_1000PPM] * 15
    queries = rng.normal(size=(10, 6))
    return X, y, queries


def roundtrip(model, tmp_path):
    path = tmp_path / "model.npz"
    save_model(model, path)
    return load_model(path)


@pytest.mark.parametrize("family", ["knn", "svm", "adaboost", "lstm"])
def test_bit_exact_roundtrip(family, training_data, tmp_path):
    X, y, queries = training_data
    if family == "knn":
        model = knn_train(X, y, k=3, metric="correlation")
    elif family == "svm":
        model = svm_train(X, y, kernel="rbf", gamma=0.2, C=2.0)
    elif family == "adaboost":
        model = adaboost_train(X, y, n_learners=8, max_splits=3, learn_rate=0.5)
    else:
        cfg = LstmConfig(hidden1=4, hidden2=3, batch_size=10, max_epochs=2, seed=5)
        model = lstm_train(X, y, cfg=cfg)

    back = roundtrip(model, tmp_path)
    assert back.classes == model.classes
    labels_a, scores_a = predict_batch(model, queries)
    labels_b, scores_b = predict_batch(back, queries)
    assert labels_a == labels_b
    np.testing.assert_array_equal(scores_a, scores_b)  # bit exact


def test_generic_string_classes_roundtrip(tmp_path):
    rng = np.random.default_rng(1)
    X = rng.normal(size=(12, 4))
    y = ["up", "down"] * 6
    model = knn_train(X, y, k=1, metric="euclidean")
    back = roundtrip(model, tmp_path)
    assert back.classes == ("down", "up")  # inferred classes sort


def test_lstm_roundtrip_preserves_config(tmp_path):
    rng = np.random.default_rng(2)
    X = rng.normal(size=(20, 8))
    y = list((X[:, 0] > 0).astype(int))
    cfg = LstmConfig(hidden1=4, hidden2=3, dropout=0.25, batch_size=10,
                     max_epochs=2, seed=9, lr_drop_factor=0.5)
    model = lstm_train(X, y, cfg=cfg)
    back = roundtrip(model, tmp_path)
    assert back.cfg == cfg
    np.testing.assert_array_equal(back.norm_mean, model.norm_mean)
    np.testing.assert_array_equal(back.norm_std, model.norm_std)
