import numpy as np
import pytest

from augseq.catalog import build_tf_set
from augseq.endmodel import Classifier, EndModelConfig, evaluate, p_transform_at, tr_term, train_classifier
from augseq.generator import MeanFieldGenerator
from augseq.synthetic import two_blob_task

from conftest import central_diff, rel_err


def test_tr_term_examples():
    assert tr_term([0.3, -1.0], [0.3, -1.0]) == 0.0
    assert tr_term([1.0, 0.0], [0.0, 1.0]) == pytest.approx(np.sqrt(2))
    a, b = np.array([1.0, 2.0, -1.0]), np.array([0.5, 0.0, 3.0])
    assert tr_term(a, b) == tr_term(b, a) >= 0
    with pytest.raises(ValueError):
        tr_term([1.0], [1.0, 2.0])


class Fixed:
    """Stand-in classifier with given logits."""

    def __init__(self, logits):
        self._l = np.asarray(logits, dtype=float)

    def logits(self, X):
        return self._l


def test_evaluate_examples():
    y = np.array([0, 1, 0, 1])
    assert evaluate(Fixed(np.tile([1.0, 0.0], (4, 1))), None, y) == 0.5
    perfect = np.eye(2)[y] * 3.0
    assert evaluate(Fixed(perfect), None, y) == 1.0
    raw = np.random.default_rng(0).normal(size=(4, 2))
    assert evaluate(Fixed(raw), None, y) == evaluate(Fixed(raw * 7.3), None, y)
    assert evaluate(Fixed(np.zeros((4, 2))), None, y) == 0.5  # ties go to class 0
    with pytest.raises(ValueError):
        evaluate(Fixed(np.zeros((0, 2))), None, np.array([]))


def test_classifier_backward_matches_finite_differences():
    rng = np.random.default_rng(1)
    for _ in range(10):
        clf = Classifier(3, 4, 5, rng=rng)
        clf.params["b1"][:] = rng.normal(scale=0.3, size=5)
        X = rng.normal(size=(6, 3))
        pre = X @ clf.params["W1"].T + clf.params["b1"]
        if np.min(np.abs(pre)) < 1e-3:
            continue
        C = rng.normal(size=(6, 4))
        logits, cache = clf.forward(X)
        numeric = central_diff(lambda: float(np.sum(C * clf.logits(X))), clf.theta)
        assert rel_err(clf.backward(cache, C), numeric) <= 1e-4


def test_config_ranges():
    with pytest.raises(ValueError):
        EndModelConfig(p_transform=1.5)
    with pytest.raises(ValueError):
        EndModelConfig(tr_coefficient=-0.1)
    cfg = EndModelConfig()
    assert (cfg.p_transform, cfg.final_clean_epochs, cfg.tr_coefficient, cfg.tr_unlabeled_fraction) == \
        (1.0, 10, 0.1, 0.2)


def test_schedule_last_epochs_clean():
    cfg = EndModelConfig(epochs=40, final_clean_epochs=10)
    assert [p_transform_at(e, cfg) for e in (1, 30, 31, 40)] == [1.0, 1.0, 0.0, 0.0]


def task(seed=0, n=20):
    rng = np.random.default_rng(seed)
    X, y = two_blob_task(rng, n)
    U, _ = two_blob_task(rng, 100)
    return X, y, U


def test_plain_training_path_matches_no_generator():
    X, y, U = task()
    reg = build_tf_set("goodbad", 0)
    cfg = EndModelConfig(p_transform=0.0, tr_coefficient=0.0, epochs=5, final_clean_epochs=0)
    a, sa = train_classifier(X, y, U, MeanFieldGenerator(reg.K), reg, cfg, 2)
    b, sb = train_classifier(X, y, None, None, None, cfg, 2)
    assert np.array_equal(a.theta, b.theta)
    assert all(r["n_transformed"] == 0 for r in sa)


def test_identity_tr_exactly_zero():
    X, y, U = task()
    reg = build_tf_set("identity", dim=2)
    cfg = EndModelConfig(epochs=6, final_clean_epochs=2, tr_coefficient=0.1)
    _, series = train_classifier(X, y, U, MeanFieldGenerator(1), reg, cfg, 2)
    assert all(r["tr_mean"] == 0.0 for r in series)
    # with identity TFs, augmentation and TR change nothing relative to plain training
    plain, _ = train_classifier(X, y, None, None, None, cfg, 2)
    ident, _ = train_classifier(X, y, U, MeanFieldGenerator(1), reg, cfg, 2)
    assert np.array_equal(plain.theta, ident.theta)


def test_schedule_applied_during_training():
    X, y, U = task()
    reg = build_tf_set("goodbad", 0)
    cfg = EndModelConfig(epochs=15, final_clean_epochs=10)
    _, series = train_classifier(X, y, U, MeanFieldGenerator(reg.K), reg, cfg, 2)
    for r in series:
        if r["epoch"] > 5:
            assert r["p_transform"] == 0.0 and r["n_transformed"] == 0 and r["tr_mean"] == 0.0
        else:
            assert r["p_transform"] == 1.0 and r["n_transformed"] == len(X) and r["tr_mean"] > 0.0


def test_labels_unchanged_and_reproducible():
    X, y, U = task()
    y0 = y.copy()
    X0 = X.copy()
    reg = build_tf_set("goodbad", 0)
    cfg = EndModelConfig(epochs=4, final_clean_epochs=1)
    a, sa = train_classifier(X, y, U, MeanFieldGenerator(reg.K), reg, cfg, 2, test=(X, y))
    b, sb = train_classifier(X, y, U, MeanFieldGenerator(reg.K), reg, cfg, 2, test=(X, y))
    assert np.array_equal(y, y0) and np.array_equal(X, X0)
    assert sa == sb and np.array_equal(a.theta, b.theta)
    assert all(0.0 <= r["test_accuracy"] <= 1.0 for r in sa)


def test_empty_labeled_rejected():
    with pytest.raises(ValueError):
        train_classifier(np.zeros((0, 2)), np.zeros(0, dtype=int), None, None, None, EndModelConfig(), 2)
