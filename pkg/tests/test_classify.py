import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from aca.classify import (
    LabeledDataset,
    ThresholdModel,
    evaluate,
    fit_knn,
    fit_threshold,
    leave_one_out,
    load_model,
    predict,
    predict_knn,
    read_dataset_csv,
    save_model,
    write_dataset_csv,
)
from aca.errors import ParameterError


def dataset(X, labels, names=None):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    names = names or [f"f{i}" for i in range(X.shape[1])]
    return LabeledDataset(X, labels, [f"s{i}" for i in range(len(labels))], names)


# -- threshold ----------------------------------------------------------------------------

def test_threshold_separable():
    m = fit_threshold(dataset([1, 2, 10, 11], ["A", "A", "B", "B"]), 0)
    assert m.threshold == 6.0 and m.training_accuracy == 1.0
    assert (m.label_above, m.label_below) == ("B", "A")
    assert predict(m, [5.9]) == "A" and predict(m, [6.1]) == "B"


def test_threshold_uses_strict_inequality():
    m = fit_threshold(dataset([1, 2, 10, 11], ["A", "A", "B", "B"]), 0)
    assert predict(m, [6.0]) == "A"


def test_threshold_interleaved_deterministic():
    d = dataset([1, 2, 3, 4, 5, 6], ["A", "B", "A", "B", "A", "B"])
    a, b = fit_threshold(d, 0), fit_threshold(d, 0)
    assert a == b
    preds = [predict(a, v) for v in d.vectors]
    assert a.training_accuracy == pytest.approx(np.mean(np.array(preds) == np.array(d.labels)))
    # best possible on this layout is 4/6 (split at 5.5 with B above)
    assert a.training_accuracy == pytest.approx(4 / 6)


def test_threshold_picks_requested_dimension():
    d = dataset([[0, 1], [0, 2], [0, 10], [0, 11]], ["A", "A", "B", "B"])
    assert fit_threshold(d, 0).training_accuracy == 0.5
    assert fit_threshold(d, 1).threshold == 6.0


def test_threshold_needs_two_classes():
    with pytest.raises(ParameterError):
        fit_threshold(dataset([1, 2, 3], ["A", "B", "C"]), 0)
    with pytest.raises(ParameterError):
        fit_threshold(dataset([1, 2], ["A", "B"]), 3)


# -- kNN ------------------------------------------------------------------------------------

def test_knn_stores_all_points():
    d = dataset([[0, 0], [1, 1], [5, 5], [6, 6]], ["A", "A", "B", "B"])
    m = fit_knn(d, 3)
    assert len(m) == 4 and m.k == 3


def test_knn_refit_identical():
    d = dataset(np.random.default_rng(0).normal(size=(10, 3)), list("ABABABABAB"))
    a, b = fit_knn(d, 3), fit_knn(d, 3)
    assert np.array_equal(a.vectors, b.vectors) and a.labels == b.labels
    assert np.array_equal(a.normalizer.mean, b.normalizer.mean)


@pytest.mark.parametrize("k", [0, 2, 5, 1.5])
def test_knn_bad_k(k):
    with pytest.raises(ParameterError):
        fit_knn(dataset([1, 2, 3, 4], list("AABB")), k)


def test_knn_zero_distance():
    d = dataset([[0, 0], [1, 0], [0, 1]], ["A", "B", "C"])
    m = fit_knn(d, 1)
    for v, lab in zip(d.vectors, d.labels):
        assert predict_knn(m, v)[0] == lab


def test_knn_majority():
    d = dataset([0.0, 0.1, 0.2, 5.0], ["A", "A", "B", "B"])
    label, votes = predict_knn(fit_knn(d, 3), [0.15])
    assert label == "A" and votes == {"A": 2, "B": 1}


def test_knn_symmetric_tie_breaks_lexicographically():
    d = dataset([-1.0, 1.0], ["B", "A"])
    m = fit_knn(d, 1)
    assert predict_knn(m, [0.0])[0] == "B"  # equal distance: earlier training point
    d3 = dataset([-1.0, 1.0, 0.0], ["B", "A", "C"])
    m3 = fit_knn(d3, 3)
    # all three vote once; C is at the query so it has the largest inverse distance
    assert predict_knn(m3, [0.0])[0] == "C"


def test_knn_full_tie_goes_to_smaller_label():
    d = dataset([-1.0, 1.0, 10.0], ["B", "A", "C"])
    # with k=3 every class has one vote; A and B are equidistant, C is farther
    assert predict_knn(fit_knn(d, 3), [0.0])[0] == "A"


def test_knn_wrong_vector_length():
    with pytest.raises(ParameterError):
        predict_knn(fit_knn(dataset([[0, 0], [1, 1]], list("AB")), 1), [1.0])


# -- evaluation --------------------------------------------------------------------------------

def test_evaluate_example():
    m = ThresholdModel(0, 0.5, "B", "A")
    r = evaluate(m, dataset([0, 0, 1, 1, 0.0], ["A", "A", "B", "B", "B"]))
    assert r["accuracy"] == pytest.approx(0.8)
    assert r["labels"] == ["A", "B"]
    assert r["confusion_matrix"] == [[2, 0], [1, 2]]
    assert r["per_class"]["A"]["precision"] == pytest.approx(2 / 3)
    assert r["per_class"]["B"]["recall"] == pytest.approx(2 / 3)
    assert r["per_class"]["B"]["precision"] == 1.0


def test_evaluate_empty():
    with pytest.raises(ParameterError):
        evaluate(ThresholdModel(0, 0.5, "B", "A"), dataset(np.zeros((0, 1)), []))


def test_leave_one_out_separable():
    rng = np.random.default_rng(1)
    X = np.vstack([rng.normal(0, 0.1, (5, 2)), rng.normal(3, 0.1, (5, 2))])
    r = leave_one_out(dataset(X, ["A"] * 5 + ["B"] * 5), 1)
    assert r["accuracy"] == 1.0


small_sets = st.integers(4, 12).flatmap(lambda n: st.tuples(
    st.lists(st.lists(st.floats(-100, 100, allow_nan=False), min_size=2, max_size=2), min_size=n, max_size=n),
    st.lists(st.sampled_from("AB"), min_size=n, max_size=n),
))


@settings(max_examples=60, deadline=None)
@given(small_sets, st.floats(0.1, 10), st.floats(-50, 50))
def test_knn_affine_invariance(data, scale, shift):
    X, labels = np.array(data[0]), data[1]
    q = X.mean(axis=0) + 0.37
    base = predict_knn(fit_knn(dataset(X, labels), 1), q)[0]
    moved = predict_knn(fit_knn(dataset(X * scale + shift, labels), 1), q * scale + shift)[0]
    # scaling and shifting every dimension alike leaves z-scored distances unchanged up to rounding
    Xn = (X - X.mean(0)) / np.where(X.std(0) > 0, X.std(0), 1)
    qn = (q - X.mean(0)) / np.where(X.std(0) > 0, X.std(0), 1)
    d = np.sort(np.linalg.norm(Xn - qn, axis=1))
    if len(d) > 1 and d[1] - d[0] > 1e-6 and np.all(X.std(0) > 1e-6):
        assert base == moved


@settings(max_examples=60, deadline=None)
@given(small_sets)
def test_threshold_beats_majority_prior(data):
    X, labels = np.array(data[0]), data[1]
    if len(set(labels)) < 2:
        return
    m = fit_threshold(dataset(X, labels), 0)
    prior = max(labels.count("A"), labels.count("B")) / len(labels)
    assert m.training_accuracy >= prior - 1e-12
    r = evaluate(m, dataset(X, labels))
    assert r["accuracy"] == pytest.approx(m.training_accuracy)


@settings(max_examples=60, deadline=None)
@given(small_sets)
def test_confusion_rows_sum_to_support(data):
    X, labels = np.array(data[0]), data[1]
    d = dataset(X, labels)
    r = evaluate(fit_knn(d, 1), d)
    cm = np.array(r["confusion_matrix"])
    assert cm.sum() == len(labels)
    for i, lab in enumerate(r["labels"]):
        assert cm[i].sum() == labels.count(lab) == r["per_class"][lab]["support"]


# -- persistence ---------------------------------------------------------------------------------

def test_csv_round_trip(tmp_path):
    d = dataset(np.random.default_rng(2).normal(size=(5, 3)), list("ABABA"), ["x", "y", "z"])
    write_dataset_csv(d, tmp_path / "d.csv")
    back = read_dataset_csv(tmp_path / "d.csv")
    assert np.array_equal(back.vectors, d.vectors)
    assert back.labels == d.labels and back.sources == d.sources and back.feature_names == d.feature_names


def test_csv_bad_header(tmp_path):
    (tmp_path / "d.csv").write_text("a,b,c\n1,2,3\n")
    with pytest.raises(ParameterError):
        read_dataset_csv(tmp_path / "d.csv")


def test_model_round_trip(tmp_path):
    d = dataset(np.random.default_rng(3).normal(size=(7, 2)), list("AABBABA"))
    for model in (fit_knn(d, 3), fit_threshold(d, 1)):
        save_model(model, tmp_path / "m.json")
        back = load_model(tmp_path / "m.json")
        assert type(back) is type(model)
        for v in np.random.default_rng(4).normal(size=(20, 2)):
            assert predict(back, v) == predict(model, v)


def test_model_wrong_format(tmp_path):
    (tmp_path / "m.json").write_text(json.dumps({"format": "other"}))
    with pytest.raises(ParameterError):
        load_model(tmp_path / "m.json")
    (tmp_path / "m.json").write_text(json.dumps({"format": "aca-model", "version": 9}))
    with pytest.raises(ParameterError):
        load_model(tmp_path / "m.json")
