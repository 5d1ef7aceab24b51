import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from atml_ml.datasets import RegistryError
from atml_ml.models import (
    ModelKind,
    ModelRegistry,
    ModelSpec,
    NonDifferentiableError,
    TrainedModel,
    TrainingError,
    cross_entropy,
    input_gradient,
    parse_kind,
    predict,
    read_model_spec,
    sigmoid,
    train,
)
from atml_ml.synthetic import make_blobs

LR = ModelKind.LOGISTIC_REGRESSION


def lr_model(w, b):
    return TrainedModel(ModelSpec("u", LR), (0, 1), weights=np.asarray(w, float), bias=b)


def test_one_dimensional_separable_problem():
    X = np.array([[-1.0], [1.0]])
    y = np.array([0, 1])
    model = train(ModelSpec("u", LR, {"learning_rate": 0.5, "epochs": 200}), X, y)
    assert model.weights[0] > 0
    assert list(model.predict_many(X)) == [0, 1]
    w, b = oracles.gradient_descent_lr(X.tolist(), y.tolist(), 0.5, 200)
    np.testing.assert_allclose(model.weights, w, rtol=1e-12)
    assert model.bias == pytest.approx(b, abs=1e-12)


def test_blobs_match_the_loop_oracle():
    ds = make_blobs(40, seed=3)
    model = train(ModelSpec("u", LR, {"epochs": 50}), ds.features, ds.labels)
    w, b = oracles.gradient_descent_lr(ds.features.tolist(), ds.labels.tolist(), 0.1, 50)
    np.testing.assert_allclose(model.weights, w, rtol=1e-10)
    assert model.bias == pytest.approx(b, abs=1e-10)


def test_knn_memorizes_training_set():
    ds = make_blobs(30, seed=1)
    model = train(ModelSpec("k", ModelKind.KNN, {"k": 1}), ds.features, ds.labels)
    assert np.array_equal(model.predict_many(ds.features), ds.labels)


@pytest.mark.parametrize("labels", [[0, 0, 0], [1, 1, 1], [0, 1, 2]])
def test_logistic_regression_label_checks(labels):
    with pytest.raises(TrainingError):
        train(ModelSpec("u", LR), np.zeros((3, 1)), np.array(labels))


def test_knn_k_larger_than_data():
    with pytest.raises(TrainingError):
        train(ModelSpec("k", ModelKind.KNN, {"k": 5}), np.zeros((3, 1)), np.array([0, 1, 0]))


@pytest.mark.parametrize(
    "hyper",
    [{"learning_rate": 0.0}, {"epochs": 0}, {"epochs": 2.5}],
)
def test_invalid_hyperparameters(hyper):
    with pytest.raises(ValueError):
        ModelSpec("u", LR, hyper)


def test_defaults_are_filled_in():
    spec = ModelSpec("u", LR)
    assert (spec.learning_rate, spec.epochs, spec.k) == (0.1, 500, 3)


def test_predict_examples():
    model = lr_model([1.0, 0.0], 0.0)
    # sigmoid(0.5) is about 0.6225
    assert sigmoid(0.5) == pytest.approx(0.6225, abs=1e-4)
    assert predict(model, [0.5, 0.2]) == 1
    # zero weights give probability exactly 0.5, which counts as class 1
    assert predict(lr_model([0.0, 0.0], 0.0), [3.0, -7.0]) == 1


def test_gradient_example():
    model = lr_model([1.0, 0.0], 0.0)
    grad = input_gradient(model, [0.5, 0.2], 1)
    np.testing.assert_allclose(grad, [-0.3775, 0.0], atol=1e-4)
    fd = oracles.finite_difference_gradient([1.0, 0.0], 0.0, [0.5, 0.2], 1)
    np.testing.assert_allclose(grad, fd, atol=1e-8)


def test_knn_has_no_gradient():
    ds = make_blobs(10, seed=0)
    model = train(ModelSpec("k", ModelKind.KNN), ds.features, ds.labels)
    with pytest.raises(NonDifferentiableError, match="non-differentiable UUT"):
        input_gradient(model, ds.features[0], 1)


def test_width_mismatch():
    with pytest.raises(ValueError):
        predict(lr_model([1.0, 0.0], 0.0), [1.0, 2.0, 3.0])


def test_sigmoid_is_stable():
    assert sigmoid(-1000.0) == 0.0
    assert sigmoid(1000.0) == 1.0
    assert np.isfinite(cross_entropy(np.array([-800.0, 800.0]), np.array([1, 0]))).all()


finite = st.floats(-50, 50, allow_nan=False)


@settings(max_examples=200, deadline=None)
@given(st.lists(finite, min_size=1, max_size=5).flatmap(
    lambda w: st.tuples(st.just(w), st.lists(finite, min_size=len(w), max_size=len(w)))
), st.floats(-5, 5), st.sampled_from([0, 1]))
def test_gradient_matches_closed_form_oracle(wx, b, y):
    w, x = wx
    grad = lr_model(w, b).input_gradient(x, y)
    r = oracles.sigmoid(sum(a * c for a, c in zip(w, x)) + b) - y
    np.testing.assert_allclose(grad, [r * wi for wi in w], rtol=1e-12, atol=1e-300)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 5))
def test_knn_is_order_invariant_and_deterministic(seed, k):
    ds = make_blobs(20, seed=seed)
    rng = np.random.default_rng(seed)
    perm = rng.permutation(ds.n_rows)
    queries = rng.normal(size=(8, 2)) * 4
    spec = ModelSpec("k", ModelKind.KNN, {"k": k})
    a = train(spec, ds.features, ds.labels).predict_many(queries)
    b = train(spec, ds.features[perm], ds.labels[perm]).predict_many(queries)
    c = train(spec, ds.features, ds.labels).predict_many(queries)
    # continuous data: distance ties have probability zero, so order cannot matter
    assert np.array_equal(a, b)
    assert np.array_equal(a, c)


def test_knn_vote_ties_go_to_smaller_label():
    model = train(ModelSpec("k", ModelKind.KNN, {"k": 2}), np.array([[-1.0], [1.0]]), np.array([1, 0]))
    assert model.predict([0.0]) == 0


def test_model_spec_files(tmp_path):
    (tmp_path / "lr.model").write_text("kind=LogisticRegression\nlearning_rate=0.2\nepochs=10\n")
    (tmp_path / "bad.model").write_text("learning_rate=0.2\n")
    (tmp_path / "models.manifest").write_text("UUT_A=lr.model\nUUT_B=bad.model\n")
    reg = ModelRegistry.from_manifest(tmp_path / "models.manifest")
    spec = reg.spec("UUT_A")
    assert spec.kind is LR and spec.learning_rate == 0.2 and spec.epochs == 10
    assert reg.spec("UUT_A", {"epochs": 7}).epochs == 7
    with pytest.raises(RegistryError, match="kind"):
        reg.spec("UUT_B")
    with pytest.raises(RegistryError):
        reg.spec("UUT_MISSING")
    with pytest.raises(RegistryError, match="numeric"):
        (tmp_path / "x.model").write_text("kind=knn\nk=three\n")
        read_model_spec(tmp_path / "x.model", "x")


def test_parse_kind():
    assert parse_kind(" KNN ") is ModelKind.KNN
    with pytest.raises(ValueError):
        parse_kind("svm")
