"""Offline training, online prediction, and model serialization."""

import json

import numpy as np
import pytest

from cag.dataset import ClusteredDataset, LabeledDataset
from cag.errors import (
    ConvergenceFailure,
    InvalidParameter,
    IoError,
    ParseError,
    VersionMismatch,
)
from cag.gpr import OptimizerConfig
from cag.pipeline import (
    MODEL_FORMAT,
    MODEL_VERSION,
    TrainConfig,
    load_model,
    model_from_document,
    model_to_document,
    offline_train,
    online_predict,
    save_model,
    train_uniform_baseline,
)
from cag.sampling import SamplingConfig, uniform_grid
from cag.solvers import Solver, label_samples, wavelet_solver

FAST_OPT = OptimizerConfig(max_iter=60, restarts=2)


def two_pattern_solver() -> Solver:
    """Fields that switch shape at chi = 0: a stand-in for a solver whose
    response regimes differ qualitatively across the parameter range."""
    t = np.linspace(0.0, 1.0, 8)

    def evaluate(chi):
        if chi < 0.0:
            return (2.0 + chi) * np.cos(np.pi * t)
        return 5.0 + 3.0 * (1.0 + chi) * np.sin(np.pi * t)

    return Solver("two-pattern", evaluate)


@pytest.fixture(scope="module")
def two_pattern_model():
    cfg = TrainConfig(
        SamplingConfig(-2.0, 2.0, m0=12, k=2, q_min=4, seed=0),
        r=4,
        optimizer=FAST_OPT,
    )
    return offline_train(cfg, solver=two_pattern_solver())


def test_train_config_validation():
    sampling = SamplingConfig(0.0, 1.0)
    with pytest.raises(InvalidParameter):
        TrainConfig(sampling, r=0)
    with pytest.raises(InvalidParameter):
        TrainConfig(sampling, n_neighbors=0)


def test_offline_train_requires_one_source():
    cfg = TrainConfig(SamplingConfig(0.0, 1.0), optimizer=FAST_OPT)
    with pytest.raises(InvalidParameter):
        offline_train(cfg)
    ds = label_samples(wavelet_solver(), np.linspace(0, 1, 6))
    with pytest.raises(InvalidParameter):
        offline_train(cfg, solver=wavelet_solver(), dataset=ds)


def test_trained_model_structure(two_pattern_model):
    model = two_pattern_model
    assert model.field_length == 8
    assert model.k == 2
    assert [sub.cluster for sub in model.subs] == [1, 2]
    for sub in model.subs:
        assert sub.basis.n == 8
        assert sub.gp.r == sub.basis.r_eff <= 4
    with pytest.raises(InvalidParameter):
        model.sub(3)


def test_provenance_records_the_run(two_pattern_model):
    prov = two_pattern_model.provenance
    assert prov["solver"] == "two-pattern"
    assert prov["k"] == 2
    assert prov["m"] == sum(prov["cluster_sizes"])
    assert prov["config"]["chi_min"] == -2.0
    assert prov["config"]["r"] == 4
    assert prov["history"]  # adaptive rounds are kept for reporting


def test_clusters_recover_the_pattern_boundary(two_pattern_model):
    # every cluster must live entirely on one side of chi = 0
    ranges = two_pattern_model.provenance["cluster_ranges"]
    sides = set()
    for spans in ranges.values():
        for lo, hi in spans:
            assert (lo < 0 and hi < 0) or (lo >= 0 and hi >= 0)
            sides.add(lo < 0)
    assert sides == {True, False}


def test_classifier_splits_at_the_boundary(two_pattern_model):
    clf = two_pattern_model.classifier
    left = clf.classify(-1.0)
    right = clf.classify(1.0)
    assert left != right
    assert clf.classify(-1.7) == left
    assert clf.classify(0.3) == right


def test_online_predict_accuracy_and_order(two_pattern_model):
    solver = two_pattern_solver()
    queries = np.array([1.3, -1.1, 0.4, -0.6])  # deliberately unsorted
    pred = online_predict(two_pattern_model, queries)
    assert pred.fields.shape == (8, 4)
    np.testing.assert_array_equal(pred.inputs, queries)
    assert pred.latent_variance.shape == (4,)
    assert np.all(pred.latent_variance >= 0)
    assert pred.field_variance is None
    for j, chi in enumerate(queries):
        truth = solver(chi)
        scale = np.abs(truth).max()
        assert np.abs(pred.fields[:, j] - truth).max() < 1e-3 * scale


def test_separate_models_beat_one_global_fit():
    # a single uniform-grid surrogate must bridge the jump at chi = 0, so the
    # pattern-aware model wins at the same sample budget
    solver = two_pattern_solver()
    cfg = TrainConfig(
        SamplingConfig(-2.0, 2.0, m0=12, k=2, q_min=4, seed=0),
        r=4,
        optimizer=FAST_OPT,
    )
    cag = offline_train(cfg, solver=solver)
    budget = cag.provenance["m"]
    uniform = train_uniform_baseline(
        solver, -2.0, 2.0, budget, r=4, optimizer=FAST_OPT
    )
    # stay half a sample gap away from the switch: classification there is
    # genuinely ambiguous and either answer is defensible
    grid = np.linspace(-1.9, 1.9, 101)
    grid = grid[np.abs(grid) > 0.25]
    truth = np.column_stack([solver(chi) for chi in grid])
    err_cag = np.abs(online_predict(cag, grid).fields - truth).max()
    err_uni = np.abs(online_predict(uniform, grid).fields - truth).max()
    assert err_cag < 1e-3
    assert err_cag < 1e-2 * err_uni


def test_field_variance_diagonal(two_pattern_model):
    pred = online_predict(two_pattern_model, [0.5, -0.5], field_variance=True)
    assert pred.field_variance.shape == (8, 2)
    assert np.all(pred.field_variance >= 0)
    for j in range(2):
        sub = two_pattern_model.sub(int(pred.clusters[j]))
        gain = (sub.basis.basis**2).sum(axis=1)
        np.testing.assert_allclose(
            pred.field_variance[:, j], gain * pred.latent_variance[j], rtol=1e-12
        )


def test_online_predict_validation(two_pattern_model):
    with pytest.raises(InvalidParameter):
        online_predict(two_pattern_model, [[0.1, 0.2]])
    with pytest.raises(InvalidParameter):
        online_predict(two_pattern_model, [np.inf])
    empty = online_predict(two_pattern_model, [])
    assert empty.fields.shape == (8, 0)


def test_train_from_plain_dataset_clusters_first():
    solver = two_pattern_solver()
    ds = label_samples(solver, np.linspace(-2, 2, 16))
    cfg = TrainConfig(
        SamplingConfig(-2.0, 2.0, k=2, q_min=4, seed=1), r=3, optimizer=FAST_OPT
    )
    model = offline_train(cfg, dataset=ds)
    assert model.k == 2
    assert model.provenance["solver"] is None
    assert model.provenance["m"] == 16


def test_train_from_clustered_dataset_respects_labels():
    inputs = np.linspace(0, 1, 8)
    outputs = np.vstack([np.sin(inputs), np.cos(inputs)])
    cds = ClusteredDataset(
        inputs, outputs, labels=np.array([1, 1, 1, 1, 2, 2, 2, 2]), k=2
    )
    cfg = TrainConfig(
        SamplingConfig(0.0, 1.0, k=2, q_min=4), r=2, optimizer=FAST_OPT
    )
    model = offline_train(cfg, dataset=cds)
    assert model.provenance["cluster_sizes"] == [4, 4]


def test_train_refuses_deficient_clusters():
    inputs = np.linspace(0, 1, 6)
    outputs = np.vstack([np.sin(inputs)])
    cds = ClusteredDataset(
        inputs, outputs, labels=np.array([1, 1, 1, 1, 1, 2]), k=2
    )
    cfg = TrainConfig(
        SamplingConfig(0.0, 1.0, k=2, q_min=4), r=1, optimizer=FAST_OPT
    )
    with pytest.raises(ConvergenceFailure, match="q_min=4"):
        offline_train(cfg, dataset=cds)
    with pytest.raises(InvalidParameter):
        offline_train(cfg, dataset=LabeledDataset(np.zeros(0), np.zeros((1, 0))))


def test_uniform_baseline_is_single_cluster():
    model = train_uniform_baseline(
        wavelet_solver(), -2.0, 2.0, 10, r=5, optimizer=FAST_OPT
    )
    assert model.k == 1
    assert [sub.cluster for sub in model.subs] == [1]
    np.testing.assert_allclose(
        model.classifier.x, uniform_grid(-2.0, 2.0, 10), atol=1e-15
    )
    pred = online_predict(model, [0.0, 1.0])
    assert np.array_equal(pred.clusters, [1, 1])


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def test_save_load_predictions_identical(two_pattern_model, tmp_path):
    path = tmp_path / "model.json"
    save_model(two_pattern_model, path)
    back = load_model(path)
    queries = np.linspace(-1.9, 1.9, 41)
    a = online_predict(two_pattern_model, queries)
    b = online_predict(back, queries)
    np.testing.assert_array_equal(a.fields, b.fields)
    np.testing.assert_array_equal(a.latent_variance, b.latent_variance)
    np.testing.assert_array_equal(a.clusters, b.clusters)
    assert back.provenance == json.loads(json.dumps(two_pattern_model.provenance))


def test_document_round_trip_preserves_structure(two_pattern_model):
    doc = model_to_document(two_pattern_model)
    assert doc["format"] == MODEL_FORMAT
    assert doc["version"] == MODEL_VERSION
    # documents survive a JSON round trip (pure built-in types)
    back = model_from_document(json.loads(json.dumps(doc)))
    assert back.k == two_pattern_model.k
    assert back.field_length == two_pattern_model.field_length


def test_load_rejects_wrong_format_and_version(two_pattern_model, tmp_path):
    doc = model_to_document(two_pattern_model)
    bad = dict(doc, version=MODEL_VERSION + 1)
    with pytest.raises(VersionMismatch):
        model_from_document(bad)
    with pytest.raises(ParseError):
        model_from_document({"format": "something-else"})
    with pytest.raises(ParseError):
        model_from_document([1, 2, 3])
    missing = dict(doc)
    del missing["clusters"]
    with pytest.raises(ParseError):
        model_from_document(missing)
    path = tmp_path / "garbage.json"
    path.write_text("{not json")
    with pytest.raises(ParseError):
        load_model(path)
    with pytest.raises(IoError):
        load_model(tmp_path / "absent.json")


def test_corrupted_payload_rejected(two_pattern_model):
    doc = json.loads(json.dumps(model_to_document(two_pattern_model)))
    doc["clusters"][0]["basis"]["data"] = "@@@not-base64@@@"
    with pytest.raises(ParseError):
        model_from_document(doc)
