import numpy as np
import pytest

from emwatch.classifiers import (
    ForestSpec,
    MlpSpec,
    SvmSpec,
    decision_scores,
    grid_search_cv,
    load_model,
    model_from_dict,
    model_to_dict,
    predict_scores,
    save_model,
    spec_from_dict,
    spec_to_dict,
    train,
)
from emwatch.classifiers.grids import default_grid, svm_grid
from emwatch.errors import (
    DegenerateData,
    DimensionMismatch,
    ModelFormatError,
    NonFiniteInput,
)
from emwatch.synth import ScenarioSpec, generate_dataset

ALL_SPECS = [
    SvmSpec(C=0.5, kernel="polynomial", degree=2, gamma="auto"),
    SvmSpec(C=1.0, kernel="linear"),
    SvmSpec(C=1.0, kernel="rbf", gamma=0.01),
    ForestSpec(n_trees=20, max_depth=8),
    MlpSpec(hidden_layers=(32,), learning_rate=0.05, epochs=60),
]


def blobs(rng, n_per_class=120, n_classes=2, d=100, sep=2.0, spread=0.3):
    xs, ys = [], []
    for c in range(n_classes):
        x = rng.normal(0.0, spread, (n_per_class, d))
        x[:, c] += sep
        xs.append(x)
        ys.append(np.full(n_per_class, c))
    return np.vstack(xs), np.concatenate(ys).astype(np.int64)


class TestTrain:
    @pytest.mark.parametrize("spec", ALL_SPECS, ids=lambda s: f"{s.family}")
    def test_separable_blobs_high_accuracy(self, spec, rng):
        X, y = blobs(rng)
        model = train(spec, X, y, seed=1)
        preds = np.argmax(predict_scores(model, X), axis=1)
        assert (preds == y).mean() >= 0.99

    @pytest.mark.parametrize("spec", ALL_SPECS, ids=lambda s: f"{s.family}")
    def test_three_class(self, spec, rng):
        X, y = blobs(rng, n_classes=3)
        model = train(spec, X, y, seed=1, n_classes=3)
        preds = np.argmax(predict_scores(model, X), axis=1)
        assert model.n_classes == 3
        assert (preds == y).mean() >= 0.99

    def test_paper_best_svm_config_trains(self, rng):
        # C=0.5, polynomial degree 2, gamma = 1/n_features
        X, y = blobs(rng)
        model = train(SvmSpec(C=0.5, kernel="polynomial", degree=2, gamma="auto"), X, y, seed=0)
        assert model.params[0].gamma == pytest.approx(1.0 / 100)

    @pytest.mark.parametrize("spec", ALL_SPECS, ids=lambda s: f"{s.family}")
    def test_determinism_bit_identical(self, spec, rng):
        X, y = blobs(rng, n_per_class=60)
        a = train(spec, X, y, seed=42)
        b = train(spec, X, y, seed=42)
        assert np.array_equal(predict_scores(a, X), predict_scores(b, X))

    def test_seed_changes_mlp(self, rng):
        X, y = blobs(rng, n_per_class=60)
        spec = MlpSpec(hidden_layers=(16,), epochs=5)
        a = train(spec, X, y, seed=1)
        b = train(spec, X, y, seed=2)
        assert not np.array_equal(predict_scores(a, X), predict_scores(b, X))

    def test_single_class_degenerate(self, rng):
        X = rng.normal(size=(20, 100))
        with pytest.raises(DegenerateData):
            train(SvmSpec(), X, np.zeros(20, dtype=int), seed=0)

    def test_nonfinite_rejected(self, rng):
        X, y = blobs(rng, n_per_class=10)
        X[0, 0] = np.nan
        with pytest.raises(NonFiniteInput):
            train(SvmSpec(), X, y, seed=0)

    def test_bad_spec_rejected(self, rng):
        X, y = blobs(rng, n_per_class=10)
        with pytest.raises(ValueError):
            train(SvmSpec(C=-1.0), X, y, seed=0)


class TestScores:
    def test_forest_scores_are_probability_vector(self, rng):
        X, y = blobs(rng, n_classes=3)
        model = train(ForestSpec(n_trees=15, max_depth=6), X, y, seed=3, n_classes=3)
        scores = predict_scores(model, X)
        assert np.all(scores >= 0.0) and np.all(scores <= 1.0)
        assert np.allclose(scores.sum(axis=1), 1.0)

    def test_binary_svm_argmax_equals_margin_sign(self, rng):
        X, y = blobs(rng)
        model = train(SvmSpec(C=1.0, kernel="linear"), X, y, seed=0)
        margins = model.params[0].margins(X)
        scores = predict_scores(model, X)
        assert np.array_equal(np.argmax(scores, axis=1), (margins > 0).astype(int))

    def test_deep_positive_point_has_positive_margin(self, rng):
        X, y = blobs(rng, sep=4.0)
        model = train(SvmSpec(C=1.0, kernel="linear"), X, y, seed=0)
        deep = np.zeros(100)
        deep[1] = 8.0  # far inside class 1's blob
        assert decision_scores(model, deep)[1] > 0

    @pytest.mark.parametrize("spec", ALL_SPECS, ids=lambda s: f"{s.family}")
    def test_scores_finite(self, spec, rng):
        X, y = blobs(rng, n_per_class=50)
        model = train(spec, X, y, seed=1)
        assert np.all(np.isfinite(predict_scores(model, X)))

    def test_dimension_mismatch(self, rng):
        X, y = blobs(rng, n_per_class=20)
        model = train(SvmSpec(kernel="linear"), X, y, seed=0)
        with pytest.raises(DimensionMismatch):
            decision_scores(model, np.zeros(99))
        with pytest.raises(DimensionMismatch):
            predict_scores(model, np.zeros((5, 99)))


class TestSerialization:
    @pytest.mark.parametrize("spec", ALL_SPECS, ids=lambda s: f"{s.family}")
    def test_roundtrip_identical_scores(self, spec, rng, tmp_path):
        X, y = blobs(rng, n_per_class=40)
        model = train(spec, X, y, seed=7)
        path = tmp_path / "model.json"
        save_model(model, path)
        loaded = load_model(path, expected_n_features=100)
        assert np.array_equal(predict_scores(model, X), predict_scores(loaded, X))
        assert loaded.spec == model.spec
        assert loaded.train_seed == 7

    def test_rejects_wrong_n_features(self, rng, tmp_path):
        X, y = blobs(rng, n_per_class=20)
        model = train(SvmSpec(kernel="linear"), X, y, seed=0)
        path = tmp_path / "model.json"
        save_model(model, path)
        with pytest.raises(ModelFormatError):
            load_model(path, expected_n_features=64)

    def test_rejects_unknown_version(self, rng):
        X, y = blobs(rng, n_per_class=20)
        payload = model_to_dict(train(SvmSpec(kernel="linear"), X, y, seed=0))
        payload["format_version"] = 99
        with pytest.raises(ModelFormatError):
            model_from_dict(payload)

    def test_spec_payload_roundtrip(self):
        for spec in ALL_SPECS:
            assert spec_from_dict(spec_to_dict(spec)) == spec

    def test_spec_unknown_family(self):
        with pytest.raises(ModelFormatError):
            spec_from_dict({"family": "xgboost", "params": {}})


@pytest.fixture(scope="module")
def walking_dataset():
    # contiguous fall seeds alternate tipping direction, so every fold sees both
    specs = [ScenarioSpec(kind="walk", seed=100 + i, noise_px=1.0) for i in range(6)]
    specs += [ScenarioSpec(kind="fall_during_walk", seed=s, noise_px=1.0) for s in range(1, 9)]
    return generate_dataset(specs)


class TestGridSearch:
    def test_single_spec_returned(self, walking_dataset):
        spec = SvmSpec(C=1.0, kernel="linear")
        best, recalls = grid_search_cv([spec], walking_dataset, k=2, seed=0)
        assert best == spec and len(recalls) == 1

    def test_crippled_spec_loses(self, walking_dataset):
        crippled = ForestSpec(n_trees=1, max_depth=1, min_samples_leaf=200)
        strong = ForestSpec(n_trees=20, max_depth=10)
        best, recalls = grid_search_cv([crippled, strong], walking_dataset, k=2, seed=0)
        assert best == strong
        assert recalls[1] > recalls[0]

    def test_deterministic(self, walking_dataset):
        grid = [SvmSpec(C=1.0, kernel="linear"), SvmSpec(C=0.5, kernel="polynomial", degree=2)]
        _, a = grid_search_cv(grid, walking_dataset, k=2, seed=5)
        _, b = grid_search_cv(grid, walking_dataset, k=2, seed=5)
        assert a == b

    def test_empty_grid(self, walking_dataset):
        with pytest.raises(ValueError):
            grid_search_cv([], walking_dataset, k=2, seed=0)


def test_default_grids_have_four_axes():
    assert len(default_grid("forest")) == 16
    assert len(default_grid("mlp")) == 16
    # the combination reported as the strongest configuration must be present
    assert SvmSpec(C=0.5, kernel="polynomial", degree=2, gamma="auto") in svm_grid()
    with pytest.raises(ValueError):
        default_grid("nope")
