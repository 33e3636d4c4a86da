import numpy as np
import pytest

from visact.annotation import NOT_VISIBLE_OR_NOT_ACTION, VISIBLE
from visact.baselines import (
    LinearModel,
    ThresholdModel,
    load_model,
    object_match_score,
    save_model,
    train_linear,
    tune_threshold,
)
from visact.errors import DimMismatch, EmptyValidation
from visact.features import EmbeddingTable
from visact.synthetic import make_blob_data

CONCRETENESS_GRID = [round(3.0 + 0.05 * k, 2) for k in range(41)]  # 3.00 .. 5.00


def exhaustive_best_theta(scores, labels, grid):
    """Independent oracle: try every grid point, smallest theta wins ties."""
    best = None
    for theta in sorted(grid):
        acc = sum(
            ((s is not None and s >= theta) and y == VISIBLE)
            or (not (s is not None and s >= theta) and y != VISIBLE)
            for s, y in zip(scores, labels)
        ) / len(labels)
        if best is None or acc > best[1]:
            best = (theta, acc)
    return best[0]


class TestTuneThreshold:
    def test_separated_scores(self):
        scores = [3.9, 4.1]
        labels = [NOT_VISIBLE_OR_NOT_ACTION, VISIBLE]
        oracle = exhaustive_best_theta(scores, labels, CONCRETENESS_GRID)
        assert oracle == pytest.approx(3.95)
        assert tune_threshold(scores, labels, CONCRETENESS_GRID) == pytest.approx(3.95)

    def test_all_visible_picks_grid_minimum(self):
        scores = [3.2, 4.0, 4.8]
        labels = [VISIBLE] * 3
        assert tune_threshold(scores, labels, CONCRETENESS_GRID) == pytest.approx(3.0)

    def test_absent_scores_predicted_negative(self):
        scores = [None, 4.5]
        labels = [NOT_VISIBLE_OR_NOT_ACTION, VISIBLE]
        theta = tune_threshold(scores, labels, CONCRETENESS_GRID)
        model = ThresholdModel(theta)
        assert model.predict(None) == NOT_VISIBLE_OR_NOT_ACTION
        assert model.predict(4.5) == VISIBLE

    def test_matches_oracle_on_random_data(self):
        rng = np.random.default_rng(31)
        for _ in range(20):
            n = int(rng.integers(3, 30))
            scores = [float(s) for s in rng.uniform(3.0, 5.0, n)]
            labels = [VISIBLE if rng.random() < 0.6 else NOT_VISIBLE_OR_NOT_ACTION for _ in range(n)]
            assert tune_threshold(scores, labels, CONCRETENESS_GRID) == pytest.approx(
                exhaustive_best_theta(scores, labels, CONCRETENESS_GRID)
            )

    def test_empty_validation(self):
        with pytest.raises(EmptyValidation):
            tune_threshold([], [], CONCRETENESS_GRID)

    def test_monotone_consistency(self):
        scores = [3.1, 3.6, 4.2, 4.9]
        labels = [NOT_VISIBLE_OR_NOT_ACTION, NOT_VISIBLE_OR_NOT_ACTION, VISIBLE, VISIBLE]
        theta = tune_threshold(scores, labels, CONCRETENESS_GRID)
        model = ThresholdModel(theta)
        for s in scores:
            assert (model.predict(s) == VISIBLE) == (s >= theta)


class TestObjectMatch:
    def test_exact_noun_match_is_one(self, toy_taxonomy):
        table = EmbeddingTable(dim=2, entries={"pan": np.array([1.0, 0.0])})
        assert object_match_score(["pan"], ["pan"], tax=None, emb_table=table, mode="cosine") == 1.0
        assert object_match_score(["B"], ["B"], tax=toy_taxonomy, mode="wup") == 1.0

    def test_no_detections_absent(self, toy_taxonomy):
        assert object_match_score(["B"], [], tax=toy_taxonomy, mode="wup") is None
        assert object_match_score([], ["B"], tax=toy_taxonomy, mode="wup") is None

    def test_sibling_wup_two_thirds(self, toy_taxonomy):
        score = object_match_score(["B"], ["C"], tax=toy_taxonomy, mode="wup")
        assert score == pytest.approx(2.0 / 3.0)

    def test_max_over_pairs(self, toy_taxonomy):
        score = object_match_score(["B", "root"], ["C", "B"], tax=toy_taxonomy, mode="wup")
        assert score == pytest.approx(1.0)  # B matches B exactly

    def test_never_exceeds_one(self, toy_taxonomy):
        rng = np.random.default_rng(1)
        nodes = ["root", "A", "B", "C"]
        for _ in range(50):
            nouns = [nodes[int(i)] for i in rng.integers(0, 4, 2)]
            objs = [nodes[int(i)] for i in rng.integers(0, 4, 2)]
            s = object_match_score(nouns, objs, tax=toy_taxonomy, mode="wup")
            assert s <= 1.0


class TestTrainLinear:
    def test_separable_blobs(self):
        X, y = make_blob_data(seed=0, n=200, margin=1.0)
        model, report = train_linear(X, y, c_grid=[0.1, 1.0, 10.0], seed=0)
        assert report.accuracies[report.best_c] >= 0.98
        preds = model.predict_batch(X)
        acc = np.mean([(p == VISIBLE) == (t == 1) for p, t in zip(preds, y)])
        assert acc >= 0.98

    def test_all_labels_identical_constant(self):
        X = np.random.default_rng(0).normal(size=(20, 3))
        model, _ = train_linear(X, np.ones(20, dtype=np.int64), c_grid=[1.0], seed=0)
        assert model.constant_label == VISIBLE
        assert model.predict(X[0]) == (VISIBLE, 0.0)

    def test_noise_labels_near_chance(self):
        rng = np.random.default_rng(77)
        X = rng.normal(size=(200, 4))
        y = rng.integers(0, 2, 200)
        for seed in range(10):
            _, report = train_linear(X, y, c_grid=[1.0], seed=seed)
            assert 0.4 <= report.accuracies[1.0] <= 0.6

    def test_deterministic_under_seed(self):
        X, y = make_blob_data(seed=3, n=60)
        a, _ = train_linear(X, y, c_grid=[0.5, 2.0], seed=42)
        b, _ = train_linear(X, y, c_grid=[0.5, 2.0], seed=42)
        assert np.array_equal(a.weights, b.weights)
        assert a.bias == b.bias and a.C == b.C

    def test_tie_breaks_to_smaller_c(self):
        X, y = make_blob_data(seed=5, n=100, margin=2.0)
        _, report = train_linear(X, y, c_grid=[0.5, 1.0, 5.0], seed=1)
        best = max(report.accuracies.values())
        tied = [c for c, acc in report.accuracies.items() if acc == best]
        assert report.best_c == min(tied)


class TestPredict:
    def test_zero_input_positive_bias(self):
        model = LinearModel(weights=np.zeros(3), bias=0.5, C=1.0)
        label, margin = model.predict(np.zeros(3))
        assert label == VISIBLE and margin == 0.5

    def test_score_exactly_theta_visible(self):
        assert ThresholdModel(theta=4.0).predict(4.0) == VISIBLE

    def test_batch_equals_elementwise(self):
        rng = np.random.default_rng(8)
        model = LinearModel(weights=rng.normal(size=4), bias=0.1, C=1.0)
        X = rng.normal(size=(100, 4))
        batch = model.predict_batch(X)
        single = [model.predict(x)[0] for x in X]
        assert batch == single

    def test_scale_invariance_of_labels(self):
        rng = np.random.default_rng(9)
        w, b = rng.normal(size=3), 0.3
        m1 = LinearModel(weights=w, bias=b, C=1.0)
        m2 = LinearModel(weights=5.0 * w, bias=5.0 * b, C=1.0)
        X = rng.normal(size=(50, 3))
        assert m1.predict_batch(X) == m2.predict_batch(X)

    def test_dim_mismatch(self):
        model = LinearModel(weights=np.zeros(3), bias=0.0, C=1.0)
        with pytest.raises(DimMismatch):
            model.predict(np.zeros(4))


class TestModelFiles:
    def test_threshold_roundtrip(self, tmp_path):
        p = tmp_path / "model.json"
        save_model(p, ThresholdModel(theta=3.95))
        again = load_model(p)
        assert isinstance(again, ThresholdModel) and again.theta == 3.95

    def test_linear_roundtrip(self, tmp_path):
        p = tmp_path / "model.json"
        model = LinearModel(weights=np.array([0.25, -1.5]), bias=0.75, C=2.0)
        save_model(p, model)
        again = load_model(p)
        assert np.array_equal(again.weights, model.weights)
        assert again.bias == model.bias and again.C == model.C
