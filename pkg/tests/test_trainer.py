import numpy as np
import pytest

from nlifoundry.curriculum import PacingConfig, schedule_standard
from nlifoundry.errors import FormatError
from nlifoundry.labeler import LabeledPair
from nlifoundry.relations import RELATIONS, Relation
from nlifoundry.trainer import (
    CbowFeaturizer,
    LinearSvmClassifier,
    SoftmaxClassifier,
    featurize,
    featurize_pairs,
    hashed_table,
    load_embeddings,
    load_model,
    model_to_json,
    save_model,
)
from nlifoundry.trainer.models import hinge_objective, softmax_objective


class TestLoadEmbeddings:
    def write(self, tmp_path, text):
        path = tmp_path / "vecs.txt"
        path.write_text(text, encoding="utf-8")
        return path

    def test_declared_format(self, tmp_path):
        path = self.write(tmp_path, "2 3\ncasa 1.0 2.0 3.0\nmasa 0.5 0 -1\n")
        table = load_embeddings(path)
        assert table.dim == 3
        assert len(table.vectors) == 2
        assert np.allclose(table.vectors["casa"], [1.0, 2.0, 3.0])

    def test_wrong_arity_names_line(self, tmp_path):
        path = self.write(tmp_path, "2 3\ncasa 1.0 2.0 3.0\nmasa 0.5 0\n")
        with pytest.raises(FormatError, match="line 3"):
            load_embeddings(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(OSError):
            load_embeddings(tmp_path / "absent.txt")

    def test_duplicate_last_wins(self, tmp_path, caplog):
        path = self.write(tmp_path, "2 2\ncasa 1 1\ncasa 2 2\n")
        with caplog.at_level("WARNING"):
            table = load_embeddings(path)
        assert np.allclose(table.vectors["casa"], [2, 2])
        assert any("duplicate" in r.message for r in caplog.records)


class Pair:
    def __init__(self, pair_id, premise, hypothesis):
        self.pair_id = pair_id
        self.premise = premise
        self.hypothesis = hypothesis


class TestFeaturize:
    def table(self):
        return type(
            "T", (), {}
        )  # placeholder, real table built below

    def test_mean_and_concatenation(self):
        from nlifoundry.trainer.embeddings import EmbeddingTable

        table = EmbeddingTable(
            dim=2,
            vectors={"unu": np.array([1.0, 0.0]), "doi": np.array([0.0, 1.0]),
                     "trei": np.array([2.0, 0.0])},
            oov_policy="zero",
        )
        features = featurize(Pair("p", "unu doi", "trei"), table, mode="both")
        assert np.allclose(features.vector, [0.5, 0.5, 2.0, 0.0])

    def test_hypothesis_only_length_and_values(self):
        from nlifoundry.trainer.embeddings import EmbeddingTable

        table = EmbeddingTable(
            dim=2,
            vectors={"unu": np.array([1.0, 0.0]), "doi": np.array([0.0, 1.0]),
                     "trei": np.array([2.0, 0.0])},
            oov_policy="zero",
        )
        features = featurize(Pair("p", "unu doi", "trei"), table,
                             mode="hypothesis-only")
        assert np.allclose(features.vector, [2.0, 0.0])

    def test_all_oov_zero_policy(self):
        from nlifoundry.trainer.embeddings import EmbeddingTable

        table = EmbeddingTable(dim=3, vectors={}, oov_policy="zero")
        features = featurize(Pair("p", "nimic aici", "tot nimic"), table)
        assert not features.vector.any()

    def test_hypothesis_only_never_reads_premise(self):
        class TrapPair:
            pair_id = "trap"
            hypothesis = "text simplu"

            @property
            def premise(self):
                raise AssertionError("premise must not be read")

        table = hashed_table(4, seed=0)
        features = featurize(TrapPair(), table, mode="hypothesis-only")
        assert features.vector.shape == (4,)

    def test_hashed_oov_deterministic(self):
        a = hashed_table(8, seed=5)
        b = hashed_table(8, seed=5)
        va = featurize(Pair("p", "cuvântnou", "alt cuvânt"), a).vector
        vb = featurize(Pair("p", "cuvântnou", "alt cuvânt"), b).vector
        assert np.allclose(va, vb)
        c = hashed_table(8, seed=6)
        vc = featurize(Pair("p", "cuvântnou", "alt cuvânt"), c).vector
        assert not np.allclose(va, vc)

    def test_featurizer_estimator_api(self):
        pairs = [Pair("a", "un text", "alt text"), Pair("b", "ceva", "altceva")]
        featurizer = CbowFeaturizer(hashed_dim=6, seed=1)
        matrix = featurizer.fit(pairs).transform(pairs)
        assert matrix.shape == (2, 12)
        params = featurizer.get_params()
        assert params["hashed_dim"] == 6 and params["mode"] == "both"


def separable_problem(n=200, dim=12, k=4, seed=0, margin=1.0):
    """A toy set with a zero-error linear classifier by construction."""
    rng = np.random.default_rng(seed)
    true_w = rng.normal(size=(k, dim))
    rows, labels = [], []
    while len(rows) < n:
        x = rng.normal(size=dim)
        scores = true_w @ x
        order = np.argsort(scores)
        if scores[order[-1]] - scores[order[-2]] < margin:
            continue
        rows.append(x)
        labels.append(RELATIONS[int(order[-1])])
    return np.array(rows), labels


class TestGradients:
    @pytest.mark.parametrize("objective", [softmax_objective, hinge_objective])
    def test_analytic_matches_central_differences(self, objective):
        rng = np.random.default_rng(3)
        for _ in range(10):
            n, dim, k = 6, 5, 4
            W = rng.normal(size=(k, dim))
            b = rng.normal(size=k)
            X = rng.normal(size=(n, dim))
            y = rng.integers(0, k, size=n)
            _, gw, gb = objective(W, b, X, y, l2=0.3)
            h = 1e-6
            for _ in range(12):
                i, j = rng.integers(0, k), rng.integers(0, dim)
                for point, grad, bump in ((W, gw, (i, j)), (b, gb, i)):
                    original = point[bump]
                    point[bump] = original + h
                    up, _, _ = objective(W, b, X, y, l2=0.3)
                    point[bump] = original - h
                    down, _, _ = objective(W, b, X, y, l2=0.3)
                    point[bump] = original
                    numeric = (up - down) / (2 * h)
                    denom = max(1e-8, abs(numeric), abs(grad[bump]))
                    assert abs(grad[bump] - numeric) / denom < 1e-4


class TestClassifiers:
    def test_zero_weights_uniform_and_first_class_tie_break(self):
        X, y = separable_problem(n=40)
        model = SoftmaxClassifier(epochs=0).fit(X, y)
        probs = model.predict_proba(X[:5])
        assert np.allclose(probs, 0.25)
        assert all(label is model.classes_[0] for label in model.predict(X[:5]))

    def test_probabilities_sum_to_one(self):
        X, y = separable_problem(n=60)
        model = SoftmaxClassifier(epochs=5, learning_rate=0.5).fit(X, y)
        probs = model.predict_proba(X)
        assert np.allclose(probs.sum(axis=1), 1.0, atol=1e-9)

    def test_logit_scaling_keeps_argmax(self):
        X, y = separable_problem(n=50)
        model = SoftmaxClassifier(epochs=8, learning_rate=0.5).fit(X, y)
        before = model.predict(X)
        model._W *= 3.0
        model._b *= 3.0
        assert (model.predict(X) == before).all()

    @pytest.mark.parametrize("cls,kwargs", [
        (SoftmaxClassifier, {"learning_rate": 1.0, "C": 1000.0, "epochs": 50}),
        (LinearSvmClassifier, {"learning_rate": 0.3, "C": 1000.0, "epochs": 50}),
    ])
    def test_separable_toy_reaches_high_accuracy(self, cls, kwargs):
        X, y = separable_problem()
        model = cls(batch_size=32, seed=0, tol=0.0, **kwargs).fit(X, y)
        accuracy = (model.predict(X) == np.array(y)).mean()
        assert accuracy >= 0.99

    def test_seeded_digest_identical(self):
        X, y = separable_problem(n=80)
        a = SoftmaxClassifier(epochs=6, seed=3).fit(X, y).weights_digest()
        b = SoftmaxClassifier(epochs=6, seed=3).fit(X, y).weights_digest()
        assert a == b
        c = SoftmaxClassifier(epochs=6, seed=4).fit(X, y).weights_digest()
        assert a != c

    def test_dynamics_rectangular(self):
        X, y = separable_problem(n=30)
        ids = [f"ex{i}" for i in range(30)]
        model = SoftmaxClassifier(epochs=4, tol=0.0).fit(X, y, example_ids=ids)
        assert len(model.dynamics_) == 4 * 30
        seen = {(r.example_id, r.epoch) for r in model.dynamics_}
        assert len(seen) == 4 * 30
        assert {r.epoch for r in model.dynamics_} == {0, 1, 2, 3}

    def test_strong_regularization_shrinks_weights_monotonically(self):
        X, y = separable_problem(n=64)
        # l2 strength is 1/C = 1e6; the step must keep (1 - lr/C) in (0, 1)
        model = SoftmaxClassifier(
            learning_rate=5e-7, C=1e-6, epochs=6, tol=0.0, batch_size=16, seed=0
        )
        # one warm-up fit to get nonzero weights, then watch the norm decay
        model.fit(X, y)
        norms = []
        W = np.ones_like(model._W)
        b = np.zeros_like(model._b)
        for _ in range(5):
            _, gw, gb = softmax_objective(W, b, X[:16],
                                          np.zeros(16, dtype=int), l2=1e6)
            W = W - 5e-7 * gw
            b = b - 5e-7 * gb
            norms.append(float(np.linalg.norm(W)))
        assert all(a > b for a, b in zip(norms, norms[1:]))

    def test_nan_loss_raises_with_diagnostics(self):
        X, y = separable_problem(n=40)
        model = SoftmaxClassifier(learning_rate=1e12, epochs=50, tol=0.0)
        with np.errstate(over="ignore"), pytest.raises(
            FloatingPointError, match="learning rate"
        ):
            model.fit(X * 1e6, y)

    def test_empty_schedule_rejected(self):
        from nlifoundry.curriculum import Schedule

        X, y = separable_problem(n=10)
        with pytest.raises(ValueError, match="empty schedule"):
            SoftmaxClassifier().fit(X, y, schedule=Schedule([], 0))

    def test_schedule_ids_must_exist(self):
        from nlifoundry.curriculum import Schedule

        X, y = separable_problem(n=4)
        schedule = Schedule([["missing"]], 0)
        with pytest.raises(ValueError, match="outside the feature set"):
            SoftmaxClassifier().fit(X, y, example_ids=["a", "b", "c", "d"],
                                    schedule=schedule)

    def test_early_stopping_restores_best(self):
        X, y = separable_problem(n=120, seed=2)
        X_val, y_val = separable_problem(n=60, seed=9)
        model = SoftmaxClassifier(
            epochs=30, learning_rate=0.8, patience=3, tol=0.0
        ).fit(X, y, X_val=X_val, y_val=y_val)
        assert model.n_epochs_run_ <= 30
        assert any("val_macro_f1" in h for h in model.history_)

    def test_convergence_tolerance_stops(self):
        X, y = separable_problem(n=60)
        model = SoftmaxClassifier(epochs=500, learning_rate=0.05, tol=1e-3)
        model.fit(X, y)
        assert model.converged_
        assert model.n_epochs_run_ < 500


class TestModelIo:
    def test_binary_round_trip(self, tmp_path):
        X, y = separable_problem(n=50)
        model = SoftmaxClassifier(epochs=5, learning_rate=0.5, seed=1).fit(X, y)
        path = tmp_path / "m.bin"
        save_model(model, path)
        loaded = load_model(path)
        assert loaded.weights_digest() == model.weights_digest()
        assert (loaded.predict(X) == model.predict(X)).all()
        assert loaded.classes_ == list(model.classes_)
        assert isinstance(loaded, SoftmaxClassifier)

    def test_svm_round_trip(self, tmp_path):
        X, y = separable_problem(n=40)
        model = LinearSvmClassifier(epochs=5, learning_rate=0.2, seed=1).fit(X, y)
        path = tmp_path / "m.bin"
        save_model(model, path)
        assert isinstance(load_model(path), LinearSvmClassifier)

    def test_json_export(self):
        X, y = separable_problem(n=30)
        model = SoftmaxClassifier(epochs=2).fit(X, y)
        blob = model_to_json(model)
        assert blob["kind"] == "softmax"
        assert len(blob["weights"]) == len(model.classes_)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "m.bin"
        path.write_bytes(b"XXXX" + b"\x00" * 16)
        with pytest.raises(FormatError):
            load_model(path)


class TestScheduleIntegration:
    def test_oversampled_schedule_trains_on_repeats(self):
        X, y = separable_problem(n=24)
        ids = [f"ex{i}" for i in range(24)]
        pool = ids + ids[:4]
        schedule = schedule_standard(pool, PacingConfig(6, 8, seed=0))
        model = SoftmaxClassifier(epochs=3, tol=0.0).fit(
            X, y, example_ids=ids, schedule=schedule
        )
        assert model.n_epochs_run_ == 3


def test_pipeline_composes_with_sklearn():
    from sklearn.pipeline import Pipeline

    pairs = [
        LabeledPair(f"p{i}", f"text {i} unu", f"alt {i} doi",
                    RELATIONS[i % 4])
        for i in range(40)
    ]
    labels = [p.label for p in pairs]
    pipeline = Pipeline(
        [
            ("features", CbowFeaturizer(hashed_dim=16, seed=0)),
            ("model", SoftmaxClassifier(epochs=3, learning_rate=0.5)),
        ]
    )
    pipeline.fit(pairs, labels)
    predicted = pipeline.predict(pairs)
    assert len(predicted) == len(pairs)
    assert set(pipeline.get_params()) >= {"features__hashed_dim", "model__epochs"}
