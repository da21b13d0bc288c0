"""Mini-batch gradient-descent linear classifiers with dynamics logging.

Both models are deterministic given their seed: weights start at zero and
the batch order comes from the schedule, so a fixed seed reproduces the
exact same weights. At every epoch boundary each model records, for every
training example, the probability assigned to the gold label and the
predicted label; that log is what the cartography stage consumes.
"""

from __future__ import annotations

import hashlib

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array

from nlifoundry.cartography import DynamicsRecord
from nlifoundry.curriculum import PacingConfig, Schedule, schedule_standard
from nlifoundry.relations import RELATIONS


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def softmax_objective(W, b, X, y_idx, l2):
    """Mean cross-entropy plus 0.5*l2*||W||^2; returns (loss, gW, gb).

    The bias is not regularized.
    """
    n = X.shape[0]
    probs = _softmax(X @ W.T + b)
    eps = 1e-300  # guards log(0); never perturbs the gradient
    data_loss = -np.log(probs[np.arange(n), y_idx] + eps).mean()
    loss = data_loss + 0.5 * l2 * float((W**2).sum())
    delta = probs
    delta[np.arange(n), y_idx] -= 1.0
    delta /= n
    grad_w = delta.T @ X + l2 * W
    grad_b = delta.sum(axis=0)
    return loss, grad_w, grad_b


def hinge_objective(W, b, X, y_idx, l2):
    """Summed one-vs-rest hinge losses plus 0.5*l2*||W||^2.

    Each class k is a binary machine with targets +1 (gold class) / -1;
    the loss is the mean hinge per machine, summed over machines.
    """
    n, k = X.shape[0], W.shape[0]
    signs = -np.ones((n, k))
    signs[np.arange(n), y_idx] = 1.0
    margins = X @ W.T + b
    slack = 1.0 - signs * margins
    violated = slack > 0
    data_loss = np.where(violated, slack, 0.0).sum(axis=1).mean()
    loss = data_loss + 0.5 * l2 * float((W**2).sum())
    coeff = np.where(violated, -signs, 0.0) / n
    grad_w = coeff.T @ X + l2 * W
    grad_b = coeff.sum(axis=0)
    return loss, grad_w, grad_b


class _GdTextClassifier(BaseEstimator, ClassifierMixin):
    """Shared schedule-driven gradient-descent machinery."""

    _objective = None
    _kind = ""

    def __init__(self, learning_rate=0.1, C=1.0, tol=1e-3, epochs=10,
                 batch_size=256, seed=0, patience=None, classes=None):
        self.learning_rate = learning_rate
        self.C = C
        self.tol = tol
        self.epochs = epochs
        self.batch_size = batch_size
        self.seed = seed
        self.patience = patience
        self.classes = classes

    # -- fitting -------------------------------------------------------

    def fit(self, X, y, example_ids=None, schedule=None, X_val=None, y_val=None):
        X = check_array(X, dtype=np.float64)
        y = list(y)
        if len(y) != X.shape[0]:
            raise ValueError(f"{X.shape[0]} rows but {len(y)} labels")
        self.classes_ = self._resolve_classes(y)
        class_index = {c: i for i, c in enumerate(self.classes_)}
        y_idx = np.array([class_index[label] for label in y])
        if example_ids is None:
            example_ids = [str(i) for i in range(X.shape[0])]
        if len(example_ids) != X.shape[0]:
            raise ValueError("example_ids must align with the feature rows")
        row_of = {example_id: row for row, example_id in enumerate(example_ids)}
        if len(row_of) != len(example_ids):
            raise ValueError("example_ids must be unique")

        if schedule is None and int(self.epochs) > 0:
            batches_per_epoch = max(1, -(-X.shape[0] // self.batch_size))
            schedule = schedule_standard(
                list(example_ids),
                PacingConfig(
                    total_batches=int(self.epochs) * batches_per_epoch,
                    batch_size=self.batch_size,
                    seed=self.seed,
                ),
            )
        if schedule is None:
            # epochs == 0: the zero-initialized model, no updates at all
            schedule = Schedule(batches=[], phase_boundary=0, meta={})
        elif not schedule.batches:
            raise ValueError("cannot train on an empty schedule")
        unknown = {
            example_id
            for batch in schedule.batches
            for example_id in batch
            if example_id not in row_of
        }
        if unknown:
            raise ValueError(
                f"schedule references ids outside the feature set: "
                f"{sorted(unknown)[:5]}"
            )
        index_batches = [
            np.array([row_of[example_id] for example_id in batch])
            for batch in schedule.batches
        ]

        n_features = X.shape[1]
        k = len(self.classes_)
        W = np.zeros((k, n_features))
        b = np.zeros(k)
        l2 = 1.0 / self.C
        segments = self._epoch_segments(len(index_batches))

        self.dynamics_ = []
        self.history_ = []
        best_val, best_weights, stale = -np.inf, None, 0
        prev_loss = None
        cursor = 0
        self.converged_ = False
        self.stopped_early_ = False
        for epoch, segment_size in enumerate(segments):
            for rows in index_batches[cursor : cursor + segment_size]:
                loss, grad_w, grad_b = type(self)._objective(
                    W, b, X[rows], y_idx[rows], l2
                )
                if not np.isfinite(loss):
                    raise FloatingPointError(
                        f"non-finite loss at epoch {epoch}: loss={loss}, "
                        f"|W|max={np.abs(W).max():.3g}, lr={self.learning_rate}; "
                        "reduce the learning rate"
                    )
                W -= self.learning_rate * grad_w
                b -= self.learning_rate * grad_b
            cursor += segment_size

            self._W, self._b = W, b
            probs = self._proba_raw(X)
            gold_probs = probs[np.arange(len(y_idx)), y_idx]
            predicted = probs.argmax(axis=1)
            for row, example_id in enumerate(example_ids):
                self.dynamics_.append(
                    DynamicsRecord(
                        example_id=example_id,
                        epoch=epoch,
                        gold_prob=float(gold_probs[row]),
                        predicted_label=self.classes_[predicted[row]],
                    )
                )
            epoch_loss, _, _ = type(self)._objective(W, b, X, y_idx, l2)
            entry = {"epoch": epoch, "loss": float(epoch_loss),
                     "batches": segment_size}

            if X_val is not None and y_val is not None:
                from nlifoundry.evaluation import classification_report

                val_pred = self.predict(X_val)
                macro = classification_report(
                    list(y_val), list(val_pred), classes=self.classes_
                ).macro_f1
                entry["val_macro_f1"] = macro
                if macro > best_val:
                    best_val, best_weights, stale = macro, (W.copy(), b.copy()), 0
                else:
                    stale += 1
                self.history_.append(entry)
                if self.patience is not None and stale > self.patience:
                    self.stopped_early_ = True
                    break
            else:
                self.history_.append(entry)

            if prev_loss is not None and abs(prev_loss - epoch_loss) < self.tol:
                self.converged_ = True
                break
            prev_loss = epoch_loss

        if self.stopped_early_ and best_weights is not None:
            W, b = best_weights
        self._W, self._b = W, b
        self.n_epochs_run_ = len(self.history_)
        return self

    def _resolve_classes(self, y):
        if self.classes is not None:
            return list(self.classes)
        present = set(y)
        if all(isinstance(label, type(RELATIONS[0])) for label in present):
            return [c for c in RELATIONS if c in present]
        return sorted(present)

    def _epoch_segments(self, total_batches: int) -> list[int]:
        epochs = int(self.epochs)
        if epochs <= 0:
            return []
        base, extra = divmod(total_batches, epochs)
        return [base + (1 if i < extra else 0) for i in range(epochs)]

    # -- inference -----------------------------------------------------

    def _proba_raw(self, X) -> np.ndarray:
        return _softmax(X @ self._W.T + self._b)

    def predict_proba(self, X) -> np.ndarray:
        """Class probabilities; for the SVM these are a softmax over the
        one-vs-rest margins (a declared surrogate, not calibrated)."""
        X = check_array(X, dtype=np.float64)
        return self._proba_raw(X)

    def predict(self, X):
        probs = self.predict_proba(X)
        return np.array([self.classes_[i] for i in probs.argmax(axis=1)])

    def decision_function(self, X) -> np.ndarray:
        X = check_array(X, dtype=np.float64)
        return X @ self._W.T + self._b

    def weights_digest(self) -> str:
        digest = hashlib.sha256()
        digest.update(self._W.tobytes())
        digest.update(self._b.tobytes())
        return digest.hexdigest()

    @property
    def coef_(self) -> np.ndarray:
        return self._W

    @property
    def intercept_(self) -> np.ndarray:
        return self._b


class SoftmaxClassifier(_GdTextClassifier):
    """Multinomial logistic regression fit by mini-batch gradient descent."""

    _objective = staticmethod(softmax_objective)
    _kind = "softmax"

    def __init__(self, learning_rate=0.1, C=1.0, tol=1e-3, epochs=10,
                 batch_size=256, seed=0, patience=None, classes=None):
        super().__init__(learning_rate, C, tol, epochs, batch_size, seed,
                         patience, classes)


class LinearSvmClassifier(_GdTextClassifier):
    """One-vs-rest linear SVM fit by mini-batch subgradient descent."""

    _objective = staticmethod(hinge_objective)
    _kind = "linear-svm-ovr"

    def __init__(self, learning_rate=0.1, C=0.5, tol=1e-5, epochs=2500,
                 batch_size=256, seed=0, patience=None, classes=None):
        super().__init__(learning_rate, C, tol, epochs, batch_size, seed,
                         patience, classes)
