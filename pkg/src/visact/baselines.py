"""Non-neural baselines: score thresholding, object matching, linear margin.

The original experiments used a kernel SVM; kernels are out of scope here,
so the feature-based classifier is a linear hinge-loss model trained with
a Pegasos-style stochastic subgradient schedule and the same five-fold
cross-validated grid search over C.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .annotation import NOT_VISIBLE_OR_NOT_ACTION, VISIBLE
from .errors import DimMismatch, EmptyValidation, FormatError
from .features import EmbeddingTable, Taxonomy, cosine, lemma_candidates, wup_similarity


@dataclass
class ThresholdModel:
    theta: float

    def predict(self, score: float | None) -> str:
        """Visible iff the score exists and is >= theta (absent -> negative)."""
        if score is None:
            return NOT_VISIBLE_OR_NOT_ACTION
        return VISIBLE if score >= self.theta else NOT_VISIBLE_OR_NOT_ACTION


@dataclass
class LinearModel:
    weights: np.ndarray
    bias: float
    C: float
    constant_label: str | None = None  # set when the training labels were all identical

    def margin(self, x: np.ndarray) -> float:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != self.weights.shape:
            raise DimMismatch(f"{x.shape} vs {self.weights.shape}")
        return float(np.dot(self.weights, x) + self.bias)

    def predict(self, x: np.ndarray) -> tuple[str, float]:
        """(label, margin); non-negative margin means Visible."""
        if self.constant_label is not None:
            return self.constant_label, 0.0
        m = self.margin(x)
        return (VISIBLE if m >= 0 else NOT_VISIBLE_OR_NOT_ACTION), m

    def predict_batch(self, X: np.ndarray) -> list[str]:
        return [self.predict(x)[0] for x in np.asarray(X, dtype=np.float64)]


def tune_threshold(
    scores: list[float | None], labels: list[str], grid: list[float]
) -> float:
    """Pick the grid threshold with the best validation accuracy.

    Items with absent scores are always predicted not-visible. Ties break
    toward the smallest threshold.
    """
    if not scores or len(scores) != len(labels):
        raise EmptyValidation("scores and labels must be non-empty and aligned")
    if not grid:
        raise ValueError("empty threshold grid")
    best_theta, best_acc = None, -1.0
    for theta in sorted(grid):
        model = ThresholdModel(theta=theta)
        acc = sum(model.predict(s) == y for s, y in zip(scores, labels)) / len(labels)
        if acc > best_acc:
            best_theta, best_acc = theta, acc
    return best_theta


def object_match_score(
    noun_tokens: list[str],
    detected_labels: list[str],
    tax: Taxonomy | None = None,
    emb_table: EmbeddingTable | None = None,
    mode: str = "wup",
) -> float | None:
    """Best similarity between any action noun and any detected object.

    Returns None (predicted not-visible downstream) when the action has no
    nouns, the miniclip no detections, or nothing is comparable under the
    chosen similarity.
    """
    if not noun_tokens or not detected_labels:
        return None
    best = None
    for noun in noun_tokens:
        for obj in detected_labels:
            s = _similarity(noun, obj, tax, emb_table, mode)
            if s is not None and (best is None or s > best):
                best = s
    return best


def _similarity(noun, obj, tax, emb_table, mode):
    if mode == "wup":
        noun_form = _first_known(noun, tax)
        obj_form = _first_known(obj, tax)
        if noun_form is None or obj_form is None:
            return None
        return wup_similarity(tax, noun_form, obj_form)
    if mode == "cosine":
        if noun.casefold() == obj.casefold():
            return 1.0
        u = emb_table.get(noun)
        v = emb_table.get(obj)
        if u is None or v is None:
            return None
        return cosine(u, v)
    raise ValueError(f"unknown similarity mode {mode!r}")


def _first_known(word: str, tax: Taxonomy | None) -> str | None:
    if tax is None:
        return None
    for form in [word, *lemma_candidates(word)]:
        if form in tax:
            return form
    return None


# -- linear margin classifier ---------------------------------------------------


def _pegasos_epochs(X, y_signed, lam, epochs, rng):
    """Hinge-loss stochastic subgradient descent, eta_t = 1/(lam*t)."""
    n, d = X.shape
    w = np.zeros(d)
    b = 0.0
    t = 0
    for _ in range(epochs):
        order = rng.permutation(n)
        for i in order:
            t += 1
            eta = 1.0 / (lam * t)
            margin = y_signed[i] * (np.dot(w, X[i]) + b)
            if margin < 1.0:
                w = (1.0 - eta * lam) * w + eta * y_signed[i] * X[i]
                b = b + eta * y_signed[i]  # bias unregularized
            else:
                w = (1.0 - eta * lam) * w
    return w, b


@dataclass
class CvReport:
    """Grid-search record: C -> mean five-fold accuracy."""

    accuracies: dict[float, float] = field(default_factory=dict)
    best_c: float = 0.0


def train_linear(
    X: np.ndarray,
    y: np.ndarray,
    c_grid: list[float],
    folds: int = 5,
    seed: int = 0,
    epochs: int = 20,
) -> tuple[LinearModel, CvReport]:
    """Cross-validated grid search over C, then retrain on all data.

    ``y`` is 0/1 with 1 = visible. Ties in CV accuracy break toward the
    smaller C. If all labels are identical the returned model is a flagged
    constant predictor.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    n = len(X)
    if n < folds:
        raise ValueError(f"{n} examples for {folds} folds")
    if len(set(y.tolist())) == 1:
        label = VISIBLE if y[0] == 1 else NOT_VISIBLE_OR_NOT_ACTION
        model = LinearModel(
            weights=np.zeros(X.shape[1]), bias=0.0, C=min(c_grid), constant_label=label
        )
        return model, CvReport(accuracies={}, best_c=min(c_grid))

    y_signed = np.where(y == 1, 1.0, -1.0)
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    fold_of = np.empty(n, dtype=np.int64)
    for pos, idx in enumerate(order):
        fold_of[idx] = pos % folds

    report = CvReport()
    for c in sorted(c_grid):
        correct = 0
        for f in range(folds):
            train_idx = np.nonzero(fold_of != f)[0]
            val_idx = np.nonzero(fold_of == f)[0]
            fold_rng = np.random.default_rng(seed * 1000 + f)
            w, b = _pegasos_epochs(X[train_idx], y_signed[train_idx],
                                   1.0 / (c * len(train_idx)), epochs, fold_rng)
            preds = np.sign(X[val_idx] @ w + b)
            preds[preds == 0] = 1.0
            correct += int(np.sum(preds == y_signed[val_idx]))
        report.accuracies[c] = correct / n
    report.best_c = max(sorted(c_grid), key=lambda c: (report.accuracies[c], -c))

    final_rng = np.random.default_rng(seed)
    w, b = _pegasos_epochs(X, y_signed, 1.0 / (report.best_c * n), epochs, final_rng)
    return LinearModel(weights=w, bias=b, C=report.best_c), report


# -- model files ------------------------------------------------------------------


def save_model(path: str | Path, model: ThresholdModel | LinearModel) -> None:
    if isinstance(model, ThresholdModel):
        obj = {"kind": "threshold", "theta": model.theta}
    else:
        obj = {
            "kind": "linear",
            "weights": [float(x) for x in model.weights],
            "bias": float(model.bias),
            "C": float(model.C),
        }
        if model.constant_label is not None:
            obj["constant_label"] = model.constant_label
    Path(path).write_text(json.dumps(obj, sort_keys=True) + "\n", encoding="utf-8")


def load_model(path: str | Path) -> ThresholdModel | LinearModel:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    kind = obj.get("kind")
    if kind == "threshold":
        return ThresholdModel(theta=float(obj["theta"]))
    if kind == "linear":
        return LinearModel(
            weights=np.array(obj["weights"], dtype=np.float64),
            bias=float(obj["bias"]),
            C=float(obj["C"]),
            constant_label=obj.get("constant_label"),
        )
    raise FormatError(f"{path}: unknown model kind {kind!r}")
