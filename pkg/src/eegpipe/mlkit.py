"""Feature selection, small classifiers, linear regression, cross-validation,
and metrics, all self-contained.

Tie-breaking is part of every contract here: naive Bayes breaks exact
posterior ties toward the class seen first in training; kNN breaks vote ties
toward the class with the smallest mean neighbor distance and distance ties
in training order; forward selection breaks score ties toward the lowest
feature index. The positive class for binary metrics is "ASD".
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

import numpy as np

POSITIVE_LABEL = "ASD"


# ---------------------------------------------------------------------------
# Metrics

@dataclass
class Metrics:
    precision: float
    recall: float
    f1: float
    accuracy: float
    confusion: np.ndarray     # [[tp, fn], [fp, tn]]


@dataclass
class RegressionMetrics:
    r2: float
    mae: float
    rmse: float


def compute_metrics(preds, labels, positive: str = POSITIVE_LABEL) -> Metrics:
    """Binary classification metrics; zero denominators score 0."""
    preds = np.asarray(preds)
    labels = np.asarray(labels)
    if preds.size == 0:
        raise ValueError("no predictions")
    if preds.shape != labels.shape:
        raise ValueError(f"{preds.size} predictions for {labels.size} labels")
    tp = int(np.sum((preds == positive) & (labels == positive)))
    fp = int(np.sum((preds == positive) & (labels != positive)))
    fn = int(np.sum((preds != positive) & (labels == positive)))
    tn = int(np.sum((preds != positive) & (labels != positive)))
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = (2 * precision * recall / (precision + recall)) if precision + recall else 0.0
    accuracy = (tp + tn) / preds.size
    return Metrics(precision, recall, f1, accuracy,
                   np.array([[tp, fn], [fp, tn]]))


def regression_metrics(y_true, y_pred) -> RegressionMetrics:
    y_true = np.asarray(y_true, dtype=np.float64)
    y_pred = np.asarray(y_pred, dtype=np.float64)
    if y_true.size == 0:
        raise ValueError("no predictions")
    ss_tot = float(np.sum((y_true - y_true.mean()) ** 2))
    if ss_tot == 0.0:
        raise ValueError("constant target: r^2 is undefined")
    ss_res = float(np.sum((y_true - y_pred) ** 2))
    err = np.abs(y_true - y_pred)
    return RegressionMetrics(r2=1.0 - ss_res / ss_tot,
                             mae=float(err.mean()),
                             rmse=float(np.sqrt((err ** 2).mean())))


# ---------------------------------------------------------------------------
# PCA

@dataclass
class PcaModel:
    components: np.ndarray          # k x d, orthonormal rows
    means: np.ndarray               # d
    explained_variance: np.ndarray  # k, non-increasing
    total_variance: float

    @property
    def explained_fraction(self) -> np.ndarray:
        return self.explained_variance / self.total_variance


def pca_fit(rows, k: int | float | None = None) -> PcaModel:
    """Principal components of row data.

    `k` is a component count, or a variance fraction in (0, 1) to cover
    (default 0.95). Components are sorted by descending eigenvalue and
    sign-fixed so each row's largest-magnitude entry is positive.
    """
    X = np.asarray(rows, dtype=np.float64)
    n, d = X.shape
    if n < 2:
        raise ValueError("need at least 2 rows")
    means = X.mean(axis=0)
    centered = X - means
    cov = centered.T @ centered / (n - 1)
    total = float(np.trace(cov))
    if total == 0.0:
        raise ValueError("zero-variance data")
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1]
    eigvals = np.clip(eigvals[order], 0.0, None)
    comps = eigvecs[:, order].T
    max_k = min(n - 1, d)
    if k is None:
        k = 0.95
    if isinstance(k, float) and 0 < k < 1:
        frac = np.cumsum(eigvals) / eigvals.sum()
        k = int(np.searchsorted(frac, k) + 1)
        k = min(k, max_k)
    k = int(k)
    if not 1 <= k <= max_k:
        raise ValueError(f"k must be in [1, {max_k}], got {k}")
    comps = comps[:k]
    flips = np.sign(comps[np.arange(k), np.argmax(np.abs(comps), axis=1)])
    comps = comps * flips[:, None]
    return PcaModel(components=comps, means=means,
                    explained_variance=eigvals[:k], total_variance=total)


def pca_transform(model: PcaModel, rows) -> np.ndarray:
    X = np.asarray(rows, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != model.means.size:
        raise ValueError(f"{X.shape[1]} columns, model expects {model.means.size}")
    return (X - model.means) @ model.components.T


def pca_inverse(model: PcaModel, reduced) -> np.ndarray:
    return np.asarray(reduced) @ model.components + model.means


# ---------------------------------------------------------------------------
# Classifiers

def _class_order(y) -> list:
    """Classes in order of first appearance."""
    seen: list = []
    for label in y:
        if label not in seen:
            seen.append(label)
    return seen


class GaussianNB:
    """Class-conditional independent Gaussians with per-feature variance
    floors tied to the global variance."""

    def fit(self, X, y):
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y)
        self.classes_ = _class_order(y)
        if len(self.classes_) < 2:
            raise ValueError("training set has a single class")
        global_var = X.var(axis=0)
        floor = 1e-9 * (global_var + 1e-12)
        self.means_ = {}
        self.vars_ = {}
        self.log_priors_ = {}
        for cls in self.classes_:
            sub = X[y == cls]
            self.means_[cls] = sub.mean(axis=0)
            self.vars_[cls] = np.maximum(sub.var(axis=0), floor)
            self.log_priors_[cls] = np.log(len(sub) / len(X))
        return self

    def _log_posteriors(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        out = np.empty((X.shape[0], len(self.classes_)))
        for j, cls in enumerate(self.classes_):
            mean, var = self.means_[cls], self.vars_[cls]
            ll = -0.5 * (np.log(2 * np.pi * var) + (X - mean) ** 2 / var)
            out[:, j] = self.log_priors_[cls] + ll.sum(axis=1)
        return out

    def predict_proba(self, X) -> np.ndarray:
        lp = self._log_posteriors(X)
        lp -= lp.max(axis=1, keepdims=True)
        p = np.exp(lp)
        return p / p.sum(axis=1, keepdims=True)

    def predict(self, X) -> np.ndarray:
        lp = self._log_posteriors(X)
        idx = np.argmax(lp, axis=1)   # ties resolve to the earliest class
        return np.asarray([self.classes_[i] for i in idx])


class LogisticRegression:
    """Binary logistic regression trained by full-batch gradient descent on
    the L2-regularized cross-entropy (bias unregularized). The step halves
    whenever a step would increase the loss, so the loss is non-increasing."""

    def __init__(self, l2: float = 1e-3, lr: float = 0.1, max_iter: int = 5000,
                 tol: float = 1e-6):
        self.l2 = l2
        self.lr = lr
        self.max_iter = max_iter
        self.tol = tol

    @staticmethod
    def _sigmoid(z):
        return 0.5 * (1.0 + np.tanh(0.5 * z))

    def loss_and_grad(self, w, b, X, y01):
        """Mean cross-entropy + (l2/2)|w|^2 and its exact gradient."""
        n = X.shape[0]
        z = X @ w + b
        p = self._sigmoid(z)
        eps = 1e-12
        ce = -np.mean(y01 * np.log(p + eps) + (1 - y01) * np.log(1 - p + eps))
        loss = ce + 0.5 * self.l2 * float(w @ w)
        resid = (p - y01) / n
        grad_w = X.T @ resid + self.l2 * w
        grad_b = float(resid.sum())
        return loss, grad_w, grad_b

    def fit(self, X, y):
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y)
        self.classes_ = _class_order(y)
        if len(self.classes_) != 2:
            raise ValueError(f"need exactly 2 classes, got {self.classes_}")
        if not np.isfinite(X).all():
            raise ValueError("non-finite features")
        positive = (POSITIVE_LABEL if POSITIVE_LABEL in self.classes_
                    else self.classes_[0])
        self.positive_ = positive
        self.negative_ = next(c for c in self.classes_ if c != positive)
        y01 = (y == positive).astype(np.float64)
        w = np.zeros(X.shape[1])
        b = 0.0
        lr = self.lr
        loss, gw, gb = self.loss_and_grad(w, b, X, y01)
        self.n_iter_ = 0
        for _ in range(self.max_iter):
            self.n_iter_ += 1
            if max(np.abs(gw).max(initial=0.0), abs(gb)) < self.tol:
                break
            while True:
                w_new = w - lr * gw
                b_new = b - lr * gb
                loss_new, gw_new, gb_new = self.loss_and_grad(w_new, b_new, X, y01)
                if loss_new <= loss or lr < 1e-12:
                    break
                lr *= 0.5
            w, b, loss, gw, gb = w_new, b_new, loss_new, gw_new, gb_new
        self.weights_ = w
        self.bias_ = b
        return self

    def predict_proba(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        return self._sigmoid(X @ self.weights_ + self.bias_)

    def predict(self, X) -> np.ndarray:
        p = self.predict_proba(X)
        return np.asarray([self.positive_ if pi >= 0.5 else self.negative_ for pi in p])


class KNearest:
    """k-nearest-neighbor majority vote with deterministic tie handling."""

    def __init__(self, k: int = 5):
        if k < 1:
            raise ValueError(f"k must be >= 1, got {k}")
        self.k = k

    def fit(self, X, y):
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y)
        if len(X) == 0:
            raise ValueError("empty training set")
        if self.k > len(X):
            raise ValueError(f"k={self.k} exceeds {len(X)} training samples")
        self.X_ = X
        self.y_ = y
        self.classes_ = _class_order(y)
        return self

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        out = []
        for row in X:
            d = np.sqrt(((self.X_ - row) ** 2).sum(axis=1))
            nearest = np.argsort(d, kind="stable")[:self.k]
            votes: dict = {}
            dists: dict = {}
            for i in nearest:
                label = self.y_[i]
                votes[label] = votes.get(label, 0) + 1
                dists.setdefault(label, []).append(d[i])
            top = max(votes.values())
            tied = [c for c in votes if votes[c] == top]
            if len(tied) == 1:
                out.append(tied[0])
            else:
                out.append(min(tied, key=lambda c: (float(np.mean(dists[c])),
                                                    self.classes_.index(c))))
        return np.asarray(out)


class LinearRegressionModel:
    """Least squares via normal equations with a tiny conditioning ridge;
    under-determined systems fall back to ridge with lambda = 1e-6."""

    def fit(self, X, y):
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        if np.ptp(y) == 0.0:
            raise ValueError("constant target: nothing to regress")
        A = np.hstack([X, np.ones((X.shape[0], 1))])
        gram = A.T @ A
        if X.shape[0] > X.shape[1]:
            lam = 1e-12 * np.trace(gram) / gram.shape[0]
        else:
            lam = 1e-6
        coeffs = np.linalg.solve(gram + lam * np.eye(gram.shape[0]), A.T @ y)
        self.weights_ = coeffs[:-1]
        self.bias_ = float(coeffs[-1])
        return self

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        return X @ self.weights_ + self.bias_


# ---------------------------------------------------------------------------
# Cross-validation and forward selection

def _kfold_indices(y, folds: int, seed: int, stratified: bool) -> list[np.ndarray]:
    y = np.asarray(y)
    n = len(y)
    rng = np.random.default_rng(seed)
    assignments = np.empty(n, dtype=int)
    if stratified:
        counts = {c: int(np.sum(y == c)) for c in _class_order(y)}
        if min(counts.values()) < folds:
            warnings.warn(f"class counts {counts} smaller than {folds} folds; "
                          "falling back to unstratified folds")
            stratified = False
    if stratified:
        for cls in _class_order(y):
            idx = np.nonzero(y == cls)[0]
            idx = idx[rng.permutation(len(idx))]
            for pos, i in enumerate(idx):
                assignments[i] = pos % folds
    else:
        perm = rng.permutation(n)
        for pos, i in enumerate(perm):
            assignments[i] = pos % folds
    return [np.nonzero(assignments == f)[0] for f in range(folds)]


def cross_validate(X, y, factory, folds: int | str = 10, seed: int = 0,
                   stratified: bool = True, task: str = "classify"):
    """Pooled k-fold (or leave-one-out) evaluation.

    `factory()` must return a fresh model with fit/predict. Predictions from
    every fold are pooled in original row order, then scored once; returns
    Metrics for classification or RegressionMetrics for regression.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    n = len(y)
    if folds == "loocv":
        fold_idx = [np.array([i]) for i in range(n)]
    else:
        folds = int(folds)
        if not 2 <= folds <= n:
            raise ValueError(f"folds must be in [2, {n}], got {folds}")
        fold_idx = _kfold_indices(y, folds, seed, stratified and task == "classify")
    preds = np.empty(n, dtype=object if task == "classify" else np.float64)
    for test in fold_idx:
        if test.size == 0:
            continue
        train = np.setdiff1d(np.arange(n), test)
        model = factory()
        model.fit(X[train], y[train])
        preds[test] = model.predict(X[test])
    if task == "classify":
        return compute_metrics(preds, y)
    return regression_metrics(y.astype(np.float64), preds.astype(np.float64))


def loocv_folds(n: int) -> list[np.ndarray]:
    """The leave-one-out fold structure, exposed for verification."""
    return [np.array([i]) for i in range(n)]


def sfs_select(X, y, factory, max_features: int, folds: int | str = 5,
               seed: int = 0) -> list[int]:
    """Greedy forward selection maximizing mean CV accuracy.

    Adds one feature per step (ties to the lowest index), stopping at
    `max_features` or when no candidate strictly improves the accuracy.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if len(_class_order(y)) < 2:
        raise ValueError("forward selection needs at least 2 classes")
    d = X.shape[1]
    if max_features > d:
        raise ValueError(f"max_features={max_features} exceeds {d} features")
    selected: list[int] = []
    best_score = -np.inf
    while len(selected) < max_features:
        scores = []
        for j in range(d):
            if j in selected:
                continue
            cols = selected + [j]
            metrics = cross_validate(X[:, cols], y, factory, folds=folds, seed=seed)
            scores.append((metrics.accuracy, j))
        if not scores:
            break
        top_acc = max(acc for acc, _ in scores)
        if top_acc <= best_score:
            break
        best_score = top_acc
        chosen = min(j for acc, j in scores if acc == top_acc)
        selected.append(chosen)
    return selected


# ---------------------------------------------------------------------------
# Model persistence

_MODEL_KINDS = {"gnb": GaussianNB, "logistic": LogisticRegression,
                "knn": KNearest, "linreg": LinearRegressionModel}


def export_model(model, path) -> None:
    """Serialize a fitted model to structured text (JSON)."""
    if isinstance(model, GaussianNB):
        payload = {"kind": "gnb",
                   "classes": list(model.classes_),
                   "means": {str(c): model.means_[c].tolist() for c in model.classes_},
                   "vars": {str(c): model.vars_[c].tolist() for c in model.classes_},
                   "log_priors": {str(c): model.log_priors_[c] for c in model.classes_}}
    elif isinstance(model, LogisticRegression):
        payload = {"kind": "logistic", "weights": model.weights_.tolist(),
                   "bias": model.bias_, "positive": model.positive_,
                   "negative": model.negative_,
                   "l2": model.l2, "lr": model.lr, "max_iter": model.max_iter,
                   "tol": model.tol}
    elif isinstance(model, KNearest):
        payload = {"kind": "knn", "k": model.k, "train_x": model.X_.tolist(),
                   "train_y": list(model.y_)}
    elif isinstance(model, LinearRegressionModel):
        payload = {"kind": "linreg", "weights": model.weights_.tolist(),
                   "bias": model.bias_}
    elif isinstance(model, PcaModel):
        payload = {"kind": "pca", "components": model.components.tolist(),
                   "means": model.means.tolist(),
                   "explained_variance": model.explained_variance.tolist(),
                   "total_variance": model.total_variance}
    else:
        raise TypeError(f"cannot export {type(model).__name__}")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def import_model(path):
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    kind = payload.get("kind")
    if kind == "gnb":
        model = GaussianNB()
        model.classes_ = payload["classes"]
        model.means_ = {c: np.asarray(payload["means"][str(c)]) for c in model.classes_}
        model.vars_ = {c: np.asarray(payload["vars"][str(c)]) for c in model.classes_}
        model.log_priors_ = {c: payload["log_priors"][str(c)] for c in model.classes_}
        return model
    if kind == "logistic":
        model = LogisticRegression(l2=payload["l2"], lr=payload["lr"],
                                   max_iter=payload["max_iter"], tol=payload["tol"])
        model.weights_ = np.asarray(payload["weights"])
        model.bias_ = payload["bias"]
        model.positive_ = payload["positive"]
        model.negative_ = payload["negative"]
        model.classes_ = [model.positive_, model.negative_]
        return model
    if kind == "knn":
        model = KNearest(k=payload["k"])
        return model.fit(np.asarray(payload["train_x"]), np.asarray(payload["train_y"]))
    if kind == "linreg":
        model = LinearRegressionModel()
        model.weights_ = np.asarray(payload["weights"])
        model.bias_ = payload["bias"]
        return model
    if kind == "pca":
        return PcaModel(components=np.asarray(payload["components"]),
                        means=np.asarray(payload["means"]),
                        explained_variance=np.asarray(payload["explained_variance"]),
                        total_variance=payload["total_variance"])
    raise ValueError(f"{path}: unknown model kind {kind!r}")


def metrics_csv_rows(named: list[tuple[str, Metrics]]) -> str:
    """CSV text with the canonical column order."""
    lines = ["Classifier,Precision,Recall,F1,Accuracy"]
    for name, m in named:
        lines.append(f"{name},{m.precision:.4f},{m.recall:.4f},{m.f1:.4f},{m.accuracy:.4f}")
    return "\n".join(lines) + "\n"
