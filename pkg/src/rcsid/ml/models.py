"""Training, prediction and JSON persistence for the feature-based classifiers.

Every family produces an ``(n, M)`` score matrix whose columns follow the
lexicographically sorted class list, so ``argmax`` ties resolve to the
smallest class name.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
from scipy.special import logsumexp

from ..errors import NumericError, ValidationError
from ..features import FeatureVector
from .hyperparams import ML_FAMILIES, MlHyperparams
from .svm import BinarySvm, train_one_vs_all
from .tree import TreeState, grow_tree

SCHEMA_VERSION = 1
LOG_2PI = np.log(2.0 * np.pi)


@dataclass(frozen=True)
class Standardizer:
    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, X, enabled=True):
        X = np.asarray(X, dtype=float)
        if not enabled:
            return cls(np.zeros(X.shape[1]), np.ones(X.shape[1]))
        sd = X.std(axis=0, ddof=1) if X.shape[0] > 1 else np.ones(X.shape[1])
        return cls(X.mean(axis=0), np.where(sd > 0, sd, 1.0))

    def __call__(self, X):
        return (np.atleast_2d(np.asarray(X, dtype=float)) - self.mean) / self.scale


@dataclass
class TrainedClassifier:
    family: str
    hyperparams: MlHyperparams
    classes: tuple[str, ...]
    standardizer: Standardizer
    state: dict[str, Any]
    meta: dict[str, Any] = field(default_factory=dict)

    def scores(self, X) -> np.ndarray:
        Z = self.standardizer(X)
        if not np.all(np.isfinite(Z)):
            raise ValidationError("feature vectors must be finite")
        return _SCORERS[self.family](self, Z)

    def predict_batch(self, X) -> list[str]:
        return [self.classes[k] for k in np.argmax(self.scores(X), axis=1)]

    def to_dict(self):
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "ml",
            "family": self.family,
            "hyperparams": self.hyperparams.to_dict(),
            "classes": list(self.classes),
            "standardizer": {"mean": self.standardizer.mean.tolist(), "scale": self.standardizer.scale.tolist()},
            "state": _encode(self.state),
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, d):
        if d.get("schema_version") != SCHEMA_VERSION:
            raise ValidationError(f"unsupported model schema version {d.get('schema_version')}")
        family = d["family"]
        state = dict(d["state"])
        if family == "tree":
            state["tree"] = TreeState.from_dict(state["tree"])
        elif family == "ensemble":
            state["trees"] = [TreeState.from_dict(t) for t in state["trees"]]
        elif family == "svm":
            state["machines"] = [BinarySvm.from_dict(m) for m in state["machines"]]
        for k, v in list(state.items()):
            if isinstance(v, list) and k not in ("trees", "machines"):
                state[k] = np.asarray(v, dtype=float)
        std = d["standardizer"]
        return cls(family, MlHyperparams.from_dict(d["hyperparams"]), tuple(d["classes"]),
                   Standardizer(np.asarray(std["mean"]), np.asarray(std["scale"])), state, d.get("meta", {}))

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=1))


def _encode(obj):
    if isinstance(obj, dict):
        return {k: _encode(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_encode(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if hasattr(obj, "to_dict"):
        return obj.to_dict()
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _as_matrix(features) -> np.ndarray:
    rows = [f.as_array() if isinstance(f, FeatureVector) else np.asarray(f, dtype=float) for f in features]
    return np.vstack(rows)


def train(family: str, features, labels, hp: MlHyperparams | None = None, seed: int = 0,
          standardize: bool = True) -> TrainedClassifier:
    """Fit one classifier family on feature vectors (or a feature matrix) and labels."""
    hp = hp or MlHyperparams()
    if family not in ML_FAMILIES:
        raise ValidationError(f"unknown ML family {family!r}; expected one of {ML_FAMILIES}")
    fam_hp = hp.for_family(family)
    fam_hp.validate()
    X = _as_matrix(features) if not isinstance(features, np.ndarray) else np.asarray(features, dtype=float)
    labels = [str(c) for c in labels]
    if X.shape[0] != len(labels):
        raise ValidationError("features and labels differ in length")
    if not np.all(np.isfinite(X)):
        raise ValidationError("training features must be finite")
    classes = tuple(sorted(set(labels)))
    if len(classes) < 2:
        raise ValidationError("need at least 2 classes to train a classifier")
    y = np.array([classes.index(c) for c in labels])
    need = max(getattr(fam_hp, "min_leaf_size", 1), getattr(fam_hp, "num_neighbors", 1))
    per_class = np.bincount(y, minlength=len(classes))
    if per_class.min() < need:
        raise ValidationError(f"{family} needs >= {need} samples per class, smallest class has {per_class.min()}")
    std = Standardizer.fit(X, standardize)
    Z = std(X)
    state = _TRAINERS[family](Z, y, len(classes), fam_hp, seed)
    return TrainedClassifier(family, hp, classes, std, state, {"standardize": standardize})


def predict(clf: TrainedClassifier, fv) -> tuple[str, dict[str, float]]:
    x = fv.as_array() if isinstance(fv, FeatureVector) else np.asarray(fv, dtype=float)
    s = clf.scores(x[None, :])[0]
    return clf.classes[int(np.argmax(s))], dict(zip(clf.classes, s.tolist()))


# ---- kNN -------------------------------------------------------------------

def _train_knn(Z, y, m, hp, seed):
    return {"X": Z.copy(), "y": y.astype(float)}


def pairwise_distance(A, B, metric):
    diff = np.abs(A[:, None, :] - B[None, :, :])
    if metric == "euclidean":
        return np.sqrt(np.sum(diff * diff, axis=2))
    if metric == "chebyshev":
        return np.max(diff, axis=2)
    return np.sum(diff, axis=2)


def _score_knn(clf, Z):
    hp = clf.hyperparams.knn
    X, y = clf.state["X"], clf.state["y"].astype(np.int64)
    k = min(hp.num_neighbors, X.shape[0])
    nearest = np.vstack([
        np.argsort(pairwise_distance(Z[i:i + 256], X, hp.distance), axis=1, kind="stable")[:, :k]
        for i in range(0, Z.shape[0], 256)
    ])
    scores = np.zeros((Z.shape[0], len(clf.classes)))
    for c in range(len(clf.classes)):
        scores[:, c] = np.sum(y[nearest] == c, axis=1) / k
    return scores


# ---- naive Bayes -----------------------------------------------------------

def _train_nb(Z, y, m, hp, seed):
    priors = np.bincount(y, minlength=m) / y.size
    if hp.mode == "gaussian":
        means = np.array([Z[y == c].mean(axis=0) for c in range(m)])
        var = np.array([Z[y == c].var(axis=0, ddof=1) if np.sum(y == c) > 1 else np.zeros(Z.shape[1]) for c in range(m)])
        return {"log_prior": np.log(priors), "means": means, "variances": np.maximum(var, 1e-9)}
    return {"log_prior": np.log(priors), "X": Z.copy(), "y": y.astype(float)}


def _score_nb(clf, Z):
    st, hp = clf.state, clf.hyperparams.nb
    m = len(clf.classes)
    out = np.empty((Z.shape[0], m))
    if hp.mode == "gaussian":
        for c in range(m):
            mu, var = st["means"][c], st["variances"][c]
            out[:, c] = st["log_prior"][c] - 0.5 * np.sum(LOG_2PI + np.log(var) + (Z - mu) ** 2 / var, axis=1)
        return out
    h = hp.kernel_width
    X, y = st["X"], st["y"].astype(np.int64)
    for c in range(m):
        Xc = X[y == c]
        # per-feature Gaussian KDE, log-density summed over features
        u = (Z[:, None, :] - Xc[None, :, :]) / h
        logk = -0.5 * u * u - 0.5 * LOG_2PI - np.log(h)
        out[:, c] = st["log_prior"][c] + np.sum(logsumexp(logk, axis=1) - np.log(Xc.shape[0]), axis=1)
    return out


# ---- classification tree / bagged ensemble ---------------------------------

def _train_tree(Z, y, m, hp, seed):
    return {"tree": grow_tree(Z, y, m, hp.min_leaf_size)}


def _score_tree(clf, Z):
    return clf.state["tree"].proba(Z)


def _train_ensemble(Z, y, m, hp, seed):
    rng = np.random.default_rng(seed)
    trees = []
    for _ in range(hp.num_learning_cycles):
        idx = rng.integers(0, y.size, y.size) if hp.bootstrap else np.arange(y.size)
        trees.append(grow_tree(Z[idx], y[idx], m, hp.min_leaf_size))
    return {"trees": trees}


def _score_ensemble(clf, Z):
    return np.mean([t.proba(Z) for t in clf.state["trees"]], axis=0)


# ---- linear discriminant analysis ------------------------------------------

def regularized_covariance(Z, y, m, gamma):
    means = np.array([Z[y == c].mean(axis=0) for c in range(m)])
    resid = Z - means[y]
    dof = max(Z.shape[0] - m, 1)
    sigma = resid.T @ resid / dof
    return means, (1.0 - gamma) * sigma + gamma * np.diag(np.diag(sigma))


def _train_da(Z, y, m, hp, seed):
    means, cov = regularized_covariance(Z, y, m, hp.gamma)
    if not np.all(np.isfinite(cov)) or np.linalg.cond(cov) > 1e12 or np.any(np.diag(cov) <= 0):
        raise NumericError("pooled covariance is singular; use gamma > 0 to regularise it")
    coef = np.linalg.solve(cov, means.T).T  # (m, d)
    coef = np.where(np.abs(coef) <= hp.delta, 0.0, coef)
    priors = np.bincount(y, minlength=m) / y.size
    bias = -0.5 * np.einsum("kd,kd->k", coef, means) + np.log(priors)
    return {"coef": coef, "bias": bias, "means": means, "cov": cov}


def _score_da(clf, Z):
    return Z @ clf.state["coef"].T + clf.state["bias"]


# ---- SVM -------------------------------------------------------------------

def _train_svm(Z, y, m, hp, seed):
    return {"machines": train_one_vs_all(Z, y, m, hp.box_constraint, hp.kernel_scale)}


def _score_svm(clf, Z):
    s = clf.hyperparams.svm.kernel_scale
    return np.column_stack([mach.decision(Z, s) for mach in clf.state["machines"]])


_TRAINERS = {
    "knn": _train_knn,
    "nb": _train_nb,
    "tree": _train_tree,
    "ensemble": _train_ensemble,
    "da": _train_da,
    "svm": _train_svm,
}
_SCORERS = {
    "knn": _score_knn,
    "nb": _score_nb,
    "tree": _score_tree,
    "ensemble": _score_ensemble,
    "da": _score_da,
    "svm": _score_svm,
}


def load_classifier(path) -> TrainedClassifier:
    return TrainedClassifier.from_dict(json.loads(Path(path).read_text()))
