"""Bayesian optimisation of classifier hyperparameters.

A Gaussian-process surrogate (squared-exponential ARD kernel) is refitted
after every evaluation and the next point maximises expected improvement.
All dimensions are mapped to ``[0, 1]``; categorical ones are one-hot
embedded for the GP.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np
from scipy.optimize import minimize
from scipy.stats import norm
from scipy.stats.qmc import LatinHypercube

from .errors import ValidationError
from .ml import MlHyperparams, train
from .ml.hyperparams import FAMILY_PARAMS

KINDS = ("log-real", "real", "integer", "categorical")
NOISE_FLOOR = 1e-6
N_CANDIDATES = 1024


@dataclass(frozen=True)
class Dim:
    name: str
    kind: str
    low: float | None = None
    high: float | None = None
    levels: tuple = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"dimension kind must be one of {KINDS}")
        if self.kind == "categorical":
            if not self.levels:
                raise ValidationError(f"categorical dimension {self.name!r} has no levels")
        else:
            if not (np.isfinite(self.low) and np.isfinite(self.high) and self.low < self.high):
                raise ValidationError(f"dimension {self.name!r} needs finite bounds with low < high")
            if self.kind == "log-real" and self.low <= 0:
                raise ValidationError(f"log-real dimension {self.name!r} needs a positive lower bound")

    def decode(self, u: float):
        u = min(max(float(u), 0.0), 1.0)
        if self.kind == "categorical":
            return self.levels[min(int(u * len(self.levels)), len(self.levels) - 1)]
        if self.kind == "log-real":
            return float(math.exp(math.log(self.low) + u * (math.log(self.high) - math.log(self.low))))
        v = self.low + u * (self.high - self.low)
        return int(round(v)) if self.kind == "integer" else float(v)

    def width(self) -> int:
        return len(self.levels) if self.kind == "categorical" else 1

    def embed(self, u: float) -> list[float]:
        if self.kind == "categorical":
            onehot = [0.0] * len(self.levels)
            onehot[self.levels.index(self.decode(u))] = 1.0
            return onehot
        if self.kind == "integer":
            # snap to the value actually evaluated
            return [(self.decode(u) - self.low) / (self.high - self.low)]
        return [min(max(float(u), 0.0), 1.0)]


@dataclass(frozen=True)
class SearchSpace:
    dims: tuple[Dim, ...]

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(self.dims))
        if not self.dims:
            raise ValidationError("search space has no dimensions")

    def decode(self, u) -> dict[str, Any]:
        return {d.name: d.decode(v) for d, v in zip(self.dims, u)}

    def embed(self, u) -> np.ndarray:
        return np.array([x for d, v in zip(self.dims, u) for x in d.embed(v)])


@dataclass
class OptResult:
    best_point: dict[str, Any]
    best_objective: float
    trace: list[tuple[dict[str, Any], float]]
    surrogate_snapshots: list[dict[str, Any]] = field(default_factory=list)

    def incumbent_trace(self) -> list[float]:
        return np.minimum.accumulate([loss for _, loss in self.trace]).tolist()

    def write_trace_csv(self, path) -> None:
        names = list(self.trace[0][0]) if self.trace else []
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["iteration", *names, "loss"])
            for i, (pt, loss) in enumerate(self.trace, start=1):
                w.writerow([i, *(pt[n] for n in names), repr(float(loss))])

    def write_surrogate_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["iteration", "x", "y", "mean", "variance"])
            for snap in self.surrogate_snapshots:
                for x, y, m, v in zip(snap["x"], snap["y"], snap["mean"], snap["variance"]):
                    w.writerow([snap["iteration"], x, y, repr(m), repr(v)])


class GaussianProcess:
    """Zero-mean GP on standardised targets with an ARD squared-exponential kernel.

    Length-scales and signal variance are fitted by marginal likelihood; the
    observation noise stays at ``noise_floor``.
    """

    def __init__(self, noise_floor=NOISE_FLOOR):
        self.noise_floor = noise_floor

    @staticmethod
    def _kernel(A, B, log_ell, log_sf2):
        ell = np.exp(log_ell)
        d2 = np.sum(((A[:, None, :] - B[None, :, :]) / ell) ** 2, axis=2)
        return np.exp(log_sf2 - 0.5 * d2)

    def _nlml(self, theta, X, y):
        d = X.shape[1]
        log_ell, log_sf2 = theta[:d], theta[d]
        sn2 = self.noise_floor
        K = self._kernel(X, X, log_ell, log_sf2)
        n = y.size
        try:
            L = np.linalg.cholesky(K + sn2 * np.eye(n))
        except np.linalg.LinAlgError:
            return 1e25, np.zeros_like(theta)
        alpha = np.linalg.solve(L.T, np.linalg.solve(L, y))
        nlml = 0.5 * y @ alpha + np.sum(np.log(np.diag(L))) + 0.5 * n * math.log(2 * math.pi)
        Kinv = np.linalg.solve(L.T, np.linalg.solve(L, np.eye(n)))
        W = np.outer(alpha, alpha) - Kinv  # d(lml)/dK = 0.5 tr(W dK)
        grad = np.empty_like(theta)
        for j in range(d):
            dK = K * ((X[:, None, j] - X[None, :, j]) ** 2) / np.exp(2 * log_ell[j])
            grad[j] = -0.5 * np.sum(W * dK)
        grad[d] = -0.5 * np.sum(W * K)
        return nlml, grad

    def fit(self, X, y, rng):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        self.y_mean = y.mean()
        self.y_std = y.std() if y.std() > 0 else 1.0
        ys = (y - self.y_mean) / self.y_std
        d = X.shape[1]
        bounds = [(math.log(1e-2), math.log(1e1))] * d + [(math.log(1e-2), math.log(1e2))]
        starts = [np.concatenate([np.full(d, math.log(0.3)), [0.0]])]
        for _ in range(2):
            starts.append(np.array([rng.uniform(lo, hi) for lo, hi in bounds]))
        best = None
        for x0 in starts:
            res = minimize(self._nlml, x0, args=(X, ys), jac=True, method="L-BFGS-B", bounds=bounds)
            if best is None or res.fun < best.fun:
                best = res
        self.theta = best.x
        self.X = X
        th = self.theta
        K = self._kernel(X, X, th[:d], th[d]) + self.noise_floor * np.eye(X.shape[0])
        self.L = np.linalg.cholesky(K)
        self.alpha = np.linalg.solve(self.L.T, np.linalg.solve(self.L, ys))
        return self

    def predict(self, Xs):
        Xs = np.atleast_2d(Xs)
        d = self.X.shape[1]
        Ks = self._kernel(Xs, self.X, self.theta[:d], self.theta[d])
        mean = Ks @ self.alpha
        v = np.linalg.solve(self.L, Ks.T)
        var = np.maximum(np.exp(self.theta[d]) - np.sum(v * v, axis=0), 1e-12)
        return mean * self.y_std + self.y_mean, var * self.y_std ** 2


def expected_improvement(mean, var, best):
    sd = np.sqrt(var)
    z = (best - mean) / sd
    return (best - mean) * norm.cdf(z) + sd * norm.pdf(z)


def _evaluate(objective, point):
    try:
        loss = float(objective(point))
    except Exception:  # noqa: BLE001 - any failing point is recorded as +inf
        return math.inf
    return loss if not math.isnan(loss) else math.inf


def grid_points(space: SearchSpace, per_dim: int = 5) -> list[dict[str, Any]]:
    axes = []
    for d in space.dims:
        if d.kind == "categorical":
            axes.append(list(d.levels))
        elif d.kind == "integer":
            axes.append(sorted({d.decode(u) for u in np.linspace(0, 1, per_dim)}))
        else:
            axes.append([d.decode(u) for u in np.linspace(0, 1, per_dim)])
    return [dict(zip([d.name for d in space.dims], combo)) for combo in itertools.product(*axes)]


def grid_search(objective: Callable, space: SearchSpace, per_dim: int = 5) -> OptResult:
    trace = [(pt, _evaluate(objective, pt)) for pt in grid_points(space, per_dim)]
    k = int(np.argmin([l for _, l in trace]))
    return OptResult(trace[k][0], trace[k][1], trace)


def optimize(
    objective: Callable[[dict[str, Any]], float],
    space: SearchSpace,
    budget: int = 30,
    seed: int = 0,
    n_candidates: int = N_CANDIDATES,
    snapshot_every: int | None = None,
    snapshot_resolution: int = 25,
) -> OptResult:
    """Minimise ``objective`` over ``space`` with at most ``budget`` evaluations."""
    if budget < 5:
        raise ValidationError("budget must be at least 5 evaluations")
    rng = np.random.default_rng(seed)
    ndim = len(space.dims)
    U: list[np.ndarray] = []
    losses: list[float] = []
    trace: list[tuple[dict, float]] = []
    snapshots = []

    def record(u):
        pt = space.decode(u)
        loss = _evaluate(objective, pt)
        U.append(np.asarray(u, dtype=float))
        losses.append(loss)
        trace.append((pt, loss))

    n_init = min(5, budget)
    for u in LatinHypercube(d=ndim, seed=rng).random(n_init):
        record(u)

    while len(trace) < budget:
        ok = np.isfinite(losses)
        if ok.sum() < 2:
            record(rng.uniform(size=ndim))
            continue
        X = np.array([space.embed(u) for u, good in zip(U, ok) if good])
        y = np.asarray(losses)[ok]
        gp = GaussianProcess().fit(X, y, rng)
        best = y.min()

        cand = rng.uniform(size=(n_candidates, ndim))
        ei = expected_improvement(*gp.predict(np.array([space.embed(c) for c in cand])), best)
        # polish the most promising candidates locally
        for k in np.argsort(ei)[::-1][:3]:
            f = lambda u: -expected_improvement(*gp.predict(space.embed(u)[None, :]), best)[0]
            res = minimize(f, cand[k], method="L-BFGS-B", bounds=[(0.0, 1.0)] * ndim)
            if -res.fun > ei[k]:
                cand[k], ei[k] = res.x, -res.fun
        seen = {tuple(sorted(space.decode(u).items())) for u in U}
        order = np.argsort(ei)[::-1]
        pick = next((k for k in order if tuple(sorted(space.decode(cand[k]).items())) not in seen), order[0])
        record(cand[pick])

        if snapshot_every and len(trace) % snapshot_every == 0:
            snapshots.append(_snapshot(gp, space, len(trace), snapshot_resolution))

    finite = [l if np.isfinite(l) else np.inf for l in losses]
    k = int(np.argmin(finite))
    return OptResult(trace[k][0], trace[k][1], trace, snapshots)


def _snapshot(gp, space, iteration, res):
    """Surrogate mean/variance over the first one or two dimensions (others at 0.5)."""
    axes = np.linspace(0.0, 1.0, res)
    xs, ys, pts = [], [], []
    second = len(space.dims) > 1
    for a in axes:
        for b in (axes if second else [0.5]):
            u = np.full(len(space.dims), 0.5)
            u[0] = a
            if second:
                u[1] = b
            dec = space.decode(u)
            xs.append(dec[space.dims[0].name])
            ys.append(dec[space.dims[1].name] if second else "")
            pts.append(space.embed(u))
    mean, var = gp.predict(np.array(pts))
    return {"iteration": iteration, "x": xs, "y": ys, "mean": mean.tolist(), "variance": var.tolist()}


DEFAULT_SPACES = {
    "knn": SearchSpace((Dim("num_neighbors", "integer", 1, 30), Dim("distance", "categorical", levels=("euclidean", "chebyshev", "cityblock")))),
    "tree": SearchSpace((Dim("min_leaf_size", "integer", 1, 100),)),
    "da": SearchSpace((Dim("delta", "log-real", 1e-6, 1e3), Dim("gamma", "real", 0.0, 1.0))),
    "nb": SearchSpace((Dim("kernel_width", "log-real", 1e-3, 1e2),)),
    "svm": SearchSpace((Dim("box_constraint", "log-real", 1e-3, 1e3), Dim("kernel_scale", "log-real", 1e-3, 1e3))),
    "ensemble": SearchSpace((Dim("num_learning_cycles", "integer", 10, 100), Dim("min_leaf_size", "integer", 1, 100))),
}


def stratified_split(labels: Sequence[str], holdout_fraction: float, seed: int):
    """Per-class seeded shuffle; ``round(n_c * holdout_fraction)`` of each class is held out."""
    if not 0 < holdout_fraction < 1:
        raise ValidationError("split fraction must lie in (0, 1)")
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    train_idx, hold_idx = [], []
    for c in sorted(set(labels.tolist())):
        idx = np.flatnonzero(labels == c)
        idx = idx[rng.permutation(idx.size)]
        k = int(round(idx.size * holdout_fraction))
        hold_idx.extend(idx[:k].tolist())
        train_idx.extend(idx[k:].tolist())
    return np.sort(train_idx), np.sort(hold_idx)


def holdout_objective(features, labels, family: str, split_fraction: float = 0.2, seed: int = 0,
                      base: MlHyperparams | None = None) -> Callable[[dict[str, Any]], float]:
    """Closure mapping a hyperparameter point to holdout misclassification rate."""
    if family not in FAMILY_PARAMS:
        raise ValidationError(f"unknown ML family {family!r}")
    X = np.asarray(features, dtype=float)
    y = np.asarray([str(c) for c in labels])
    tr, ho = stratified_split(y, split_fraction, seed)
    base = base or MlHyperparams()
    if family == "nb":
        base = base.with_family("nb", mode="kernel")

    def objective(point: dict[str, Any]) -> float:
        try:
            clf = train(family, X[tr], y[tr], base.with_family(family, **point), seed=seed)
            pred = np.asarray(clf.predict_batch(X[ho]))
        except Exception:  # noqa: BLE001 - failed training scores as +inf
            return math.inf
        return float(np.mean(pred != y[ho]))

    return objective
