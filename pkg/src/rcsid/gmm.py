"""One-dimensional Gaussian mixture densities fitted by EM, with AIC selection of K."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .errors import ComponentCollapseError, EstimationError, InvalidModelError, ValidationError

LOG_2PI = math.log(2.0 * math.pi)
EM_EPSILON = 1e-5
EM_MAX_ITER = 500
EM_RESTARTS = 5
VAR_FLOOR_FRACTION = 1e-2
COLLAPSE_MASS = 1e-10


@dataclass(frozen=True, eq=False)
class GmmParams:
    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    family = "gmm"

    def __post_init__(self):
        w, mu, var = (np.atleast_1d(np.asarray(a, dtype=float)).copy() for a in (self.weights, self.means, self.variances))
        for a in (w, mu, var):
            a.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", mu)
        object.__setattr__(self, "variances", var)
        if not (w.shape == mu.shape == var.shape) or w.ndim != 1 or w.size == 0:
            raise InvalidModelError("weights, means and variances must be equal-length 1-D arrays")
        if abs(w.sum() - 1.0) > 1e-9 or np.any(w <= 0) or np.any(w > 1):
            raise InvalidModelError(f"mixture weights must lie in (0, 1] and sum to 1, got {w}")
        if np.any(var <= 0) or not np.all(np.isfinite(np.concatenate([mu, var]))):
            raise InvalidModelError("component variances must be positive and finite")

    @property
    def k(self) -> int:
        return self.weights.size

    def vector(self) -> np.ndarray:
        """Flat parameter vector (weights, means, std devs) used for the convergence test."""
        return np.concatenate([self.weights, self.means, np.sqrt(self.variances)])

    def component_logpdf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float).reshape(-1, 1)
        return -0.5 * (LOG_2PI + np.log(self.variances) + (x - self.means) ** 2 / self.variances)

    def logpdf(self, x):
        x = np.asarray(x, dtype=float)
        out = logsumexp(self.component_logpdf(x) + np.log(self.weights), axis=1)
        return out.reshape(x.shape)

    def to_dict(self):
        return {
            "family": self.family,
            "weights": self.weights.tolist(),
            "means": self.means.tolist(),
            "variances": self.variances.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(d["weights"], d["means"], d["variances"])


@dataclass
class EmTrace:
    iterations: int = 0
    loglik_history: list[float] = field(default_factory=list)
    converged: bool = False
    epsilon: float = EM_EPSILON
    restarts_failed: int = 0


def gmm_pdf(params: GmmParams, x):
    return np.exp(params.logpdf(x))


def gmm_log_likelihood(params: GmmParams, data) -> float:
    return math.fsum(params.logpdf(np.asarray(data, dtype=float).ravel()))


def e_step(params: GmmParams, data) -> np.ndarray:
    """Posterior component responsibilities, shape (n, K); rows sum to one."""
    joint = params.component_logpdf(data) + np.log(params.weights)
    return np.exp(joint - logsumexp(joint, axis=1, keepdims=True))


def m_step(resp, data, var_floor: float = 0.0) -> GmmParams:
    """Closed-form weighted-moment updates; variances floored at ``var_floor``."""
    resp = np.asarray(resp, dtype=float)
    x = np.asarray(data, dtype=float).ravel()
    nk = resp.sum(axis=0)
    if np.any(nk < COLLAPSE_MASS):
        raise ComponentCollapseError(f"component(s) {np.flatnonzero(nk < COLLAPSE_MASS).tolist()} lost all responsibility")
    weights = nk / x.size
    means = resp.T @ x / nk
    variances = np.einsum("ik,ik->k", resp, (x[:, None] - means) ** 2) / nk
    variances = np.maximum(variances, var_floor)
    weights = weights / weights.sum()
    return GmmParams(weights, means, variances)


def variance_floor(data) -> float:
    v = float(np.var(data))
    return VAR_FLOOR_FRACTION * v if v > 0 else VAR_FLOOR_FRACTION


def kmeanspp_init(data, k: int, rng: np.random.Generator, var_floor: float, lloyd_iter: int = 100) -> GmmParams:
    """Seed K centers k-means++ style, refine with Lloyd steps, then take partition moments."""
    x = np.asarray(data, dtype=float).ravel()
    centers = [x[rng.integers(x.size)]]
    for _ in range(1, k):
        d2 = np.min((x[:, None] - np.array(centers)[None, :]) ** 2, axis=1)
        total = d2.sum()
        if total <= 0:
            raise ComponentCollapseError("not enough distinct values to seed components")
        centers.append(x[rng.choice(x.size, p=d2 / total)])
    centers = np.array(centers)
    labels = np.argmin(np.abs(x[:, None] - centers[None, :]), axis=1)
    # Lloyd refinement; EM from raw seeds tends to lock onto narrow spikes
    for _ in range(lloyd_iter):
        if np.bincount(labels, minlength=k).min() == 0:
            break
        centers = np.array([x[labels == j].mean() for j in range(k)])
        new = np.argmin(np.abs(x[:, None] - centers[None, :]), axis=1)
        if np.array_equal(new, labels):
            break
        labels = new
    resp = np.zeros((x.size, k))
    resp[np.arange(x.size), labels] = 1.0
    return m_step(resp, x, var_floor)


def _run_em(x, init: GmmParams, var_floor, eps, max_iter):
    params = init
    trace = EmTrace(epsilon=eps)
    trace.loglik_history.append(gmm_log_likelihood(params, x))
    for it in range(1, max_iter + 1):
        new = m_step(e_step(params, x), x, var_floor)
        trace.loglik_history.append(gmm_log_likelihood(new, x))
        trace.iterations = it
        step = np.linalg.norm(new.vector() - params.vector())
        params = new
        if step < eps:
            trace.converged = True
            break
    return params, trace


def fit_em(
    data,
    k: int,
    init_seed: int = 0,
    eps: float = EM_EPSILON,
    max_iter: int = EM_MAX_ITER,
    restarts: int = EM_RESTARTS,
    reinit_attempts: int = 3,
) -> tuple[GmmParams, EmTrace]:
    """Fit a K-component mixture by EM; best of ``restarts`` seeded runs.

    Each run starts from a k-means++ seeding and iterates until the parameter
    vector moves less than ``eps`` or ``max_iter`` is reached. A run whose
    component collapses is re-seeded up to ``reinit_attempts`` times.
    """
    x = np.asarray(data, dtype=float).ravel()
    if k < 1:
        raise ValidationError("K must be at least 1")
    if x.size < 2 * k:
        raise ValidationError(f"EM with K={k} needs at least {2 * k} samples, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise ValidationError("EM data must be finite")
    floor = variance_floor(x)
    best = None
    failed = 0
    for child in np.random.SeedSequence([init_seed, k]).spawn(restarts):
        rng = np.random.default_rng(child)
        for _ in range(reinit_attempts):
            try:
                params, trace = _run_em(x, kmeanspp_init(x, k, rng, floor), floor, eps, max_iter)
            except ComponentCollapseError:
                continue
            if best is None or trace.loglik_history[-1] > best[1].loglik_history[-1]:
                best = (params, trace)
            break
        else:
            failed += 1
    if best is None:
        raise EstimationError(f"all {restarts} EM restarts collapsed for K={k}")
    best[1].restarts_failed = failed
    return best


def n_free_params(k: int) -> int:
    # K means + K variances + (K - 1) free weights
    return 3 * k - 1


def aic_score(params: GmmParams, data, paper_penalty: bool = False) -> float:
    """``-2 loglik + 2p``; ``paper_penalty`` uses p = K instead of the free-parameter count."""
    p = params.k if paper_penalty else n_free_params(params.k)
    return -2.0 * gmm_log_likelihood(params, data) + 2.0 * p


@dataclass
class KSelection:
    best_k: int
    scores: dict[int, float]
    fits: dict[int, GmmParams]
    failures: dict[int, str]


def select_k(data, k_max: int, seed: int = 0, paper_penalty: bool = False, tie_tol: float = 1e-9) -> KSelection:
    """Fit K = 1..k_max and pick the lowest AIC; near-ties go to the smaller K."""
    if k_max < 1:
        raise ValidationError("k_max must be at least 1")
    scores, fits, failures = {}, {}, {}
    for k in range(1, k_max + 1):
        try:
            params, _ = fit_em(data, k, init_seed=seed)
        except (EstimationError, ValidationError) as exc:
            failures[k] = str(exc)
            continue
        fits[k] = params
        scores[k] = aic_score(params, data, paper_penalty)
    if not scores:
        raise EstimationError(f"no mixture could be fitted for K in 1..{k_max}: {failures}")
    best = None
    for k in sorted(scores):
        if best is None or scores[k] < scores[best] - tie_tol:
            best = k
    return KSelection(best, scores, fits, failures)
