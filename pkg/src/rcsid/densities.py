"""Unimodal RCS densities: chi-square (Swerling), gamma and Lomax/GPD.

All densities live on the linear m^2 scale with support ``sigma >= 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import ClassVar

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import digamma, gammaln, polygamma, xlogy

from .errors import DegenerateDataError, EstimationError, InvalidModelError, ValidationError

GAMMA_ZERO_CLAMP = 1e-12


@dataclass(frozen=True)
class ChiSquareParams:
    """Swerling chi-square density with ``2m`` degrees of freedom and mean ``mean_rcs``."""

    m: float
    mean_rcs: float
    family: ClassVar[str] = "chi_square"

    def __post_init__(self):
        if not (self.m > 0 and self.mean_rcs > 0 and np.isfinite(self.mean_rcs)):
            raise InvalidModelError(f"chi-square needs m > 0 and mean_rcs > 0, got {self}")

    def logpdf(self, sigma):
        s = np.asarray(sigma, dtype=float)
        m, mu = self.m, self.mean_rcs
        z = m * np.maximum(s, 0.0) / mu
        out = np.log(m / mu) - gammaln(m) + xlogy(m - 1.0, z) - z
        return np.where(s >= 0, out, -np.inf)

    def rvs(self, rng, size):
        return rng.gamma(self.m, self.mean_rcs / self.m, size)

    def to_dict(self):
        return {"family": self.family, "m": self.m, "mean_rcs": self.mean_rcs}


@dataclass(frozen=True)
class GammaParams:
    """Gamma density with shape ``alpha`` and rate ``beta``."""

    alpha: float
    beta: float
    family: ClassVar[str] = "gamma"

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0 and np.isfinite(self.alpha) and np.isfinite(self.beta)):
            raise InvalidModelError(f"gamma needs alpha > 0 and beta > 0, got {self}")

    def logpdf(self, sigma):
        s = np.asarray(sigma, dtype=float)
        a, b = self.alpha, self.beta
        with np.errstate(divide="ignore"):
            out = a * np.log(b) + xlogy(a - 1.0, np.maximum(s, 0.0)) - gammaln(a) - b * s
        return np.where(s >= 0, out, -np.inf)

    def rvs(self, rng, size):
        return rng.gamma(self.alpha, 1.0 / self.beta, size)

    def to_dict(self):
        return {"family": self.family, "alpha": self.alpha, "beta": self.beta}


@dataclass(frozen=True)
class GpdParams:
    """Lomax (Pareto II) density with shape ``alpha`` and scale ``lam``.

    In GPD terms the shape is ``kappa = 1/alpha`` and the scale ``xi = lam/alpha``.
    """

    alpha: float
    lam: float
    family: ClassVar[str] = "gpd"

    def __post_init__(self):
        if not (self.alpha > 0 and self.lam > 0 and np.isfinite(self.alpha) and np.isfinite(self.lam)):
            raise InvalidModelError(f"GPD needs alpha > 0 and lam > 0, got {self}")

    @classmethod
    def from_gpd(cls, kappa, xi):
        return cls(1.0 / kappa, xi / kappa)

    def logpdf(self, sigma):
        s = np.asarray(sigma, dtype=float)
        out = np.log(self.alpha / self.lam) - (self.alpha + 1.0) * np.log1p(np.maximum(s, 0.0) / self.lam)
        return np.where(s >= 0, out, -np.inf)

    def rvs(self, rng, size):
        # inverse CDF: F(x) = 1 - (1 + x/lam)^-alpha
        u = rng.uniform(size=size)
        return self.lam * ((1.0 - u) ** (-1.0 / self.alpha) - 1.0)

    def to_dict(self):
        return {"family": self.family, "alpha": self.alpha, "lam": self.lam}


UNIMODAL = {p.family: p for p in (ChiSquareParams, GammaParams, GpdParams)}


def params_from_dict(d: dict):
    d = dict(d)
    cls = UNIMODAL.get(d.pop("family", None))
    if cls is None:
        raise ValidationError(f"unknown density family in {d}")
    return cls(**d)


def logpdf(params, sigma):
    return params.logpdf(sigma)


def pdf(params, sigma):
    return np.exp(params.logpdf(sigma))


def log_likelihood(params, data) -> float:
    """Sum of log densities; ``-inf`` if any datum has zero density."""
    x = _as_data(data)
    with np.errstate(divide="ignore", invalid="ignore"):
        ll = float(np.sum(params.logpdf(x)))
    return ll if not np.isnan(ll) else -np.inf


def lomax_log_likelihood(alpha, lam, data) -> float:
    """Closed-form Lomax log-likelihood ``n ln a - n ln l - (1+a) sum ln(1 + x/l)``."""
    x = _as_data(data)
    n = x.size
    return n * np.log(alpha) - n * np.log(lam) - (1.0 + alpha) * np.sum(np.log1p(x / lam))


def _as_data(data) -> np.ndarray:
    x = np.asarray(data, dtype=float).ravel()
    if x.size == 0:
        raise ValidationError("empty data")
    return x


def _check_nonneg(x):
    if not np.all(np.isfinite(x)) or np.any(x < 0):
        raise ValidationError("RCS data must be finite and non-negative")


def fit_chi_square(data, m: int = 1) -> ChiSquareParams:
    if m not in (1, 2):
        raise ValidationError(f"Swerling chi-square uses m in {{1, 2}}, got {m}")
    x = _as_data(data)
    _check_nonneg(x)
    mean = float(np.mean(x))
    if mean <= 0:
        raise DegenerateDataError("cannot fit chi-square to all-zero data")
    return ChiSquareParams(m, mean)


def fit_chi_square_iterative(data, m: int = 1, xatol: float = 1e-10) -> ChiSquareParams:
    """Same MLE as :func:`fit_chi_square`, found by bounded 1-D search on log mean.

    The sample mean always lies in [min, max] of the data, so that bracket is safe.
    """
    if m not in (1, 2):
        raise ValidationError(f"Swerling chi-square uses m in {{1, 2}}, got {m}")
    x = _as_data(data)
    _check_nonneg(x)
    hi = float(np.max(x))
    if hi <= 0:
        raise DegenerateDataError("cannot fit chi-square to all-zero data")
    lo = max(float(np.min(x)), hi * 1e-12)
    if lo == hi:
        return ChiSquareParams(m, hi)
    nll = lambda u: -float(np.sum(ChiSquareParams(m, math.exp(u)).logpdf(x)))
    res = minimize_scalar(nll, bounds=(math.log(lo), math.log(hi)), method="bounded",
                          options={"xatol": xatol})
    return ChiSquareParams(m, math.exp(res.x))


def gamma_moment_init(x) -> GammaParams:
    mean, var = float(np.mean(x)), float(np.var(x))
    if not var > 0:
        raise DegenerateDataError("gamma moment initialisation needs non-zero sample variance")
    return GammaParams(mean * mean / var, mean / var)


def fit_gamma_mle(data, tol: float = 1e-10, max_iter: int = 100) -> GammaParams:
    """Gamma MLE by Newton iteration on ``ln a - digamma(a) = ln mean - mean ln x``.

    Zeros are clamped to ``GAMMA_ZERO_CLAMP`` first.
    """
    x = _as_data(data)
    _check_nonneg(x)
    x = np.maximum(x, GAMMA_ZERO_CLAMP)
    init = gamma_moment_init(x)
    mean = float(np.mean(x))
    s = np.log(mean) - float(np.mean(np.log(x)))
    if not s > 0:
        raise DegenerateDataError("sample is degenerate for gamma MLE")

    alpha = init.alpha
    for _ in range(max_iter):
        f = np.log(alpha) - digamma(alpha) - s
        fp = 1.0 / alpha - polygamma(1, alpha)
        step = f / fp
        new = alpha - step
        while new <= 0:  # keep the shape positive
            step /= 2.0
            new = alpha - step
        if abs(new - alpha) < tol * max(1.0, alpha):
            return GammaParams(float(new), float(new / mean))
        alpha = new
    raise EstimationError("gamma MLE did not converge", last=GammaParams(alpha, alpha / mean))


def _lomax_grad_hess(u, v, x):
    """Gradient and Hessian of the Lomax log-likelihood in (ln alpha, ln lam)."""
    a, lam = np.exp(u), np.exp(v)
    t = x / lam
    s1 = np.sum(np.log1p(t))
    r = t / (1.0 + t)
    A = np.sum(r)
    B = np.sum(r / (1.0 + t))
    n = x.size
    g = np.array([n - a * s1, -n + (1.0 + a) * A])
    H = np.array([[-a * s1, a * A], [a * A, -(1.0 + a) * B]])
    return g, H


def _lomax_profile(v, x):
    """Profile log-likelihood over ln(lam) with alpha(lam) = n / sum ln(1 + x/lam)."""
    lam = np.exp(v)
    s1 = np.sum(np.log1p(x / lam))
    n = x.size
    if s1 <= 0:
        return -np.inf, np.inf
    a = n / s1
    return n * np.log(a) - n * np.log(lam) - s1 - n, a


def lomax_moment_init(x) -> GpdParams:
    mean, var = float(np.mean(x)), float(np.var(x))
    cv2 = var / (mean * mean)
    alpha = 2.0 * cv2 / (cv2 - 1.0) if cv2 > 1.05 else 40.0
    return GpdParams(alpha, mean * (alpha - 1.0) if alpha > 1 else mean)


def _newton_lomax(x, u, v, gtol, max_iter=200):
    n = x.size
    ll = lambda uu, vv: lomax_log_likelihood(np.exp(uu), np.exp(vv), x)
    cur = ll(u, v)
    for _ in range(max_iter):
        g, H = _lomax_grad_hess(u, v, x)
        if np.linalg.norm(g) / n < gtol:
            return u, v, True
        eig = np.linalg.eigvalsh(H)
        if eig.max() >= 0 or eig.min() / eig.max() > 1e12:
            return u, v, False
        d = -np.linalg.solve(H, g)
        step = 1.0
        d_norm = np.linalg.norm(d)
        if d_norm > 2.0:
            step = 2.0 / d_norm
        while step > 1e-12:
            nu, nv = u + step * d[0], v + step * d[1]
            new = ll(nu, nv)
            if np.isfinite(new) and new >= cur - 1e-12 * abs(cur):
                break
            step /= 2.0
        else:
            return u, v, False
        u, v, cur = nu, nv, new
        if abs(u) > 40 or abs(v) > 60:
            return u, v, False
    return u, v, False


def fit_gpd_mle(data, gtol: float = 1e-8) -> GpdParams:
    """Lomax MLE by safeguarded Newton-Raphson in log-parameters.

    ``gtol`` bounds the gradient norm of the per-sample log-likelihood. When
    Newton stalls (indefinite or ill-conditioned Hessian) the fit falls back
    to golden-section search on the profile likelihood in ``lam``.
    """
    x = _as_data(data)
    _check_nonneg(x)
    mean = float(np.mean(x))
    if mean <= 0:
        raise DegenerateDataError("cannot fit GPD to all-zero data")
    init = lomax_moment_init(x)
    u, v, ok = _newton_lomax(x, np.log(init.alpha), np.log(init.lam), gtol)
    if ok:
        return GpdParams(float(np.exp(u)), float(np.exp(v)))

    # profile fallback: coarse scan, then golden section inside the best bracket
    grid = np.log(mean) + np.linspace(np.log(1e-6), np.log(1e6), 121)
    prof = np.array([_lomax_profile(g, x)[0] for g in grid])
    k = int(np.argmax(prof))
    if k == 0 or k == grid.size - 1:
        raise EstimationError("GPD likelihood has no interior maximum (data not heavy-tailed enough)",
                              last=GpdParams(_lomax_profile(grid[k], x)[1], float(np.exp(grid[k]))))
    lo, hi = grid[k - 1], grid[k + 1]
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    c, d = hi - invphi * (hi - lo), lo + invphi * (hi - lo)
    fc, fd = _lomax_profile(c, x)[0], _lomax_profile(d, x)[0]
    while hi - lo > 1e-13:
        if fc > fd:
            hi, d, fd = d, c, fc
            c = hi - invphi * (hi - lo)
            fc = _lomax_profile(c, x)[0]
        else:
            lo, c, fc = c, d, fd
            d = lo + invphi * (hi - lo)
            fd = _lomax_profile(d, x)[0]
    v = 0.5 * (lo + hi)
    a = _lomax_profile(v, x)[1]
    u2, v2, ok = _newton_lomax(x, np.log(a), v, gtol)
    if ok:
        return GpdParams(float(np.exp(u2)), float(np.exp(v2)))
    g, _ = _lomax_grad_hess(np.log(a), v, x)
    if np.linalg.norm(g) / x.size < 1e-6:
        return GpdParams(float(a), float(np.exp(v)))
    raise EstimationError("GPD MLE did not converge", last=GpdParams(float(a), float(np.exp(v))))
