"""Bayes MAP classification of RCS signatures from per-class fitted densities.

Azimuth samples are treated as i.i.d., so a signature's class log-likelihood
is the sum of per-sample log densities. Priors are uniform.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import densities as dens
from . import gmm
from .errors import EstimationError, IndeterminateClassificationError, NumericError, ValidationError
from .signatures import Dataset, RcsSignature

SL_FAMILIES = ("swerling12", "swerling34", "gamma", "gpd", "gmm")
MIN_TRAIN_SAMPLES = 10
GMM_K_MAX = 5
RCS_CLAMP = 1e-12
SCHEMA_VERSION = 1


def gmm_transform(rcs_m2) -> np.ndarray:
    """Mixtures are fitted on dBsm; zeros are clamped to -120 dBsm."""
    return 10.0 * np.log10(np.maximum(np.asarray(rcs_m2, dtype=float), RCS_CLAMP))


def fit_family(family: str, rcs_m2, seed: int = 0, paper_aic: bool = False, k_max: int = GMM_K_MAX):
    if family == "swerling12":
        return dens.fit_chi_square(rcs_m2, m=1), {}
    if family == "swerling34":
        return dens.fit_chi_square(rcs_m2, m=2), {}
    if family == "gamma":
        return dens.fit_gamma_mle(rcs_m2), {"zero_clamp": dens.GAMMA_ZERO_CLAMP}
    if family == "gpd":
        return dens.fit_gpd_mle(rcs_m2), {}
    if family == "gmm":
        sel = gmm.select_k(gmm_transform(rcs_m2), k_max, seed=seed, paper_penalty=paper_aic)
        info = {"scale": "dbsm", "k": sel.best_k, "aic": {str(k): v for k, v in sel.scores.items()},
                "aic_mode": "paper" if paper_aic else "free-params"}
        return sel.fits[sel.best_k], info
    raise ValidationError(f"unknown SL family {family!r}; expected one of {SL_FAMILIES}")


def sample_loglik(family: str, params, rcs_m2) -> np.ndarray:
    x = np.asarray(rcs_m2, dtype=float)
    if family == "gmm":
        return params.logpdf(gmm_transform(x))
    if family == "gamma":
        x = np.maximum(x, dens.GAMMA_ZERO_CLAMP)
    return params.logpdf(x)


@dataclass
class SlModel:
    family: str
    classes: tuple[str, ...]
    per_class: dict[str, object]
    priors: dict[str, float]
    meta: dict[str, dict] = field(default_factory=dict)

    def to_dict(self):
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "sl",
            "family": self.family,
            "classes": list(self.classes),
            "per_class": {c: p.to_dict() for c, p in self.per_class.items()},
            "priors": self.priors,
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, d):
        if d.get("schema_version") != SCHEMA_VERSION:
            raise ValidationError(f"unsupported model schema version {d.get('schema_version')}")
        load = gmm.GmmParams.from_dict if d["family"] == "gmm" else dens.params_from_dict
        return cls(d["family"], tuple(d["classes"]), {c: load(p) for c, p in d["per_class"].items()},
                   {c: float(v) for c, v in d["priors"].items()}, d.get("meta", {}))

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=1))


def train_sl(dataset: Dataset, family: str, seed: int = 0, paper_aic: bool = False,
             k_max: int = GMM_K_MAX) -> SlModel:
    """Fit ``family`` to each class's pooled training samples."""
    if family not in SL_FAMILIES:
        raise ValidationError(f"unknown SL family {family!r}; expected one of {SL_FAMILIES}")
    classes = tuple(sorted(dataset.class_names))
    per_class, meta = {}, {}
    for name in classes:
        data = dataset.pooled(name)
        if data.size < MIN_TRAIN_SAMPLES:
            raise ValidationError(f"class {name!r} has {data.size} training samples, need >= {MIN_TRAIN_SAMPLES}")
        try:
            per_class[name], meta[name] = fit_family(family, data, seed, paper_aic, k_max)
        except (NumericError, ValidationError) as exc:
            raise type(exc)(f"class {name!r}: {exc}") from exc
    priors = {c: 1.0 / len(classes) for c in classes}
    return SlModel(family, classes, per_class, priors, meta)


def log_posteriors(model: SlModel, rcs_m2) -> np.ndarray:
    """Unnormalised log posteriors, in ``model.classes`` order."""
    x = np.asarray(rcs_m2, dtype=float)
    if x.size == 0:
        raise ValidationError("cannot classify an empty signature")
    out = np.empty(len(model.classes))
    with np.errstate(divide="ignore", invalid="ignore"):
        for k, c in enumerate(model.classes):
            ll = float(np.sum(sample_loglik(model.family, model.per_class[c], x)))
            out[k] = (ll if not np.isnan(ll) else -np.inf) + np.log(model.priors[c])
    return out


def decide(classes, scores) -> str:
    """Argmax with ties going to the lexicographically smallest class name."""
    scores = np.asarray(scores, dtype=float)
    if not np.any(np.isfinite(scores)) and not np.any(scores == np.inf):
        raise IndeterminateClassificationError("every class has zero likelihood")
    best = np.max(scores)
    return min(c for c, s in zip(classes, scores) if s == best)


def classify_sl(model: SlModel, sig: RcsSignature | np.ndarray) -> tuple[str, dict[str, float]]:
    rcs = sig.rcs_m2 if isinstance(sig, RcsSignature) else sig
    lp = log_posteriors(model, rcs)
    return decide(model.classes, lp), dict(zip(model.classes, lp.tolist()))


def classify_sl_refit(model: SlModel, sig: RcsSignature | np.ndarray, seed: int = 0):
    """Classify after re-estimating the family on the test signature once per class.

    The refitted densities are discarded; the decision is the same as
    :func:`classify_sl`. This mode only exists to reproduce the cost of
    fitting every test signature when benchmarking.
    """
    rcs = sig.rcs_m2 if isinstance(sig, RcsSignature) else np.asarray(sig, dtype=float)
    for c in model.classes:
        try:
            if model.family == "gmm":
                gmm.fit_em(gmm_transform(rcs), model.per_class[c].k, init_seed=seed)
            elif model.family in ("swerling12", "swerling34"):
                # iterative search rather than the closed form, as a generic MLE routine would do
                dens.fit_chi_square_iterative(rcs, m=1 if model.family == "swerling12" else 2)
            else:
                fit_family(model.family, rcs, seed)
        except (EstimationError, NumericError, ValidationError):
            pass
    return classify_sl(model, rcs)


def load_sl_model(path) -> SlModel:
    return SlModel.from_dict(json.loads(Path(path).read_text()))
