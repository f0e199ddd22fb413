"""Hyperparameter containers for the six feature-based classifiers."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields, replace

from ..errors import ValidationError

DISTANCES = ("euclidean", "chebyshev", "cityblock")
NB_MODES = ("gaussian", "kernel")


@dataclass(frozen=True)
class KnnParams:
    num_neighbors: int = 1
    distance: str = "euclidean"

    def validate(self):
        if self.num_neighbors < 1:
            raise ValidationError("num_neighbors must be >= 1")
        if self.distance not in DISTANCES:
            raise ValidationError(f"distance must be one of {DISTANCES}")


@dataclass(frozen=True)
class TreeParams:
    min_leaf_size: int = 1

    def validate(self):
        if self.min_leaf_size < 1:
            raise ValidationError("min_leaf_size must be >= 1")


@dataclass(frozen=True)
class DaParams:
    delta: float = 0.0
    gamma: float = 0.0

    def validate(self):
        if self.delta < 0:
            raise ValidationError("delta must be >= 0")
        if not 0 <= self.gamma <= 1:
            raise ValidationError("gamma must lie in [0, 1]")


@dataclass(frozen=True)
class NbParams:
    mode: str = "gaussian"
    kernel_width: float = 0.5

    def validate(self):
        if self.mode not in NB_MODES:
            raise ValidationError(f"naive Bayes mode must be one of {NB_MODES}")
        if not self.kernel_width > 0:
            raise ValidationError("kernel_width must be > 0")


@dataclass(frozen=True)
class SvmParams:
    box_constraint: float = 1.0
    kernel_scale: float = 1.0
    coding: str = "onevsall"

    def validate(self):
        if not self.box_constraint > 0:
            raise ValidationError("box_constraint must be > 0")
        if not self.kernel_scale > 0:
            raise ValidationError("kernel_scale must be > 0")
        if self.coding != "onevsall":
            raise ValidationError("only one-vs-all coding is supported")


@dataclass(frozen=True)
class EnsembleParams:
    num_learning_cycles: int = 30
    min_leaf_size: int = 1
    bootstrap: bool = True

    def validate(self):
        if self.num_learning_cycles < 1:
            raise ValidationError("num_learning_cycles must be >= 1")
        if self.min_leaf_size < 1:
            raise ValidationError("min_leaf_size must be >= 1")


FAMILY_PARAMS = {
    "knn": KnnParams,
    "tree": TreeParams,
    "da": DaParams,
    "nb": NbParams,
    "svm": SvmParams,
    "ensemble": EnsembleParams,
}
ML_FAMILIES = tuple(FAMILY_PARAMS)


@dataclass(frozen=True)
class MlHyperparams:
    knn: KnnParams = field(default_factory=KnnParams)
    tree: TreeParams = field(default_factory=TreeParams)
    da: DaParams = field(default_factory=DaParams)
    nb: NbParams = field(default_factory=NbParams)
    svm: SvmParams = field(default_factory=SvmParams)
    ensemble: EnsembleParams = field(default_factory=EnsembleParams)

    def for_family(self, family: str):
        if family not in FAMILY_PARAMS:
            raise ValidationError(f"unknown ML family {family!r}; expected one of {ML_FAMILIES}")
        return getattr(self, family)

    def with_family(self, family: str, **overrides) -> "MlHyperparams":
        return replace(self, **{family: replace(self.for_family(family), **overrides)})

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(**{f.name: FAMILY_PARAMS[f.name](**d[f.name]) for f in fields(cls) if f.name in d})


# Values found by Bayesian optimisation on 25 GHz HH-polarised training data.
PRESETS = {
    "25GHz_HH": MlHyperparams(
        knn=KnnParams(num_neighbors=1, distance="chebyshev"),
        tree=TreeParams(min_leaf_size=26),
        da=DaParams(delta=7.9588e-5, gamma=0.2689),
        nb=NbParams(mode="kernel", kernel_width=0.15096),
        svm=SvmParams(box_constraint=473.16, kernel_scale=0.0014583),
        ensemble=EnsembleParams(num_learning_cycles=67, min_leaf_size=86),
    ),
}


def default_hyperparams(frequency_ghz: float | None = None, polarization: str | None = None) -> MlHyperparams:
    """Optimised preset. Only the 25 GHz HH set is published, so it serves every band."""
    return PRESETS["25GHz_HH"]
