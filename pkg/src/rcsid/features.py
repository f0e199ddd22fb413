"""Seven summary statistics of an RCS signature used as ML classifier inputs."""

from __future__ import annotations

import csv
import math
from dataclasses import astuple, dataclass
from typing import Iterable

import numpy as np

from .errors import ValidationError
from .signatures import RcsSignature, to_dbsm

SCALES = ("linear", "dbsm")
FEATURE_NAMES = ("peak", "rms", "mean", "std", "variance", "median", "mode")
MODE_BIN_DB = 0.1


@dataclass(frozen=True)
class FeatureVector:
    peak: float
    rms: float
    mean: float
    std: float
    variance: float
    median: float
    mode: float
    minimum: float | None = None

    def as_array(self) -> np.ndarray:
        vals = astuple(self)
        return np.array(vals if self.minimum is not None else vals[:-1], dtype=float)

    @classmethod
    def names(cls, include_min=False):
        return FEATURE_NAMES + (("minimum",) if include_min else ())


def sample_mode(values_db: np.ndarray, bin_db: float = MODE_BIN_DB) -> int:
    """Index of the mode sample: smallest value inside the most populated ``bin_db`` bin.

    Ties between equally populated bins go to the lowest bin.
    """
    bins = np.floor(values_db / bin_db).astype(np.int64)
    uniq, counts = np.unique(bins, return_counts=True)
    winner = uniq[np.argmax(counts)]  # np.unique sorts, so argmax picks the lowest tied bin
    members = np.flatnonzero(bins == winner)
    return int(members[np.argmin(values_db[members])])


def extract_features(sig: RcsSignature | np.ndarray, scale: str = "dbsm", include_min: bool = False) -> FeatureVector:
    """Peak, RMS, mean, std (1/(N-1)), variance (1/N), median and mode of the samples.

    The mode is always binned at 0.1 dB, then reported on the requested scale.
    """
    if scale not in SCALES:
        raise ValidationError(f"scale must be one of {SCALES}, got {scale!r}")
    rcs = sig.rcs_m2 if isinstance(sig, RcsSignature) else np.asarray(sig, dtype=float)
    if rcs.size == 0:
        raise ValidationError("cannot extract features from an empty signature")
    db = to_dbsm(rcs)
    x = db if scale == "dbsm" else rcs
    n = x.size
    mean = math.fsum(x) / n
    ss = math.fsum((x - mean) ** 2)
    return FeatureVector(
        peak=float(np.max(x)),
        rms=math.sqrt(math.fsum(x * x) / n),
        mean=mean,
        std=math.sqrt(ss / (n - 1)) if n > 1 else 0.0,
        variance=ss / n,
        median=float(np.median(x)),
        mode=float(x[sample_mode(db)]),
        minimum=float(np.min(x)) if include_min else None,
    )


def feature_matrix(sigs: Iterable[RcsSignature], scale="dbsm", include_min=False) -> np.ndarray:
    return np.array([extract_features(s, scale, include_min).as_array() for s in sigs])


def write_feature_csv(rows: Iterable[tuple[str, FeatureVector]], path) -> None:
    rows = list(rows)
    include_min = any(fv.minimum is not None for _, fv in rows)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("target_id",) + FeatureVector.names(include_min))
        for tid, fv in rows:
            w.writerow([tid] + [repr(float(v)) for v in fv.as_array()])


__all__ = ["FeatureVector", "extract_features", "feature_matrix", "write_feature_csv", "FEATURE_NAMES", "SCALES"]
