"""Monte Carlo evaluation: accuracy-vs-SNR sweeps, boxplots, confusion matrices and timing.

Test signatures are noisy copies of each class's clean signature(s). The
noise for run ``r``, SNR index ``s`` and class ``c`` comes from
``SeedSequence([seed, TEST_STREAM, r, s, c])``, so every classifier sees the
same test data and a sweep is reproducible regardless of which classifiers
are included.
"""

from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import sl_classifier as sl
from .densities import ChiSquareParams
from .errors import RcsError, ValidationError
from .features import extract_features
from .ml import MlHyperparams, ML_FAMILIES, TrainedClassifier, train
from .noise import noisy_rcs, signal_power
from .signatures import (
    Dataset,
    RcsSignature,
    ScatteringCenter,
    ScatteringCenterModel,
    default_angles,
    restrict_azimuth,
    synthesize_signature,
)

DEFAULT_SNR_GRID = (-5.0, -3.0, 0.0, 3.0, 5.0, 8.0, 10.0)
ML_COPIES_PER_CLASS = 100
TEST_STREAM = 1
TRAIN_STREAM = 2
TIMING_STREAM = 3
TRAIN_MODES = ("auto", "clean", "noisy")


@dataclass(frozen=True)
class ClassifierConfig:
    family: str
    hyperparams: MlHyperparams | None = None
    paper_aic: bool = False
    name: str = ""

    def __post_init__(self):
        if self.family not in sl.SL_FAMILIES + ML_FAMILIES:
            raise ValidationError(f"unknown classifier family {self.family!r}")
        if not self.name:
            object.__setattr__(self, "name", self.family)

    @property
    def kind(self) -> str:
        return "sl" if self.family in sl.SL_FAMILIES else "ml"

    def to_dict(self):
        return {"family": self.family, "name": self.name, "paper_aic": self.paper_aic,
                "hyperparams": self.hyperparams.to_dict() if self.hyperparams else None}

    @classmethod
    def from_dict(cls, d):
        hp = MlHyperparams.from_dict(d["hyperparams"]) if d.get("hyperparams") else None
        return cls(d["family"], hp, bool(d.get("paper_aic", False)), d.get("name", ""))


def all_classifiers(hp: MlHyperparams | None = None) -> tuple[ClassifierConfig, ...]:
    return tuple(ClassifierConfig(f) for f in sl.SL_FAMILIES) + tuple(ClassifierConfig(f, hp) for f in ML_FAMILIES)


@dataclass(frozen=True)
class ExperimentSpec:
    classifiers: tuple[ClassifierConfig, ...] = field(default_factory=all_classifiers)
    snr_grid_db: tuple[float, ...] = DEFAULT_SNR_GRID
    runs: int = 10
    tests_per_class: int = 50
    azimuth_window: tuple[float, float] | None = None
    seed: int = 0
    # "auto": SL trains on the clean signatures, ML on noisy copies
    train_mode: str = "auto"
    ml_copies_per_class: int = ML_COPIES_PER_CLASS
    # SNRs cycled through when building noisy training copies
    train_snr_db: tuple[float, ...] = DEFAULT_SNR_GRID

    def __post_init__(self):
        object.__setattr__(self, "classifiers", tuple(self.classifiers))
        object.__setattr__(self, "snr_grid_db", tuple(float(s) for s in self.snr_grid_db))
        object.__setattr__(self, "train_snr_db", tuple(float(s) for s in self.train_snr_db))
        if self.runs < 1 or self.tests_per_class < 1:
            raise ValidationError("runs and tests_per_class must be >= 1")
        if not self.snr_grid_db or not self.train_snr_db:
            raise ValidationError("snr grids must not be empty")
        if not self.classifiers:
            raise ValidationError("no classifiers configured")
        names = [c.name for c in self.classifiers]
        if len(set(names)) != len(names):
            raise ValidationError(f"classifier names must be unique, got {names}")
        if self.train_mode not in TRAIN_MODES:
            raise ValidationError(f"train_mode must be one of {TRAIN_MODES}")
        if self.azimuth_window is not None:
            object.__setattr__(self, "azimuth_window", tuple(float(v) for v in self.azimuth_window))
            if not 0 < self.azimuth_window[1] <= 180:
                raise ValidationError("azimuth half-width must lie in (0, 180]")

    def to_dict(self):
        d = asdict(self)
        d["classifiers"] = [c.to_dict() for c in self.classifiers]
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["classifiers"] = tuple(ClassifierConfig.from_dict(c) for c in d["classifiers"])
        if d.get("azimuth_window") is not None:
            d["azimuth_window"] = tuple(d["azimuth_window"])
        return cls(**d)


# ---- statistics --------------------------------------------------------------

def boxplot_stats(values: Sequence[float]) -> dict[str, Any]:
    """Five-number summary with inclusive linear quartiles and 1.5 IQR fences."""
    v = np.sort(np.asarray(values, dtype=float))
    if v.size == 0:
        raise ValidationError("boxplot needs at least one value")
    q1, med, q3 = (float(np.percentile(v, p, method="linear")) for p in (25, 50, 75))
    iqr = q3 - q1
    lo_fence, hi_fence = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    inside = v[(v >= lo_fence) & (v <= hi_fence)]
    return {
        "min": float(inside.min()),
        "q1": q1,
        "median": med,
        "q3": q3,
        "max": float(inside.max()),
        "outliers": v[(v < lo_fence) | (v > hi_fence)].tolist(),
    }


def _std(x) -> float:
    x = np.asarray(x, dtype=float)
    return float(np.std(x, ddof=1)) if x.size > 1 else 0.0


@dataclass
class TimingStats:
    mean_ms: float
    std_ms: float
    median_ms: float
    extract_ms: float = 0.0
    predict_ms: float = 0.0
    samples: int = 0

    @classmethod
    def from_samples(cls, total_s, extract_s=None):
        t = np.asarray(total_s, dtype=float) * 1e3
        e = np.asarray(extract_s if extract_s is not None else np.zeros_like(t), dtype=float) * 1e3
        return cls(float(t.mean()), _std(t), float(np.median(t)), float(e.mean()), float((t - e).mean()), int(t.size))


# ---- report ------------------------------------------------------------------

@dataclass
class EvalReport:
    classes: tuple[str, ...]
    snr_grid_db: tuple[float, ...]
    classifiers: tuple[str, ...]
    runs: int
    tests_per_class: int
    # accuracy[name][snr_index] -> per-run accuracies (failed runs omitted)
    accuracy: dict[str, list[list[float]]]
    confusion: dict[str, list[list[list[int]]]]
    timing: dict[str, TimingStats]
    failures: list[dict[str, Any]] = field(default_factory=list)
    spec: dict[str, Any] = field(default_factory=dict)

    def mean_accuracy(self, name: str, snr_db: float) -> float:
        acc = self.accuracy[name][self.snr_grid_db.index(float(snr_db))]
        return float(np.mean(acc)) if acc else math.nan

    def std_accuracy(self, name: str, snr_db: float) -> float:
        return _std(self.accuracy[name][self.snr_grid_db.index(float(snr_db))])

    def confusion_matrix(self, name: str, snr_db: float) -> np.ndarray:
        return np.asarray(self.confusion[name][self.snr_grid_db.index(float(snr_db))], dtype=np.int64)

    def boxplot(self, name: str, snr_db: float):
        acc = self.accuracy[name][self.snr_grid_db.index(float(snr_db))]
        return boxplot_stats(acc) if acc else None

    def to_dict(self):
        return {
            "classes": list(self.classes),
            "snr_grid_db": list(self.snr_grid_db),
            "classifiers": list(self.classifiers),
            "runs": self.runs,
            "tests_per_class": self.tests_per_class,
            "accuracy": self.accuracy,
            "confusion": self.confusion,
            "timing": {k: asdict(v) for k, v in self.timing.items()},
            "failures": self.failures,
            "spec": self.spec,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(d["classes"]), tuple(float(s) for s in d["snr_grid_db"]), tuple(d["classifiers"]),
                   int(d["runs"]), int(d["tests_per_class"]), d["accuracy"], d["confusion"],
                   {k: TimingStats(**v) for k, v in d["timing"].items()}, d.get("failures", []), d.get("spec", {}))

    def save_json(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=1))

    @classmethod
    def load_json(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text()))

    def write_csvs(self, out_dir) -> list[Path]:
        """Write the plotting CSVs; only ``timing.csv`` carries wall-clock values."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        written = []

        def open_csv(name):
            p = out / name
            written.append(p)
            fh = open(p, "w", encoding="utf-8", newline="")
            return fh, csv.writer(fh, lineterminator="\n")

        fh, w = open_csv("accuracy_vs_snr.csv")
        with fh:
            w.writerow(["classifier", "snr_db", "mean_accuracy", "std_accuracy", "runs_ok"])
            for name in self.classifiers:
                for s, snr in enumerate(self.snr_grid_db):
                    acc = self.accuracy[name][s]
                    w.writerow([name, _fmt(snr), _fmt(self.mean_accuracy(name, snr)), _fmt(_std(acc)), len(acc)])

        fh, w = open_csv("boxplot.csv")
        with fh:
            w.writerow(["classifier", "snr_db", "min", "q1", "median", "q3", "max", "outliers"])
            for name in self.classifiers:
                for snr in self.snr_grid_db:
                    b = self.boxplot(name, snr)
                    if b is None:
                        continue
                    w.writerow([name, _fmt(snr), *(_fmt(b[k]) for k in ("min", "q1", "median", "q3", "max")),
                                ";".join(_fmt(o) for o in b["outliers"])])

        for name in self.classifiers:
            for snr in self.snr_grid_db:
                fh, w = open_csv(f"confusion_{name}_{_fmt(snr)}.csv")
                with fh:
                    w.writerow(["true\\predicted", *self.classes])
                    for c, row in zip(self.classes, self.confusion_matrix(name, snr)):
                        w.writerow([c, *row.tolist()])

        fh, w = open_csv("timing.csv")
        with fh:
            w.writerow(["classifier", "mean_ms", "std_ms", "median_ms", "extract_ms", "predict_ms", "samples"])
            for name, t in self.timing.items():
                w.writerow([name, _fmt(t.mean_ms), _fmt(t.std_ms), _fmt(t.median_ms), _fmt(t.extract_ms),
                            _fmt(t.predict_ms), t.samples])
        return written


def _fmt(x) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    return str(int(x)) if x.is_integer() and abs(x) < 1e15 else repr(x)


# ---- training and prediction -------------------------------------------------

@dataclass
class TrainedModel:
    config: ClassifierConfig
    model: sl.SlModel | TrainedClassifier

    def classify(self, sig: RcsSignature, refit: bool = False, seed: int = 0) -> tuple[str, float]:
        """Returns ``(label, feature_extraction_seconds)``."""
        if self.config.kind == "sl":
            if refit:
                return sl.classify_sl_refit(self.model, sig, seed)[0], 0.0
            return sl.classify_sl(self.model, sig)[0], 0.0
        t0 = time.perf_counter()
        x = extract_features(sig).as_array()
        t1 = time.perf_counter()
        return self.model.predict_batch(x[None, :])[0], t1 - t0


def ml_training_set(dataset: Dataset, snr_grid: Sequence[float], copies: int, seed: int):
    """``copies`` noisy versions of each class's signatures, cycling through ``snr_grid``."""
    X, y = [], []
    for c_idx, name in enumerate(dataset.class_names):
        sigs = dataset.by_class(name)
        rng = np.random.default_rng(np.random.SeedSequence([seed, TRAIN_STREAM, c_idx]))
        for i in range(copies):
            sig = sigs[i % len(sigs)]
            snr = snr_grid[i % len(snr_grid)]
            X.append(extract_features(sig.with_rcs(noisy_rcs(sig.rcs_m2, snr, rng))).as_array())
            y.append(name)
    return np.vstack(X), y


def clean_training_set(dataset: Dataset):
    X = np.vstack([extract_features(s).as_array() for s in dataset.signatures])
    return X, [s.target_id for s in dataset.signatures]


def noisy_dataset(dataset: Dataset, snr_grid: Sequence[float], copies: int, seed: int) -> Dataset:
    out = []
    for c_idx, name in enumerate(dataset.class_names):
        sigs = dataset.by_class(name)
        rng = np.random.default_rng(np.random.SeedSequence([seed, TRAIN_STREAM, c_idx]))
        for i in range(copies):
            sig = sigs[i % len(sigs)]
            out.append(sig.with_rcs(noisy_rcs(sig.rcs_m2, snr_grid[i % len(snr_grid)], rng)))
    return Dataset(tuple(out), dataset.class_names)


def train_classifier(cfg: ClassifierConfig, dataset: Dataset, spec: ExperimentSpec) -> TrainedModel:
    noisy = spec.train_mode == "noisy" or (spec.train_mode == "auto" and cfg.kind == "ml")
    if cfg.kind == "sl":
        data = noisy_dataset(dataset, spec.train_snr_db, spec.ml_copies_per_class, spec.seed) if noisy else dataset
        return TrainedModel(cfg, sl.train_sl(data, cfg.family, seed=spec.seed, paper_aic=cfg.paper_aic))
    if noisy:
        X, y = ml_training_set(dataset, spec.train_snr_db, spec.ml_copies_per_class, spec.seed)
    else:
        X, y = clean_training_set(dataset)
    return TrainedModel(cfg, train(cfg.family, X, y, cfg.hyperparams, seed=spec.seed))


# ---- experiment --------------------------------------------------------------

def make_test_signatures(dataset: Dataset, snr_db: float, n: int, seed_seq: np.random.SeedSequence,
                    class_index: int, window: tuple[float, float] | None = None) -> list[RcsSignature]:
    """``n`` noisy test copies of one class; noise is referenced to full-azimuth power."""
    sigs = dataset.by_class(dataset.class_names[class_index])
    rng = np.random.default_rng(seed_seq)
    out = []
    for i in range(n):
        sig = sigs[i % len(sigs)]
        noisy = sig.with_rcs(noisy_rcs(sig.rcs_m2, snr_db, rng, signal_power(sig)))
        out.append(restrict_azimuth(noisy, *window) if window else noisy)
    return out


def train_models(dataset: Dataset, spec: ExperimentSpec) -> tuple[dict[str, TrainedModel], list[dict[str, Any]]]:
    """Train every configured classifier; failures are returned rather than raised."""
    models, failures = {}, []
    for cfg in spec.classifiers:
        try:
            models[cfg.name] = train_classifier(cfg, dataset, spec)
        except RcsError as exc:
            failures.append({"classifier": cfg.name, "stage": "train", "error": str(exc)})
    return models, failures


def run_experiment(dataset: Dataset, spec: ExperimentSpec, progress=None,
                   trained: tuple[dict[str, TrainedModel], list] | None = None) -> EvalReport:
    """Sweep every classifier over runs x SNR grid.

    ``trained`` (the output of :func:`train_models`) lets several sweeps, for
    example full and limited azimuth, share one training pass.
    """
    classes = tuple(dataset.class_names)
    m = len(classes)
    names = tuple(c.name for c in spec.classifiers)
    accuracy = {n: [[] for _ in spec.snr_grid_db] for n in names}
    confusion = {n: [np.zeros((m, m), dtype=np.int64) for _ in spec.snr_grid_db] for n in names}
    times = {n: ([], []) for n in names}
    models, train_failures = trained if trained is not None else train_models(dataset, spec)
    failures: list[dict[str, Any]] = list(train_failures)

    for r in range(spec.runs):
        for s, snr in enumerate(spec.snr_grid_db):
            tests = [
                make_test_signatures(dataset, snr, spec.tests_per_class,
                                np.random.SeedSequence([spec.seed, TEST_STREAM, r, s, c]), c, spec.azimuth_window)
                for c in range(m)
            ]
            for name, tm in models.items():
                cell = np.zeros((m, m), dtype=np.int64)
                cell_times, cell_extract = [], []
                try:
                    for c, batch in enumerate(tests):
                        for sig in batch:
                            t0 = time.perf_counter()
                            label, t_extract = tm.classify(sig)
                            cell_times.append(time.perf_counter() - t0)
                            cell_extract.append(t_extract)
                            cell[c, classes.index(label)] += 1
                except RcsError as exc:
                    failures.append({"classifier": name, "stage": "classify", "run": r, "snr_db": snr, "error": str(exc)})
                    continue
                confusion[name][s] += cell
                accuracy[name][s].append(float(np.trace(cell) / cell.sum()))
                times[name][0].extend(cell_times)
                times[name][1].extend(cell_extract)
            if progress:
                progress(r, snr)

    timing = {n: TimingStats.from_samples(*times[n]) for n in names if times[n][0]}
    return EvalReport(classes, spec.snr_grid_db, names, spec.runs, spec.tests_per_class, accuracy,
                      {n: [c.tolist() for c in confusion[n]] for n in names}, timing, failures,
                      json.loads(json.dumps(spec.to_dict())))


def benchmark_timing(models: Sequence[TrainedModel], signatures: Sequence[RcsSignature], repetitions: int = 5,
                     refit: bool = False, seed: int = 0) -> dict[str, TimingStats]:
    """Per-signature wall-clock classification time; one warm-up pass, then ``repetitions`` passes.

    ``refit`` makes SL models re-estimate their density on every test
    signature, which is how the fitting cost shows up in the totals.
    """
    if repetitions < 3:
        raise ValidationError("timing needs at least 3 repetitions")
    if not signatures:
        raise ValidationError("timing needs at least one test signature")
    out = {}
    for tm in models:
        tm.classify(signatures[0], refit=refit, seed=seed)
        total, extract = [], []
        for _ in range(repetitions):
            for sig in signatures:
                t0 = time.perf_counter()
                _, te = tm.classify(sig, refit=refit, seed=seed)
                total.append(time.perf_counter() - t0)
                extract.append(te)
        out[tm.config.name] = TimingStats.from_samples(total, extract)
    return out


def write_timing_csv(timing: dict[str, TimingStats], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["classifier", "mean_ms", "std_ms", "median_ms", "extract_ms", "predict_ms", "samples"])
        for name, t in timing.items():
            w.writerow([name, _fmt(t.mean_ms), _fmt(t.std_ms), _fmt(t.median_ms), _fmt(t.extract_ms),
                        _fmt(t.predict_ms), t.samples])


# ---- synthetic fleets --------------------------------------------------------

REFERENCE_SEED = 20_240_521
REFERENCE_LEVEL_STEP_DB = 4.0


def random_target_model(rng: np.random.Generator, level_dbsm: float, frequency_ghz: float = 15.0,
                        polarization: str = "VV") -> ScatteringCenterModel:
    """A random body of 3-8 scatterers whose summed RCS is ``level_dbsm``."""
    n = int(rng.integers(3, 9))
    weights = rng.lognormal(0.0, 1.0, n)
    sigma = 10.0 ** (level_dbsm / 10.0) * weights / weights.sum()
    centers = tuple(
        ScatteringCenter(
            sigma_m2=float(sigma[i]),
            range_m=float(100.0 + rng.uniform(0.0, 1.0)),
            angle_offset_deg=float(rng.uniform(0.0, 360.0)),
            lever_m=float(rng.uniform(0.02, 0.5)),
            visibility_deg=float(rng.uniform(45.0, 180.0)),
        )
        for i in range(n)
    )
    return ScatteringCenterModel(centers, frequency_ghz, polarization)


def generate_fleet(n_classes: int, seed: int = 0, level_step_db: float = REFERENCE_LEVEL_STEP_DB, frequency_ghz: float = 15.0,
                   polarization: str = "VV", angles=None) -> tuple[Dataset, list[ScatteringCenterModel]]:
    """``n_classes`` random scattering-center targets with mean levels ``level_step_db`` apart."""
    if n_classes < 2:
        raise ValidationError(f"a fleet needs at least 2 classes, got {n_classes}")
    rng = np.random.default_rng(np.random.SeedSequence([seed, n_classes]))
    levels = (np.arange(n_classes) - (n_classes - 1) / 2.0) * level_step_db
    models, sigs = [], []
    angles = default_angles() if angles is None else angles
    for k, level in enumerate(levels):
        name = f"T{k + 1}"
        model = random_target_model(rng, float(level), frequency_ghz, polarization)
        models.append(model)
        sigs.append(synthesize_signature(model, angles, seed=seed, target_id=name))
    return Dataset(tuple(sigs), tuple(s.target_id for s in sigs)), models


def reference_fleet() -> Dataset:
    """Six-target fleet used by the acceptance sweeps."""
    return generate_fleet(6, seed=REFERENCE_SEED)[0]


def swerling_fleet(n_classes: int = 4, separation_db: float = 20.0, n_angles: int = 180, m: int = 1,
                   seed: int = 0) -> Dataset:
    """Targets whose RCS samples are chi-square(2m) draws with means ``separation_db`` apart."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, n_classes, m]))
    angles = np.arange(n_angles) * (360.0 / n_angles)
    sigs = []
    for k in range(n_classes):
        params = ChiSquareParams(m=m, mean_rcs=10.0 ** (k * separation_db / 10.0))
        sigs.append(RcsSignature(f"S{k + 1}", 15.0, "VV", angles, params.rvs(rng, n_angles)))
    return Dataset(tuple(sigs), tuple(s.target_id for s in sigs))
