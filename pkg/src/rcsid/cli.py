"""``rcsid`` command line: gen, train, classify, sweep, bench, scalogram, hyperopt.

Options come from three layers, later ones winning: built-in defaults, a
TOML config file (``--config``), explicit flags. Global keys sit at the top
level of the file and per-subcommand keys in a table of the same name::

    seed = 7
    out = "results"

    [sweep]
    runs = 10
    snr = [-5, 0, 5, 10]

The effective configuration is written to ``<out>/effective_config.json``.
Exit codes: 0 success, 1 I/O failure, 2 invalid input, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import cwt, evaluation as ev, hyperopt, sl_classifier as sl
from .errors import NumericError, ValidationError
from .features import extract_features
from .ml import ML_FAMILIES, MlHyperparams, PRESETS, TrainedClassifier
from .noise import noisy_rcs, signal_power
from .signatures import Dataset, load_csv, read_signatures, restrict_azimuth, save_csv

log = logging.getLogger("rcsid")

FAMILIES = sl.SL_FAMILIES + ML_FAMILIES

DEFAULTS = {
    "seed": 0,
    "out": "out",
    "threads": 1,
    "verbose": False,
    "gen": {"classes": 6, "level_step": ev.REFERENCE_LEVEL_STEP_DB, "frequency": 15.0, "polarization": "VV", "angle_step": 2.0},
    "train": {"data": None, "family": "gmm", "paper_aic": False, "snr": list(ev.DEFAULT_SNR_GRID),
              "hyperparams": "default", "copies": ev.ML_COPIES_PER_CLASS},
    "classify": {"model": None, "data": None, "snr": None, "azimuth_center": None, "azimuth_halfwidth": None},
    "sweep": {"data": None, "family": list(FAMILIES), "snr": list(ev.DEFAULT_SNR_GRID), "runs": 10,
              "tests_per_class": 50, "paper_aic": False, "azimuth_center": None, "azimuth_halfwidth": None,
              "hyperparams": "default", "train_mode": "auto"},
    "bench": {"data": None, "family": list(FAMILIES), "snr": [10.0], "tests_per_class": 5, "repetitions": 5,
              "refit_timing": False, "paper_aic": False, "hyperparams": "default"},
    "scalogram": {"data": None, "size": 227, "scales": 64, "save_magnitudes": False},
    "hyperopt": {"data": None, "family": "knn", "budget": 30, "split": 0.2, "snr": list(ev.DEFAULT_SNR_GRID),
                 "copies": ev.ML_COPIES_PER_CLASS, "grid": False, "grid_points": 5},
}


def _floats(text):
    return [float(v) for v in str(text).split(",") if v.strip()]


def _strings(text):
    return [v.strip() for v in str(text).split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    # SUPPRESS so a subparser does not reset a global flag given before the subcommand
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", help="TOML config file")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", help="output directory")
    common.add_argument("--threads", type=int, help="worker cap (evaluation is single-threaded)")
    common.add_argument("-v", "--verbose", action="store_const", const=True)

    p = argparse.ArgumentParser(prog="rcsid", description="RCS-based target classification toolkit",
                                parents=[common], argument_default=None)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", parents=[common], help="write a synthetic scattering-center fleet")
    g.add_argument("--classes", type=int)
    g.add_argument("--level-step", type=float, dest="level_step")
    g.add_argument("--frequency", type=float)
    g.add_argument("--polarization")
    g.add_argument("--angle-step", type=float, dest="angle_step")

    t = sub.add_parser("train", parents=[common], help="train one classifier family")
    t.add_argument("--data")
    t.add_argument("--family", choices=FAMILIES)
    t.add_argument("--paper-aic", action="store_const", const=True, dest="paper_aic")
    t.add_argument("--snr", type=_floats, help="comma-separated SNR grid for noisy ML training copies")
    t.add_argument("--hyperparams", help="'default', a preset name, or a JSON file")
    t.add_argument("--copies", type=int)

    c = sub.add_parser("classify", parents=[common], help="classify every signature in a CSV")
    c.add_argument("--model")
    c.add_argument("--data")
    c.add_argument("--snr", type=float, help="add noise at this SNR before classifying")
    c.add_argument("--azimuth-center", type=float, dest="azimuth_center")
    c.add_argument("--azimuth-halfwidth", type=float, dest="azimuth_halfwidth")

    s = sub.add_parser("sweep", parents=[common], help="Monte Carlo accuracy-vs-SNR sweep")
    s.add_argument("--data")
    s.add_argument("--family", type=_strings, help="comma-separated families")
    s.add_argument("--snr", type=_floats)
    s.add_argument("--runs", type=int)
    s.add_argument("--tests-per-class", type=int, dest="tests_per_class")
    s.add_argument("--paper-aic", action="store_const", const=True, dest="paper_aic")
    s.add_argument("--azimuth-center", type=float, dest="azimuth_center")
    s.add_argument("--azimuth-halfwidth", type=float, dest="azimuth_halfwidth")
    s.add_argument("--hyperparams")
    s.add_argument("--train-mode", choices=ev.TRAIN_MODES, dest="train_mode")

    b = sub.add_parser("bench", parents=[common], help="per-signature classification timing")
    b.add_argument("--data")
    b.add_argument("--family", type=_strings)
    b.add_argument("--snr", type=_floats)
    b.add_argument("--tests-per-class", type=int, dest="tests_per_class")
    b.add_argument("--repetitions", type=int)
    b.add_argument("--refit-timing", action="store_const", const=True, dest="refit_timing")
    b.add_argument("--paper-aic", action="store_const", const=True, dest="paper_aic")
    b.add_argument("--hyperparams")

    w = sub.add_parser("scalogram", parents=[common], help="write CWT scalogram images")
    w.add_argument("--data")
    w.add_argument("--size", type=int, choices=cwt.IMAGE_SIZES)
    w.add_argument("--scales", type=int)
    w.add_argument("--save-magnitudes", action="store_const", const=True, dest="save_magnitudes")

    h = sub.add_parser("hyperopt", parents=[common], help="Bayesian optimisation of ML hyperparameters")
    h.add_argument("--data")
    h.add_argument("--family", choices=ML_FAMILIES)
    h.add_argument("--budget", type=int)
    h.add_argument("--split", type=float, help="holdout fraction")
    h.add_argument("--snr", type=_floats)
    h.add_argument("--copies", type=int)
    h.add_argument("--grid", action="store_const", const=True, help="exhaustive grid search instead")
    h.add_argument("--grid-points", type=int, dest="grid_points")
    return p


def load_config(path) -> dict:
    try:
        import tomllib
    except ModuleNotFoundError:  # Python < 3.11
        import tomli as tomllib

    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError:
        raise ValidationError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ValidationError(f"{path}: {exc}") from None


def effective_config(args: argparse.Namespace) -> dict:
    cmd = args.command
    cfg = {k: v for k, v in DEFAULTS.items() if not isinstance(v, dict)}
    cfg.update(DEFAULTS[cmd])
    config_path = getattr(args, "config", None)
    if config_path:
        file_cfg = load_config(config_path)
        for k, v in file_cfg.items():
            if k in cfg and not isinstance(v, dict):
                cfg[k] = v
        section = file_cfg.get(cmd, {})
        unknown = set(section) - set(DEFAULTS[cmd])
        if unknown:
            raise ValidationError(f"{config_path}: unknown keys in [{cmd}]: {sorted(unknown)}")
        cfg.update(section)
    for k, v in vars(args).items():
        if v is not None and k in cfg:
            cfg[k] = v
    cfg["command"] = cmd
    return cfg


def _echo(cfg, out: Path):
    out.mkdir(parents=True, exist_ok=True)
    (out / "effective_config.json").write_text(json.dumps(cfg, indent=1, sort_keys=True))


def _require(cfg, key):
    if cfg.get(key) is None:
        raise ValidationError(f"--{key.replace('_', '-')} is required")
    return cfg[key]


def _load_data(cfg) -> Dataset:
    path = Path(_require(cfg, "data"))
    if not path.is_file():
        raise ValidationError(f"data file not found: {path}")
    return load_csv(path)


def _hyperparams(spec) -> MlHyperparams:
    if spec in (None, "default"):
        return MlHyperparams()
    if spec in PRESETS:
        return PRESETS[spec]
    path = Path(spec)
    if not path.is_file():
        raise ValidationError(f"hyperparams must be 'default', one of {sorted(PRESETS)}, or a JSON file; got {spec!r}")
    return MlHyperparams.from_dict(json.loads(path.read_text()))


def _window(cfg):
    c, h = cfg.get("azimuth_center"), cfg.get("azimuth_halfwidth")
    if (c is None) != (h is None):
        raise ValidationError("--azimuth-center and --azimuth-halfwidth must be given together")
    return None if c is None else (float(c), float(h))


# ---- subcommands -------------------------------------------------------------

def cmd_gen(cfg, out: Path):
    step = float(cfg["angle_step"])
    if not 0 < step <= 180:
        raise ValidationError("angle step must lie in (0, 180]")
    dataset, models = ev.generate_fleet(int(cfg["classes"]), seed=int(cfg["seed"]), level_step_db=float(cfg["level_step"]),
                                        frequency_ghz=float(cfg["frequency"]), polarization=cfg["polarization"],
                                        angles=np.arange(0.0, 360.0, step))
    save_csv(dataset, out / "fleet.csv")
    specs = {name: {"frequency_ghz": m.frequency_ghz, "polarization": m.polarization,
                    "centers": [vars(c) for c in m.centers]} for name, m in zip(dataset.class_names, models)}
    (out / "fleet_models.json").write_text(json.dumps(specs, indent=1))
    print(f"wrote {len(dataset.class_names)} targets to {out / 'fleet.csv'}")


def _spec(cfg, families, snr_grid, **extra) -> ev.ExperimentSpec:
    hp = _hyperparams(cfg.get("hyperparams"))
    classifiers = []
    for f in families:
        if f not in FAMILIES:
            raise ValidationError(f"unknown family {f!r}; expected one of {FAMILIES}")
        classifiers.append(ev.ClassifierConfig(f, hp if f in ML_FAMILIES else None, bool(cfg.get("paper_aic"))))
    return ev.ExperimentSpec(classifiers=tuple(classifiers), snr_grid_db=tuple(snr_grid), seed=int(cfg["seed"]), **extra)


def cmd_train(cfg, out: Path):
    dataset = _load_data(cfg)
    spec = _spec(cfg, [cfg["family"]], cfg["snr"], ml_copies_per_class=int(cfg["copies"]), train_snr_db=tuple(cfg["snr"]))
    model = ev.train_classifier(spec.classifiers[0], dataset, spec).model
    model.save(out / "model.json")
    print(f"trained {cfg['family']} on {len(dataset.class_names)} classes -> {out / 'model.json'}")


def load_model(path):
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"model file not found: {path}")
    try:
        d = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: not valid JSON ({exc})") from None
    if d.get("kind") == "sl":
        return sl.SlModel.from_dict(d)
    if d.get("kind") == "ml":
        return TrainedClassifier.from_dict(d)
    raise ValidationError(f"{path}: unknown model kind {d.get('kind')!r}")


def cmd_classify(cfg, out: Path):
    model = load_model(_require(cfg, "model"))
    data_path = Path(_require(cfg, "data"))
    if not data_path.is_file():
        raise ValidationError(f"data file not found: {data_path}")
    window = _window(cfg)
    rng = np.random.default_rng(np.random.SeedSequence([int(cfg["seed"]), ev.TEST_STREAM]))
    rows = []
    for sig in read_signatures(data_path):
        if cfg.get("snr") is not None:
            sig = sig.with_rcs(noisy_rcs(sig.rcs_m2, float(cfg["snr"]), rng, signal_power(sig)))
        if window:
            sig = restrict_azimuth(sig, *window)
        if isinstance(model, sl.SlModel):
            label, scores = sl.classify_sl(model, sig)
        else:
            s = model.scores(extract_features(sig).as_array()[None, :])[0]
            label, scores = model.classes[int(np.argmax(s))], dict(zip(model.classes, s.tolist()))
        rows.append({"target_id": sig.target_id, "predicted": label, "scores": scores})
        score_txt = " ".join(f"{k}={v:.6g}" for k, v in scores.items())
        print(f"{sig.target_id}\t{label}\t{score_txt}")
    (out / "predictions.json").write_text(json.dumps(rows, indent=1))


def cmd_sweep(cfg, out: Path):
    dataset = _load_data(cfg)
    spec = _spec(cfg, cfg["family"], cfg["snr"], runs=int(cfg["runs"]), tests_per_class=int(cfg["tests_per_class"]),
                 azimuth_window=_window(cfg), train_mode=cfg["train_mode"])
    report = ev.run_experiment(dataset, spec, progress=lambda r, snr: log.info("run %d snr %g done", r, snr))
    report.save_json(out / "report.json")
    report.write_csvs(out)
    for f in report.failures:
        log.warning("failure: %s", f)
    for name in report.classifiers:
        accs = " ".join(f"{snr:g}dB={report.mean_accuracy(name, snr):.4f}" for snr in report.snr_grid_db)
        print(f"{name}\t{accs}")


def cmd_bench(cfg, out: Path):
    dataset = _load_data(cfg)
    spec = _spec(cfg, cfg["family"], cfg["snr"])
    models, failures = ev.train_models(dataset, spec)
    for f in failures:
        raise NumericError(f"training failed for {f['classifier']}: {f['error']}")
    tests = []
    for s, snr in enumerate(spec.snr_grid_db):
        for c in range(len(dataset.class_names)):
            tests += ev.make_test_signatures(dataset, snr, int(cfg["tests_per_class"]),
                                             np.random.SeedSequence([spec.seed, ev.TIMING_STREAM, s, c]), c)
    timing = ev.benchmark_timing(list(models.values()), tests, int(cfg["repetitions"]), bool(cfg["refit_timing"]),
                                 spec.seed)
    ev.write_timing_csv(timing, out / "timing.csv")
    (out / "timing.json").write_text(json.dumps({k: vars(v) for k, v in timing.items()}, indent=1))
    for name, t in timing.items():
        print(f"{name}\tmean={t.mean_ms:.4f} ms\tstd={t.std_ms:.4f} ms\tmedian={t.median_ms:.4f} ms")


def cmd_scalogram(cfg, out: Path):
    data_path = Path(_require(cfg, "data"))
    if not data_path.is_file():
        raise ValidationError(f"data file not found: {data_path}")
    for sig in read_signatures(data_path):
        s = cwt.cwt_transform(sig.rcs_dbsm, num_scales=int(cfg["scales"]))
        img = cwt.process_scalogram(s, int(cfg["size"]))
        stem = f"{sig.target_id}_{sig.frequency_ghz:g}GHz_{sig.polarization}"
        cwt.save_png(img, out / f"{stem}.png")
        if cfg["save_magnitudes"]:
            cwt.save_magnitude_csv(s, out / f"{stem}_magnitudes.csv")
        print(f"{stem}.png{' (degenerate)' if img.degenerate else ''}")


def cmd_hyperopt(cfg, out: Path):
    dataset = _load_data(cfg)
    family = cfg["family"]
    if family not in ML_FAMILIES:
        raise ValidationError(f"hyperopt needs an ML family, got {family!r}")
    X, y = ev.ml_training_set(dataset, cfg["snr"], int(cfg["copies"]), int(cfg["seed"]))
    objective = hyperopt.holdout_objective(X, y, family, float(cfg["split"]), int(cfg["seed"]))
    space = hyperopt.DEFAULT_SPACES[family]
    if cfg["grid"]:
        res = hyperopt.grid_search(objective, space, int(cfg["grid_points"]))
    else:
        res = hyperopt.optimize(objective, space, int(cfg["budget"]), int(cfg["seed"]),
                                snapshot_every=int(cfg["budget"]))
        if res.surrogate_snapshots:
            res.write_surrogate_csv(out / "surrogate.csv")
    res.write_trace_csv(out / "optimization_trace.csv")
    (out / "best_point.json").write_text(json.dumps({"family": family, "point": res.best_point,
                                                     "loss": res.best_objective}, indent=1))
    print(f"best {family} point {res.best_point} holdout loss {res.best_objective:.4f}")


COMMANDS = {
    "gen": cmd_gen,
    "train": cmd_train,
    "classify": cmd_classify,
    "sweep": cmd_sweep,
    "bench": cmd_bench,
    "scalogram": cmd_scalogram,
    "hyperopt": cmd_hyperopt,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = effective_config(args)
        logging.basicConfig(level=logging.INFO if cfg["verbose"] else logging.WARNING, format="%(levelname)s %(message)s")
        if int(cfg["threads"]) < 1:
            raise ValidationError("--threads must be >= 1")
        os.environ.setdefault("OMP_NUM_THREADS", str(cfg["threads"]))
        out = Path(cfg["out"])
        _echo(cfg, out)
        COMMANDS[args.command](cfg, out)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
