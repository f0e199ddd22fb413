import json

import numpy as np
import pytest

from rcsid import evaluation as ev
from rcsid.errors import ValidationError
from rcsid.ml import MlHyperparams

SL_ONLY = (ev.ClassifierConfig("swerling12"),)


@pytest.fixture(scope="module")
def small_report():
    ds = ev.swerling_fleet(3, 20.0, n_angles=90)
    spec = ev.ExperimentSpec(classifiers=SL_ONLY + (ev.ClassifierConfig("tree"),), snr_grid_db=(-5, 10),
                             runs=3, tests_per_class=4, seed=5, ml_copies_per_class=20)
    return ds, spec, ev.run_experiment(ds, spec)


def test_boxplot_examples():
    b = ev.boxplot_stats([1, 2, 3, 4, 5])
    assert (b["min"], b["q1"], b["median"], b["q3"], b["max"]) == (1, 2, 3, 4, 5)
    assert b["outliers"] == []
    b = ev.boxplot_stats([1, 1, 1, 1, 100])
    assert b["outliers"] == [100] and b["max"] == 1
    b = ev.boxplot_stats([0.7])
    assert b["min"] == b["q1"] == b["median"] == b["q3"] == b["max"] == 0.7
    with pytest.raises(ValidationError):
        ev.boxplot_stats([])


def test_boxplot_matches_numpy_inclusive_quartiles(rng):
    v = rng.uniform(size=17)
    b = ev.boxplot_stats(v)
    q1, q3 = np.quantile(v, [0.25, 0.75])
    assert b["q1"] == pytest.approx(q1) and b["q3"] == pytest.approx(q3)


def test_high_snr_matched_sl_is_perfect():
    ds = ev.swerling_fleet(3, 30.0, n_angles=180)
    spec = ev.ExperimentSpec(classifiers=SL_ONLY, snr_grid_db=(200,), runs=2, tests_per_class=10, seed=1)
    rep = ev.run_experiment(ds, spec)
    assert rep.mean_accuracy("swerling12", 200) == 1.0


def test_confusion_accounting(small_report):
    ds, spec, rep = small_report
    for name in rep.classifiers:
        for snr in rep.snr_grid_db:
            cm = rep.confusion_matrix(name, snr)
            np.testing.assert_array_equal(cm.sum(axis=1), spec.runs * spec.tests_per_class)
            assert rep.mean_accuracy(name, snr) == pytest.approx(np.trace(cm) / cm.sum(), abs=1e-12)
            assert all(0 <= a <= 1 for a in rep.accuracy[name][rep.snr_grid_db.index(snr)])


def test_seeded_repeat_identical(small_report):
    ds, spec, rep = small_report
    again = ev.run_experiment(ds, spec)
    assert again.confusion == rep.confusion and again.accuracy == rep.accuracy


def test_report_json_round_trip(small_report, tmp_path):
    _, spec, rep = small_report
    rep.save_json(tmp_path / "r.json")
    back = ev.EvalReport.load_json(tmp_path / "r.json")
    assert back.to_dict() == rep.to_dict()
    assert ev.ExperimentSpec.from_dict(json.loads(json.dumps(spec.to_dict()))) == spec


def test_csv_outputs(small_report, tmp_path):
    _, spec, rep = small_report
    rep.write_csvs(tmp_path)
    rows = (tmp_path / "accuracy_vs_snr.csv").read_text().splitlines()
    assert rows[0] == "classifier,snr_db,mean_accuracy,std_accuracy,runs_ok"
    assert len(rows) == 1 + len(rep.classifiers) * len(rep.snr_grid_db)
    assert (tmp_path / "boxplot.csv").exists() and (tmp_path / "timing.csv").exists()
    assert len(list(tmp_path.glob("confusion_*.csv"))) == len(rep.classifiers) * len(rep.snr_grid_db)


def test_failures_recorded_and_experiment_continues():
    ds = ev.swerling_fleet(2, 20.0, n_angles=30)
    bad = ev.ClassifierConfig("knn", MlHyperparams().with_family("knn", num_neighbors=500))
    spec = ev.ExperimentSpec(classifiers=SL_ONLY + (bad,), snr_grid_db=(10,), runs=1, tests_per_class=2,
                             ml_copies_per_class=10)
    rep = ev.run_experiment(ds, spec)
    assert rep.failures and rep.failures[0]["classifier"] == "knn"
    assert rep.mean_accuracy("swerling12", 10) >= 0


def test_spec_validation():
    with pytest.raises(ValidationError):
        ev.ExperimentSpec(runs=0)
    with pytest.raises(ValidationError):
        ev.ExperimentSpec(snr_grid_db=())
    with pytest.raises(ValidationError):
        ev.ExperimentSpec(azimuth_window=(0, 0))
    with pytest.raises(ValidationError):
        ev.ClassifierConfig("resnet")


def test_test_signatures_windowed():
    ds = ev.swerling_fleet(2, 20.0, n_angles=360)
    sigs = ev.make_test_signatures(ds, 10.0, 3, np.random.SeedSequence(0), 0, (0.0, 60.0))
    assert len(sigs) == 3 and all(s.angles_deg.size == 121 for s in sigs)


def test_timing_positive_and_validated():
    ds = ev.swerling_fleet(2, 20.0, n_angles=60)
    spec = ev.ExperimentSpec(classifiers=SL_ONLY, runs=1)
    models, _ = ev.train_models(ds, spec)
    t = ev.benchmark_timing(list(models.values()), list(ds.signatures), repetitions=3)
    s = t["swerling12"]
    assert np.isfinite(s.mean_ms) and s.mean_ms > 0 and s.std_ms >= 0 and s.samples == 6
    with pytest.raises(ValidationError):
        ev.benchmark_timing(list(models.values()), list(ds.signatures), repetitions=2)


def test_knn_time_grows_with_training_size():
    r = np.random.default_rng(0)
    ds = ev.swerling_fleet(2, 20.0, n_angles=90)
    tests = [ds.signatures[0]] * 20
    means = []
    for copies in (10, 100, 1000):
        spec = ev.ExperimentSpec(classifiers=(ev.ClassifierConfig("knn"),), ml_copies_per_class=copies)
        models, _ = ev.train_models(ds, spec)
        means.append(ev.benchmark_timing(list(models.values()), tests, repetitions=5)["knn"].predict_ms)
    assert means[2] > means[0]


def test_fleet_generation():
    a, models = ev.generate_fleet(4, seed=3)
    b, _ = ev.generate_fleet(4, seed=3)
    assert a.class_names == ("T1", "T2", "T3", "T4") and len(models) == 4
    for s, t in zip(a.signatures, b.signatures):
        np.testing.assert_array_equal(s.rcs_m2, t.rcs_m2)
    means = [float(np.mean(s.rcs_m2)) for s in a.signatures]
    assert means == sorted(means)
    with pytest.raises(ValidationError):
        ev.generate_fleet(1)
