import csv
import hashlib
import json

import pytest

from rcsid.cli import main
from rcsid.signatures import load_csv


def digest(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


@pytest.fixture(scope="module")
def fleet(tmp_path_factory):
    out = tmp_path_factory.mktemp("gen")
    assert main(["gen", "--classes", "4", "--seed", "3", "--out", str(out)]) == 0
    return out / "fleet.csv"


def test_gen_deterministic_and_loadable(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["gen", "--classes", "6", "--seed", "7", "--out", str(a)]) == 0
    assert main(["gen", "--classes", "6", "--seed", "7", "--out", str(b)]) == 0
    for name in ("fleet.csv", "fleet_models.json"):
        assert digest(a / name) == digest(b / name)
    assert len(load_csv(a / "fleet.csv").class_names) == 6
    cfg = json.loads((a / "effective_config.json").read_text())
    assert cfg["seed"] == 7 and cfg["classes"] == 6 and cfg["command"] == "gen"


def test_gen_single_class_rejected(tmp_path, capsys):
    assert main(["gen", "--classes", "1", "--out", str(tmp_path)]) == 2
    assert "at least 2" in capsys.readouterr().err


def test_train_classify_round_trip(fleet, tmp_path, capsys):
    before = digest(fleet)
    model_dir = tmp_path / "m"
    assert main(["train", "--data", str(fleet), "--family", "gamma", "--out", str(model_dir)]) == 0
    capsys.readouterr()
    assert main(["classify", "--model", str(model_dir / "model.json"), "--data", str(fleet), "--snr", "60",
                 "--out", str(tmp_path / "c")]) == 0
    lines = [l.split("\t") for l in capsys.readouterr().out.strip().splitlines()]
    assert len(lines) == 4 and all(true == pred for true, pred, _ in lines)
    preds = json.loads((tmp_path / "c" / "predictions.json").read_text())
    assert [p["predicted"] for p in preds] == ["T1", "T2", "T3", "T4"]
    assert digest(fleet) == before


def test_ml_model_classify(fleet, tmp_path, capsys):
    assert main(["train", "--data", str(fleet), "--family", "tree", "--copies", "20", "--out", str(tmp_path)]) == 0
    assert main(["classify", "--model", str(tmp_path / "model.json"), "--data", str(fleet), "--out", str(tmp_path)]) == 0


def test_missing_model_exits_2(fleet, tmp_path, capsys):
    assert main(["classify", "--model", str(tmp_path / "nope.json"), "--data", str(fleet), "--out", str(tmp_path)]) == 2
    assert "nope.json" in capsys.readouterr().err


def test_sweep_rows(fleet, tmp_path):
    before = digest(fleet)
    assert main(["sweep", "--data", str(fleet), "--family", "swerling12,tree", "--snr=-5,10", "--runs", "2",
                 "--tests-per-class", "3", "--out", str(tmp_path)]) == 0
    with open(tmp_path / "accuracy_vs_snr.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert {(r["classifier"], float(r["snr_db"])) for r in rows} == {(c, s) for c in ("swerling12", "tree") for s in (-5.0, 10.0)}
    assert len(rows) == 4
    assert digest(fleet) == before


def test_config_file_layering(fleet, tmp_path):
    cfg = tmp_path / "run.toml"
    cfg.write_text('seed = 11\n[sweep]\nfamily = ["swerling34"]\nsnr = [10.0]\nruns = 1\ntests_per_class = 2\n')
    out = tmp_path / "o"
    assert main(["sweep", "--config", str(cfg), "--data", str(fleet), "--runs", "2", "--out", str(out)]) == 0
    eff = json.loads((out / "effective_config.json").read_text())
    assert eff["seed"] == 11 and eff["runs"] == 2 and eff["family"] == ["swerling34"]
    bad = tmp_path / "bad.toml"
    bad.write_text("[sweep]\nbogus = 1\n")
    assert main(["sweep", "--config", str(bad), "--data", str(fleet), "--out", str(out)]) == 2


def test_bench_and_scalogram(fleet, tmp_path):
    assert main(["bench", "--data", str(fleet), "--family", "tree,swerling12", "--tests-per-class", "2",
                 "--repetitions", "3", "--out", str(tmp_path)]) == 0
    with open(tmp_path / "timing.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert {r["classifier"] for r in rows} == {"tree", "swerling12"} and all(float(r["mean_ms"]) > 0 for r in rows)
    assert main(["scalogram", "--data", str(fleet), "--size", "224", "--save-magnitudes", "--out", str(tmp_path)]) == 0
    assert len(list(tmp_path.glob("*.png"))) == 4 and len(list(tmp_path.glob("*_magnitudes.csv"))) == 4


def test_hyperopt_grid(fleet, tmp_path):
    assert main(["hyperopt", "--data", str(fleet), "--family", "tree", "--grid", "--grid-points", "3",
                 "--copies", "20", "--out", str(tmp_path)]) == 0
    best = json.loads((tmp_path / "best_point.json").read_text())
    assert best["family"] == "tree" and "min_leaf_size" in best["point"]
    assert (tmp_path / "optimization_trace.csv").read_text().startswith("iteration,min_leaf_size,loss")


def test_bad_inputs(tmp_path, fleet):
    assert main(["train", "--out", str(tmp_path)]) == 2
    assert main(["sweep", "--data", str(fleet), "--family", "resnet", "--out", str(tmp_path)]) == 2
    assert main(["classify", "--model", str(fleet), "--data", str(fleet), "--out", str(tmp_path)]) == 2
