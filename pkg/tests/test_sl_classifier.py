import numpy as np
import pytest

from rcsid import sl_classifier as sl
from rcsid.densities import ChiSquareParams
from rcsid.errors import IndeterminateClassificationError, ValidationError
from rcsid.signatures import Dataset, RcsSignature, default_angles


def _ds(means, n=180, seed=0, m=1):
    r = np.random.default_rng(seed)
    ang = np.arange(n) * 360.0 / n
    return Dataset(tuple(RcsSignature(f"C{k}", 15, "VV", ang, ChiSquareParams(m, mu).rvs(r, n))
                         for k, mu in enumerate(means)))


def test_swerling_fit_is_sample_mean():
    ds = _ds([1.0, 100.0])
    model = sl.train_sl(ds, "swerling12")
    for c in ds.class_names:
        assert model.per_class[c].mean_rcs == pytest.approx(ds.pooled(c).mean(), rel=1e-15)


def test_uniform_priors():
    model = sl.train_sl(_ds([1, 2, 4, 8, 16, 32]), "swerling34")
    assert all(p == pytest.approx(1 / 6) for p in model.priors.values())
    assert sum(model.priors.values()) == pytest.approx(1.0)


def test_gmm_family_selects_k_for_bimodal_classes():
    r = np.random.default_rng(1)
    ang = np.arange(300) * 1.2
    sigs = []
    for name, (a, b) in {"A": (-20, 0), "B": (-5, 15)}.items():
        db = np.concatenate([r.normal(a, 1.5, 150), r.normal(b, 1.5, 150)])
        sigs.append(RcsSignature(name, 15, "VV", ang, 10 ** (db / 10)))
    model = sl.train_sl(Dataset(tuple(sigs)), "gmm")
    for c in ("A", "B"):
        assert model.meta[c]["k"] >= 2
        assert set(model.meta[c]["aic"]) == {"1", "2", "3", "4", "5"}


def test_classify_matched_density():
    ds = _ds([1.0, 100.0])
    model = sl.train_sl(ds, "swerling12")
    r = np.random.default_rng(2)
    hits = sum(sl.classify_sl(model, model.per_class["C0"].rvs(r, 180))[0] == "C0" for _ in range(200))
    assert hits / 200 >= 0.99


def test_argmax_shift_invariance_and_ties():
    assert sl.decide(("b", "a"), [1.0, 1.0]) == "a"
    scores = np.array([-3.0, -1.0, -2.0])
    assert sl.decide(("x", "y", "z"), scores) == sl.decide(("x", "y", "z"), scores + 1e3)
    with pytest.raises(IndeterminateClassificationError):
        sl.decide(("a", "b"), [-np.inf, -np.inf])


def test_single_class_model_always_predicts_it():
    ds = _ds([1.0, 100.0])
    model = sl.train_sl(ds, "gamma")
    one = sl.SlModel("gamma", ("C1",), {"C1": model.per_class["C1"]}, {"C1": 1.0})
    assert sl.classify_sl(one, ds.by_class("C0")[0])[0] == "C1"


def test_equal_prior_scaling_keeps_argmax():
    ds = _ds([1.0, 10.0, 100.0])
    model = sl.train_sl(ds, "gamma")
    sig = ds.by_class("C1")[0]
    scaled = sl.SlModel(model.family, model.classes, model.per_class, {c: 0.01 for c in model.classes})
    assert sl.classify_sl(scaled, sig)[0] == sl.classify_sl(model, sig)[0]


def test_too_few_samples_and_unknown_family():
    ds = _ds([1.0, 10.0], n=5)
    with pytest.raises(ValidationError):
        sl.train_sl(ds, "gamma")
    with pytest.raises(ValidationError):
        sl.train_sl(_ds([1.0, 2.0]), "weibull")


def test_fit_errors_tagged_with_class():
    ang = default_angles()
    ds = Dataset((RcsSignature("good", 15, "VV", ang, np.random.default_rng(0).exponential(1, 180)),
                  RcsSignature("flat", 15, "VV", ang, np.full(180, 2.0))))
    with pytest.raises(Exception, match="flat"):
        sl.train_sl(ds, "gamma")


def test_zero_likelihood_sample_is_indeterminate():
    ds = _ds([1.0, 10.0])
    model = sl.train_sl(ds, "swerling12")
    with pytest.raises(IndeterminateClassificationError):
        sl.classify_sl(model, np.array([-1.0, 1.0]))


@pytest.mark.parametrize("family", sl.SL_FAMILIES)
def test_model_round_trip(tmp_path, family):
    ds = _ds([1.0, 100.0], m=2)
    model = sl.train_sl(ds, family)
    model.save(tmp_path / "m.json")
    loaded = sl.load_sl_model(tmp_path / "m.json")
    sig = ds.by_class("C1")[0]
    assert sl.classify_sl(loaded, sig) == sl.classify_sl(model, sig)


def test_refit_mode_same_decision():
    ds = _ds([1.0, 100.0])
    model = sl.train_sl(ds, "gpd")
    sig = ds.by_class("C0")[0]
    assert sl.classify_sl_refit(model, sig) == sl.classify_sl(model, sig)
