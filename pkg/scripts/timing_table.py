"""Per-signature classification time for each classifier, with and without SL refitting."""

import argparse
from pathlib import Path

import numpy as np

from rcsid import evaluation as ev


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--out", default="results/timing")
    p.add_argument("--tests-per-class", type=int, default=2)
    p.add_argument("--repetitions", type=int, default=3)
    args = p.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ds = ev.reference_fleet()
    models, _ = ev.train_models(ds, ev.ExperimentSpec())
    tests = [s for c in range(len(ds.class_names))
             for s in ev.make_test_signatures(ds, 10.0, args.tests_per_class, np.random.SeedSequence([0, c]), c)]
    plain = ev.benchmark_timing(list(models.values()), tests, args.repetitions)
    refit = ev.benchmark_timing([m for m in models.values() if m.config.kind == "sl"], tests, args.repetitions,
                                refit=True)
    ev.write_timing_csv(plain, out / "timing.csv")
    ev.write_timing_csv(refit, out / "timing_refit.csv")
    print(f"{'classifier':11s} {'mean ms':>10s} {'std ms':>10s} {'refit ms':>10s}")
    for name, t in plain.items():
        r = f"{refit[name].mean_ms:10.3f}" if name in refit else " " * 10
        print(f"{name:11s} {t.mean_ms:10.3f} {t.std_ms:10.3f} {r}")


if __name__ == "__main__":
    main()
