"""Accuracy-vs-SNR sweep of every classifier on the reference fleet, full and 120 degree azimuth."""

import argparse
import time
from dataclasses import replace
from pathlib import Path

from rcsid import evaluation as ev


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--out", default="results/reference")
    p.add_argument("--runs", type=int, default=10)
    p.add_argument("--tests-per-class", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()

    out = Path(args.out)
    ds = ev.reference_fleet()
    spec = ev.ExperimentSpec(runs=args.runs, tests_per_class=args.tests_per_class, seed=args.seed)
    t0 = time.perf_counter()
    trained = ev.train_models(ds, spec)
    print(f"trained {len(trained[0])} classifiers in {time.perf_counter() - t0:.1f} s")

    for label, window in (("full", None), ("limited_120deg", (0.0, 60.0))):
        s = replace(spec, azimuth_window=window)
        rep = ev.run_experiment(ds, s, trained=trained)
        (out / label).mkdir(parents=True, exist_ok=True)
        rep.save_json(out / label / "report.json")
        rep.write_csvs(out / label)
        print(f"\n{label}")
        print("classifier  " + " ".join(f"{snr:>7g}" for snr in rep.snr_grid_db))
        for name in rep.classifiers:
            print(f"{name:11s} " + " ".join(f"{rep.mean_accuracy(name, snr):7.3f}" for snr in rep.snr_grid_db))


if __name__ == "__main__":
    main()
